#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "omnisonic/audio.hpp"
#include "omnisonic/codec.hpp"
#include "omnisonic/scenarios.hpp"
#include "omnisonic/triattn.hpp"

namespace omnisonic {

// exit code 2
struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
// exit code 3
struct checkpoint_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
// exit code 4
struct eval_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TrainParams {
    double lr = 2e-3;
    double wd = 1e-2;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    double dropout_p = 0.1;
    int stage1_steps = 300;
    int stage2_steps = 400;
    int batch = 4;
    int val_every = 50;
    uint64_t seed = 1234;
};

struct RunConfig {
    int sample_rate = 16000;
    int clip_samples = 32000;
    StftConfig stft{1024, 160, 1024, 32, 0.0, 8000.0};
    CodecConfig codec{4, 4, 0x05EC0DECull, false, false};
    ModelConfig model;  // latent dims filled by finalize()
    TrainParams train;
    int sample_steps = 50;
    int scenarios_n_env = 16;
    int scenarios_n_speech = 16;
    uint64_t library_seed = 777;
    double snr_lo = -5.0, snr_hi = 20.0;
    std::vector<std::string> blocklist = {"speech", "voice", "say"};
    BenchCounts bench{12, 16, 12};
    int mix_train_count = 60;  // scenario-0 items plus an even S1/S2/S3 split
    int mix_val_count = 16;

    // derive latent dims and validate divisibility chains
    void finalize();
    MixParams mix_params() const { return {snr_lo, snr_hi, model.visual_frames}; }
    SourceLibrary make_library() const {
        return SourceLibrary::build(scenarios_n_env, scenarios_n_speech, library_seed,
                                    sample_rate, clip_samples, blocklist);
    }
};

// key = value lines, '#' comments, unknown keys rejected
RunConfig parse_config_file(const std::string& path);
void apply_config_line(RunConfig& cfg, const std::string& key, const std::string& value);

// canonical dump (fixed key order); its FNV-1a hash ties checkpoints to the
// exact configuration that produced them
std::string config_dump(const RunConfig& cfg);
uint64_t config_hash(const RunConfig& cfg);

}  // namespace omnisonic
