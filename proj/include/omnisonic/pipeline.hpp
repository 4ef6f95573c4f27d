#pragma once

#include <functional>
#include <string>
#include <vector>

#include "omnisonic/checkpoint.hpp"
#include "omnisonic/codec.hpp"
#include "omnisonic/config.hpp"
#include "omnisonic/flow.hpp"
#include "omnisonic/scenarios.hpp"

namespace omnisonic {

// OMNISONIC_THREADS caps the worker count (default: hardware concurrency).
int thread_budget();
void parallel_for(int n, const std::function<void(int)>& fn);

// ---------------------------------------------------------------------------
// dataset

// Writes <out>/train and <out>/val, each manifest.json + wav/ clips. Items
// cycle scenarios 0,1,2,3 (scenario 0 = the speech-only pretraining form).
void build_mix_dataset(const RunConfig& cfg, const std::string& out_dir);

struct Dataset {
    std::vector<SampleManifest> items;
    std::vector<MelSpec> mels;  // aligned with items
};

// Loads manifest.json + wav/ from one split directory; missing files are a
// config error (exit code 2 territory).
Dataset load_dataset(const RunConfig& cfg, const std::string& split_dir);

// ---------------------------------------------------------------------------
// optimizer

// AdamW with decoupled weight decay: p *= (1 - lr*wd) before the adaptive
// update. Moments kept in double for run-to-run determinism.
class AdamW {
  public:
    explicit AdamW(const TrainParams& tp) : tp_(tp) {}
    void step(ParamStore<float>& params);

  private:
    TrainParams tp_;
    int t_ = 0;
    std::vector<std::vector<double>> m_, v_;  // per-param, registration order
};

// ---------------------------------------------------------------------------
// training

struct TrainResult {
    int stage = 0;
    int steps = 0;
    double final_train_loss = 0.0;
    double final_val_loss = 0.0;
    double baseline_val_loss = 0.0;  // zero-velocity model on the same pairs
    uint64_t content_hash = 0;
    std::string checkpoint_dir;
};

// Runs one stage. init_checkpoint may be empty (cold start: codec calibrated
// from the training mels). Writes <out>/checkpoint, <out>/loss_train.csv,
// <out>/loss_val.csv, <out>/train_report.json.
TrainResult train_stage(const RunConfig& cfg, int stage, const std::string& data_dir,
                        const std::string& out_dir, const std::string& init_checkpoint);

// ---------------------------------------------------------------------------
// generation

struct GenOptions {
    CfgScales scales;
    int steps = 50;
    uint64_t seed = 1;
};

struct GenEntry {
    std::string id;
    uint64_t seed = 0;
    Waveform wav;
    MelSpec mel;
};

// Loaded velocity model + codec, ready for sampling.
struct Sampler {
    RunConfig cfg;
    std::shared_ptr<Model<float>> model;
    std::shared_ptr<LatentCodec> codec;
    uint64_t content_hash = 0;

    static Sampler load(const RunConfig& cfg, const std::string& checkpoint_dir);
    GenEntry generate_one(const SampleManifest& m, const GenOptions& opt, int index) const;
};

// One WAV + mel CSV per manifest entry plus report.json with per-entry seeds.
void generate_from_manifests(const Sampler& sampler, const std::vector<SampleManifest>& entries,
                             const GenOptions& opt, const std::string& out_dir);

// ---------------------------------------------------------------------------
// evaluation

struct EvalResult {
    double fad = 0.0;
    double mkl = 0.0;
    double wer = 0.0, cer = 0.0, per = 0.0;
    double align_mean = 0.0;  // 100 * cosine, averaged over pairs
    int n = 0;
};

// Pairs generated and reference waveforms positionally (sorted filenames).
EvalResult evaluate_pairs(const RunConfig& cfg, const std::vector<Waveform>& gen,
                          const std::vector<Waveform>& ref);
EvalResult evaluate_dirs(const RunConfig& cfg, const std::string& gen_dir,
                         const std::string& ref_dir);
void write_eval_csv(const std::string& path, const EvalResult& r);

// Accepts either a directory of .wav files or one with a wav/ subdirectory.
std::vector<std::string> list_wavs(const std::string& dir);

// ---------------------------------------------------------------------------
// CFG sweep

struct SweepRow {
    CfgScales scales;
    double fad = 0.0;
    double align_mean = 0.0;
    double wer = 0.0;
};

// Generates with each scale triple over the benchmark entries and scores
// against the benchmark reference mixtures. limit > 0 caps the entry count.
std::vector<SweepRow> run_sweep(const Sampler& sampler, const std::string& bench_dir,
                                const std::vector<CfgScales>& grid, int steps, uint64_t seed,
                                int limit);
void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows);

// ---------------------------------------------------------------------------
// gradient checking

struct GradGroup {
    std::string name;
    double worst_rel_err = 0.0;
    size_t coords = 0;
};

struct GradCheckReport {
    std::vector<GradGroup> groups;
    double worst = 0.0;
    double tolerance = 1e-4;
    bool pass = false;
};

// Central finite differences against the tape gradients on a small
// double-precision model, grouped by parameter role. corrupt_gradients
// injects an error (negative control).
GradCheckReport run_gradcheck(bool corrupt_gradients);

}  // namespace omnisonic
