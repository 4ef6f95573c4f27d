#pragma once

#include <vector>

#include "omnisonic/audio.hpp"
#include "omnisonic/tensor.hpp"

namespace omnisonic {

// Latent tensor, channels x time x freq.
struct Latent {
    Tensor data;  // shape {C, T_l, F_l}
    int channels() const { return data.shape[0]; }
    int time() const { return data.shape[1]; }
    int freq() const { return data.shape[2]; }
};

struct CodecConfig {
    int patch_t = 4;
    int patch_f = 4;
    uint64_t seed = 0x05EC0DECull;
    // keep only the first 8 projection coordinates per patch (lossy; exists
    // for shape parity with the 8x256x16 layout)
    bool truncate_8 = false;
    // debugging aid: identity projection instead of the random orthonormal one
    bool identity_basis = false;
};

// Orthonormal patch transform with per-channel standardization. encode is
// exactly invertible by decode (unless truncate_8 drops coordinates).
class LatentCodec {
  public:
    explicit LatentCodec(const CodecConfig& cfg);

    // Fit per-channel mean/std over a calibration corpus (pre-standardization
    // projections). Until called, mean=0/std=1.
    void calibrate(const std::vector<MelSpec>& corpus);
    void set_stats(std::vector<double> means, std::vector<double> stds);

    Latent encode(const MelSpec& m) const;
    MelSpec decode(const Latent& x) const;

    const CodecConfig& config() const { return cfg_; }
    const TensorT<double>& basis() const { return q_; }
    const std::vector<double>& means() const { return mean_; }
    const std::vector<double>& stds() const { return std_; }
    int out_channels() const { return cfg_.truncate_8 ? 8 : cfg_.patch_t * cfg_.patch_f; }

  private:
    CodecConfig cfg_;
    TensorT<double> q_;  // (p_t*p_f) x (p_t*p_f), orthonormal rows
    std::vector<double> mean_, std_;
};

}  // namespace omnisonic
