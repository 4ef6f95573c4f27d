#pragma once

#include <string>
#include <vector>

#include "omnisonic/config.hpp"
#include "omnisonic/params.hpp"

namespace omnisonic {

// OSTN bundle: <dir>/manifest.json plus <dir>/weights/<idx>.ostn per tensor.
// The manifest records names, shapes, per-tensor hashes, the codec
// standardization constants, and the config hash of the producing run.
void save_checkpoint(const std::string& dir, const ParamStore<float>& params,
                     const RunConfig& cfg, const std::vector<double>& codec_means,
                     const std::vector<double>& codec_stds);

struct LoadedCheckpoint {
    std::vector<double> codec_means, codec_stds;
    uint64_t content_hash = 0;
};

// Loads tensors into an already-built ParamStore; any mismatch in config
// hash, parameter set, shapes, or stored hashes throws checkpoint_error.
LoadedCheckpoint load_checkpoint(const std::string& dir, ParamStore<float>& params,
                                 const RunConfig& cfg);

// Order-sensitive hash over all parameter names/shapes/payloads.
uint64_t params_content_hash(const ParamStore<float>& params);

}  // namespace omnisonic
