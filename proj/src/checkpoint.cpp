#include "omnisonic/checkpoint.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>

#include "../vendor/json.hpp"
#include "omnisonic/ostn.hpp"
#include "omnisonic/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace omnisonic {

namespace {

constexpr int kFormatVersion = 1;

uint64_t tensor_hash(const Tensor& t) {
    uint64_t h = 1469598103934665603ull;
    auto mix = [&h](uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            h ^= (v >> (8 * i)) & 0xff;
            h *= 1099511628211ull;
        }
    };
    mix(t.shape.size());
    for (int d : t.shape) mix(static_cast<uint64_t>(d));
    for (float v : t.data) {
        uint32_t bits;
        std::memcpy(&bits, &v, 4);
        mix(bits);
    }
    return h;
}

std::string hex64(uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

json read_manifest(const std::string& dir) {
    std::ifstream f(dir + "/manifest.json");
    if (!f) throw checkpoint_error("checkpoint: cannot open " + dir + "/manifest.json");
    json m;
    try {
        f >> m;
    } catch (const std::exception& e) {
        throw checkpoint_error("checkpoint: bad manifest: " + std::string(e.what()));
    }
    return m;
}

}  // namespace

uint64_t params_content_hash(const ParamStore<float>& params) {
    uint64_t h = 1469598103934665603ull;
    for (const auto& name : params.names) {
        h ^= Rng::fnv1a64(name);
        h *= 1099511628211ull;
        h ^= tensor_hash(params.get(name)->value);
        h *= 1099511628211ull;
    }
    return h;
}

void save_checkpoint(const std::string& dir, const ParamStore<float>& params,
                     const RunConfig& cfg, const std::vector<double>& codec_means,
                     const std::vector<double>& codec_stds) {
    fs::create_directories(fs::path(dir) / "weights");
    json m;
    m["format_version"] = kFormatVersion;
    m["config_hash"] = hex64(config_hash(cfg));
    m["codec"] = {{"means", codec_means}, {"stds", codec_stds}};
    json plist = json::array();
    int idx = 0;
    for (const auto& name : params.names) {
        const Tensor& t = params.get(name)->value;
        char fname[32];
        std::snprintf(fname, sizeof(fname), "%04d.ostn", idx++);
        write_ostn((fs::path(dir) / "weights" / fname).string(), t);
        plist.push_back({{"name", name},
                         {"shape", t.shape},
                         {"file", std::string("weights/") + fname},
                         {"hash", hex64(tensor_hash(t))}});
    }
    m["params"] = std::move(plist);
    m["content_hash"] = hex64(params_content_hash(params));
    std::ofstream out(dir + "/manifest.json");
    if (!out) throw checkpoint_error("checkpoint: cannot write " + dir + "/manifest.json");
    out << m.dump(2) << "\n";
}

LoadedCheckpoint load_checkpoint(const std::string& dir, ParamStore<float>& params,
                                 const RunConfig& cfg) {
    const json m = read_manifest(dir);
    try {
        if (m.at("format_version").get<int>() != kFormatVersion)
            throw checkpoint_error("checkpoint: unsupported format version");
        if (m.at("config_hash").get<std::string>() != hex64(config_hash(cfg)))
            throw checkpoint_error("checkpoint: config hash mismatch (was this checkpoint "
                                   "produced by a different configuration?)");
        const json& plist = m.at("params");
        if (plist.size() != params.names.size())
            throw checkpoint_error("checkpoint: parameter count mismatch");
        for (size_t i = 0; i < plist.size(); ++i) {
            const json& e = plist[i];
            const std::string name = e.at("name").get<std::string>();
            if (name != params.names[i])
                throw checkpoint_error("checkpoint: parameter order mismatch at " + name);
            Tensor t = read_ostn((fs::path(dir) / e.at("file").get<std::string>()).string());
            if (t.shape != e.at("shape").get<std::vector<int>>())
                throw checkpoint_error("checkpoint: stored shape mismatch for " + name);
            if (hex64(tensor_hash(t)) != e.at("hash").get<std::string>())
                throw checkpoint_error("checkpoint: tensor hash mismatch for " + name);
            auto& node = *params.get(name);
            if (t.shape != node.value.shape)
                throw checkpoint_error("checkpoint: model shape mismatch for " + name);
            node.value = std::move(t);
        }
        LoadedCheckpoint out;
        out.codec_means = m.at("codec").at("means").get<std::vector<double>>();
        out.codec_stds = m.at("codec").at("stds").get<std::vector<double>>();
        out.content_hash = params_content_hash(params);
        if (hex64(out.content_hash) != m.at("content_hash").get<std::string>())
            throw checkpoint_error("checkpoint: content hash mismatch");
        return out;
    } catch (const json::exception& e) {
        throw checkpoint_error("checkpoint: malformed manifest: " + std::string(e.what()));
    }
}

}  // namespace omnisonic
