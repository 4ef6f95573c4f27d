#include "omnisonic/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "omnisonic/rng.hpp"

namespace omnisonic {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

int to_int(const std::string& key, const std::string& v) {
    try {
        size_t used = 0;
        const int x = std::stoi(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw config_error("config: bad integer for " + key + ": '" + v + "'");
    }
}

uint64_t to_u64(const std::string& key, const std::string& v) {
    try {
        size_t used = 0;
        const uint64_t x = std::stoull(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw config_error("config: bad unsigned for " + key + ": '" + v + "'");
    }
}

double to_double(const std::string& key, const std::string& v) {
    try {
        size_t used = 0;
        const double x = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw config_error("config: bad number for " + key + ": '" + v + "'");
    }
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw config_error("config: bad bool for " + key + ": '" + v + "'");
}

std::vector<std::string> split_csv(const std::string& v) {
    std::vector<std::string> out;
    std::string cur;
    std::stringstream ss(v);
    while (std::getline(ss, cur, ',')) {
        cur = trim(cur);
        if (!cur.empty()) out.push_back(cur);
    }
    return out;
}

std::string join_csv(const std::vector<std::string>& v) {
    std::string out;
    for (size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + v[i];
    return out;
}

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void RunConfig::finalize() {
    if (clip_samples <= 0 || clip_samples % stft.hop != 0)
        throw config_error("config: clip_samples must be a positive multiple of the hop");
    const int frames = clip_samples / stft.hop;
    if (frames % codec.patch_t != 0)
        throw config_error("config: frame count not divisible by codec patch_t");
    if (stft.n_mels % codec.patch_f != 0)
        throw config_error("config: n_mels not divisible by codec patch_f");
    model.latent_c = codec.truncate_8 ? 8 : codec.patch_t * codec.patch_f;
    model.latent_t = frames / codec.patch_t;
    model.latent_f = stft.n_mels / codec.patch_f;
    try {
        model.validate();
    } catch (const std::exception& e) {
        throw config_error(std::string("config: ") + e.what());
    }
    if (train.batch < 1 || train.stage1_steps < 1 || train.stage2_steps < 1)
        throw config_error("config: training steps and batch must be positive");
    if (snr_lo > snr_hi) throw config_error("config: snr_lo > snr_hi");
    if (mix_train_count < 4 || mix_val_count < 4)
        throw config_error("config: dataset counts too small");
}

void apply_config_line(RunConfig& c, const std::string& key, const std::string& v) {
    if (key == "audio.sample_rate") c.sample_rate = to_int(key, v);
    else if (key == "audio.clip_samples") c.clip_samples = to_int(key, v);
    else if (key == "stft.fft_size") c.stft.fft_size = to_int(key, v);
    else if (key == "stft.hop") c.stft.hop = to_int(key, v);
    else if (key == "stft.win_size") c.stft.win_size = to_int(key, v);
    else if (key == "stft.n_mels") c.stft.n_mels = to_int(key, v);
    else if (key == "stft.fmin") c.stft.fmin = to_double(key, v);
    else if (key == "stft.fmax") c.stft.fmax = to_double(key, v);
    else if (key == "codec.patch_t") c.codec.patch_t = to_int(key, v);
    else if (key == "codec.patch_f") c.codec.patch_f = to_int(key, v);
    else if (key == "codec.seed") c.codec.seed = to_u64(key, v);
    else if (key == "codec.truncate_8") c.codec.truncate_8 = to_bool(key, v);
    else if (key == "codec.identity_basis") c.codec.identity_basis = to_bool(key, v);
    else if (key == "model.patch") c.model.patch = to_int(key, v);
    else if (key == "model.hidden") c.model.hidden = to_int(key, v);
    else if (key == "model.depth") c.model.depth = to_int(key, v);
    else if (key == "model.heads") c.model.heads = to_int(key, v);
    else if (key == "model.mlp_ratio") c.model.mlp_ratio = to_int(key, v);
    else if (key == "model.d_env") c.model.dims.d_env = to_int(key, v);
    else if (key == "model.d_sp") c.model.dims.d_sp = to_int(key, v);
    else if (key == "model.d_vis") c.model.dims.d_vis = to_int(key, v);
    else if (key == "model.self_attention") c.model.self_attention = to_bool(key, v);
    else if (key == "model.share_ca_env") c.model.share_ca_env = to_bool(key, v);
    else if (key == "model.gate_frozen") c.model.gate_frozen = to_bool(key, v);
    else if (key == "model.max_text_len") c.model.max_text_len = to_int(key, v);
    else if (key == "model.rope_base") c.model.rope_base = to_double(key, v);
    else if (key == "model.init_seed") c.model.init_seed = to_u64(key, v);
    else if (key == "model.frozen_seed") c.model.frozen_seed = to_u64(key, v);
    else if (key == "model.visual_frames") c.model.visual_frames = to_int(key, v);
    else if (key == "train.lr") c.train.lr = to_double(key, v);
    else if (key == "train.wd") c.train.wd = to_double(key, v);
    else if (key == "train.beta1") c.train.beta1 = to_double(key, v);
    else if (key == "train.beta2") c.train.beta2 = to_double(key, v);
    else if (key == "train.eps") c.train.eps = to_double(key, v);
    else if (key == "train.dropout_p") c.train.dropout_p = to_double(key, v);
    else if (key == "train.stage1_steps") c.train.stage1_steps = to_int(key, v);
    else if (key == "train.stage2_steps") c.train.stage2_steps = to_int(key, v);
    else if (key == "train.batch") c.train.batch = to_int(key, v);
    else if (key == "train.val_every") c.train.val_every = to_int(key, v);
    else if (key == "train.seed") c.train.seed = to_u64(key, v);
    else if (key == "sample.steps") c.sample_steps = to_int(key, v);
    else if (key == "scenarios.n_env") c.scenarios_n_env = to_int(key, v);
    else if (key == "scenarios.n_speech") c.scenarios_n_speech = to_int(key, v);
    else if (key == "scenarios.library_seed") c.library_seed = to_u64(key, v);
    else if (key == "scenarios.snr_lo") c.snr_lo = to_double(key, v);
    else if (key == "scenarios.snr_hi") c.snr_hi = to_double(key, v);
    else if (key == "scenarios.blocklist") c.blocklist = split_csv(v);
    else if (key == "bench.s1") c.bench.s1 = to_int(key, v);
    else if (key == "bench.s2") c.bench.s2 = to_int(key, v);
    else if (key == "bench.s3") c.bench.s3 = to_int(key, v);
    else if (key == "mix.train_count") c.mix_train_count = to_int(key, v);
    else if (key == "mix.val_count") c.mix_val_count = to_int(key, v);
    else throw config_error("config: unknown key '" + key + "'");
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw config_error("config: cannot open " + path);
    RunConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw config_error("config: missing '=' at " + path + ":" + std::to_string(lineno));
        apply_config_line(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    cfg.finalize();
    return cfg;
}

std::string config_dump(const RunConfig& c) {
    std::ostringstream o;
    o << "audio.sample_rate = " << c.sample_rate << "\n";
    o << "audio.clip_samples = " << c.clip_samples << "\n";
    o << "stft.fft_size = " << c.stft.fft_size << "\n";
    o << "stft.hop = " << c.stft.hop << "\n";
    o << "stft.win_size = " << c.stft.win_size << "\n";
    o << "stft.n_mels = " << c.stft.n_mels << "\n";
    o << "stft.fmin = " << fmt_double(c.stft.fmin) << "\n";
    o << "stft.fmax = " << fmt_double(c.stft.fmax) << "\n";
    o << "codec.patch_t = " << c.codec.patch_t << "\n";
    o << "codec.patch_f = " << c.codec.patch_f << "\n";
    o << "codec.seed = " << c.codec.seed << "\n";
    o << "codec.truncate_8 = " << (c.codec.truncate_8 ? "true" : "false") << "\n";
    o << "codec.identity_basis = " << (c.codec.identity_basis ? "true" : "false") << "\n";
    o << "model.patch = " << c.model.patch << "\n";
    o << "model.hidden = " << c.model.hidden << "\n";
    o << "model.depth = " << c.model.depth << "\n";
    o << "model.heads = " << c.model.heads << "\n";
    o << "model.mlp_ratio = " << c.model.mlp_ratio << "\n";
    o << "model.d_env = " << c.model.dims.d_env << "\n";
    o << "model.d_sp = " << c.model.dims.d_sp << "\n";
    o << "model.d_vis = " << c.model.dims.d_vis << "\n";
    o << "model.self_attention = " << (c.model.self_attention ? "true" : "false") << "\n";
    o << "model.share_ca_env = " << (c.model.share_ca_env ? "true" : "false") << "\n";
    o << "model.gate_frozen = " << (c.model.gate_frozen ? "true" : "false") << "\n";
    o << "model.max_text_len = " << c.model.max_text_len << "\n";
    o << "model.rope_base = " << fmt_double(c.model.rope_base) << "\n";
    o << "model.init_seed = " << c.model.init_seed << "\n";
    o << "model.frozen_seed = " << c.model.frozen_seed << "\n";
    o << "model.visual_frames = " << c.model.visual_frames << "\n";
    o << "train.lr = " << fmt_double(c.train.lr) << "\n";
    o << "train.wd = " << fmt_double(c.train.wd) << "\n";
    o << "train.beta1 = " << fmt_double(c.train.beta1) << "\n";
    o << "train.beta2 = " << fmt_double(c.train.beta2) << "\n";
    o << "train.eps = " << fmt_double(c.train.eps) << "\n";
    o << "train.dropout_p = " << fmt_double(c.train.dropout_p) << "\n";
    o << "train.stage1_steps = " << c.train.stage1_steps << "\n";
    o << "train.stage2_steps = " << c.train.stage2_steps << "\n";
    o << "train.batch = " << c.train.batch << "\n";
    o << "train.val_every = " << c.train.val_every << "\n";
    o << "train.seed = " << c.train.seed << "\n";
    o << "sample.steps = " << c.sample_steps << "\n";
    o << "scenarios.n_env = " << c.scenarios_n_env << "\n";
    o << "scenarios.n_speech = " << c.scenarios_n_speech << "\n";
    o << "scenarios.library_seed = " << c.library_seed << "\n";
    o << "scenarios.snr_lo = " << fmt_double(c.snr_lo) << "\n";
    o << "scenarios.snr_hi = " << fmt_double(c.snr_hi) << "\n";
    o << "scenarios.blocklist = " << join_csv(c.blocklist) << "\n";
    o << "bench.s1 = " << c.bench.s1 << "\n";
    o << "bench.s2 = " << c.bench.s2 << "\n";
    o << "bench.s3 = " << c.bench.s3 << "\n";
    o << "mix.train_count = " << c.mix_train_count << "\n";
    o << "mix.val_count = " << c.mix_val_count << "\n";
    return o.str();
}

uint64_t config_hash(const RunConfig& cfg) { return Rng::fnv1a64(config_dump(cfg)); }

}  // namespace omnisonic
