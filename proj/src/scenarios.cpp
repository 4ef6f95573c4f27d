#include "omnisonic/scenarios.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "json.hpp"

namespace omnisonic {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kCharSlot = 1280;  // 80 ms per character at 16 kHz
constexpr double kCharF0 = 400.0, kCharStep = 35.0;

const std::vector<std::string> kAdjectives = {
    "low", "deep", "bright", "soft", "harsh", "steady",
    "gentle", "rolling", "sharp", "warm", "hollow", "thin"};
const std::vector<std::string> kTextures = {
    "hum", "drone", "rumble", "chime", "whir", "rustle",
    "buzz", "ringing", "crackle", "murmur", "whistle", "throb"};
const std::vector<std::string> kSources = {
    "engine", "fan", "bell", "wind", "rain", "machine",
    "forest", "stream", "crowd", "kettle", "motor", "wires"};
const std::vector<std::string> kWords = {
    "ona", "tib", "rek", "sul", "vem", "pad", "kiro", "mesa",
    "lune", "davo", "rin", "tolu", "bek", "sani", "muro", "zeta"};

std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

double char_freq(char c) { return kCharF0 + kCharStep * (c - 'a'); }

}  // namespace

SourceLibrary SourceLibrary::build(int n_env, int n_speech, uint64_t seed, int sample_rate,
                                   int clip_samples, const std::vector<std::string>& blocklist) {
    if (n_env < 4 || n_speech < 4) fail("library: need at least 4 recipes per kind for splits");
    SourceLibrary lib;
    lib.sample_rate = sample_rate;
    lib.clip_samples = clip_samples;
    std::vector<std::string> captions;
    for (int i = 0; i < n_env; ++i) {
        EnvRecipe r;
        char buf[16];
        std::snprintf(buf, sizeof(buf), "env%03d", i);
        r.id = buf;
        r.caption = kAdjectives[i % kAdjectives.size()] + " " +
                    kTextures[(i / 3) % kTextures.size()] + " of " +
                    kSources[(i * 5 + 2) % kSources.size()];
        r.seed = Rng::mix64(seed ^ (0xE0000ull + i));
        captions.push_back(r.caption);
        lib.envs.push_back(std::move(r));
    }
    const CaptionFilterResult filt = filter_env_captions(captions, blocklist);
    if (!filt.removed.empty()) fail("library: generated env caption hit the blocklist");
    for (int i = 0; i < n_speech; ++i) {
        SpeechRecipe r;
        char buf[16];
        std::snprintf(buf, sizeof(buf), "sp%03d", i);
        r.id = buf;
        r.transcript = kWords[i % kWords.size()] + " " + kWords[(i * 7 + 3) % kWords.size()];
        r.seed = Rng::mix64(seed ^ (0x50000ull + i));
        lib.speeches.push_back(std::move(r));
    }
    return lib;
}

SourceLibrary SourceLibrary::train_split() const {
    SourceLibrary s = *this;
    s.envs.assign(envs.begin(), envs.end() - envs.size() / 4);
    s.speeches.assign(speeches.begin(), speeches.end() - speeches.size() / 4);
    return s;
}

SourceLibrary SourceLibrary::bench_split() const {
    SourceLibrary s = *this;
    s.envs.assign(envs.end() - envs.size() / 4, envs.end());
    s.speeches.assign(speeches.end() - speeches.size() / 4, speeches.end());
    if (s.envs.empty() || s.speeches.empty()) fail("library: too small for a disjoint bench split");
    return s;
}

Waveform SourceLibrary::synth_env(const EnvRecipe& r) const {
    Rng rng(r.seed);
    const double base = 100.0 * std::pow(2.0, rng.uniform() * 3.2);  // 100..920 Hz
    const int partials = 1 + static_cast<int>(rng.below(3));
    const double noise_amp = 0.02 + 0.10 * rng.uniform();
    const double am_rate = 0.5 + 5.5 * rng.uniform();
    const double am_phase = rng.uniform() * 2.0 * kPi;
    std::vector<double> phase(partials);
    for (auto& ph : phase) ph = rng.uniform() * 2.0 * kPi;

    Waveform w;
    w.sample_rate = sample_rate;
    w.samples.resize(clip_samples);
    Rng noise = rng.fork("noise");
    for (int i = 0; i < clip_samples; ++i) {
        const double t = double(i) / sample_rate;
        double v = 0.0;
        for (int j = 0; j < partials; ++j)
            v += std::sin(2.0 * kPi * base * (j + 1) * t + phase[j]) / (j + 1);
        const double am = 0.7 + 0.3 * std::sin(2.0 * kPi * am_rate * t + am_phase);
        w.samples[i] = static_cast<float>(0.22 * v * am + noise_amp * noise.normal() * 0.3);
    }
    return w;
}

Waveform synth_char_speech(const std::string& transcript, uint64_t seed, int sample_rate,
                           int clip_samples) {
    Waveform w;
    w.sample_rate = sample_rate;
    w.samples.assign(clip_samples, 0.0f);
    Rng rng(seed);
    const double jitter = rng.uniform() * 2.0 * kPi;  // per-utterance phase
    const std::string text = lower(transcript);
    int pos = 0;
    for (char c : text) {
        if (pos + kCharSlot > clip_samples) break;
        if (c >= 'a' && c <= 'z') {
            const double f = char_freq(c);
            for (int i = 0; i < kCharSlot; ++i) {
                const double t = double(i) / sample_rate;
                // 10 ms raised-cosine edges to avoid clicks
                const int ramp = sample_rate / 100;
                double env = 1.0;
                if (i < ramp) env = 0.5 * (1.0 - std::cos(kPi * i / ramp));
                if (i >= kCharSlot - ramp)
                    env = 0.5 * (1.0 - std::cos(kPi * (kCharSlot - 1 - i) / ramp));
                const double v = std::sin(2.0 * kPi * f * t + jitter) +
                                 0.3 * std::sin(2.0 * kPi * 2.0 * f * t + jitter);
                w.samples[pos + i] = static_cast<float>(0.25 * env * v);
            }
        }
        pos += kCharSlot;  // silence slot for spaces / unknown chars
    }
    return w;
}

Waveform SourceLibrary::synth_speech(const SpeechRecipe& r) const {
    return synth_char_speech(r.transcript, r.seed, sample_rate, clip_samples);
}

std::string decode_transcript(const Waveform& w) {
    const int slots = static_cast<int>(w.samples.size()) / kCharSlot;
    std::string out;
    for (int s = 0; s < slots; ++s) {
        const float* x = &w.samples[static_cast<size_t>(s) * kCharSlot];
        double energy = 0.0;
        for (int i = 0; i < kCharSlot; ++i) energy += double(x[i]) * x[i];
        energy /= kCharSlot;
        if (energy < 1e-4) {
            out.push_back(' ');
            continue;
        }
        // Goertzel-style scoring of each candidate character frequency
        double best_score = -1.0;
        char best = '?';
        for (char c = 'a'; c <= 'z'; ++c) {
            const double f = char_freq(c);
            std::complex<double> acc(0.0, 0.0);
            for (int i = 0; i < kCharSlot; ++i) {
                const double ang = -2.0 * kPi * f * i / w.sample_rate;
                acc += double(x[i]) * std::complex<double>(std::cos(ang), std::sin(ang));
            }
            const double score = std::abs(acc);
            if (score > best_score) {
                best_score = score;
                best = c;
            }
        }
        out.push_back(best);
    }
    // trim and collapse whitespace
    std::string clean;
    for (char c : out) {
        if (c == ' ' && (clean.empty() || clean.back() == ' ')) continue;
        clean.push_back(c);
    }
    while (!clean.empty() && clean.back() == ' ') clean.pop_back();
    return clean;
}

const EnvRecipe& SourceLibrary::env_by_id(const std::string& id) const {
    for (const auto& r : envs)
        if (r.id == id) return r;
    fail("library: unknown env recipe " + id);
}

const SpeechRecipe& SourceLibrary::speech_by_id(const std::string& id) const {
    for (const auto& r : speeches)
        if (r.id == id) return r;
    fail("library: unknown speech recipe " + id);
}

CaptionFilterResult filter_env_captions(const std::vector<std::string>& captions,
                                        const std::vector<std::string>& blocklist) {
    CaptionFilterResult r;
    for (const auto& cap : captions) {
        const std::string low = lower(cap);
        bool hit = false;
        for (const auto& word : blocklist) {
            if (!word.empty() && low.find(lower(word)) != std::string::npos) {
                hit = true;
                break;
            }
        }
        (hit ? r.removed : r.kept).push_back(cap);
    }
    return r;
}

BuiltSample build_training_sample(int scenario, const SourceLibrary& lib, Rng& rng,
                                  const MixParams& mp) {
    if (lib.envs.empty() || lib.speeches.empty()) fail("build_sample: library missing a kind");
    BuiltSample out;
    SampleManifest& m = out.manifest;
    m.scenario = scenario;
    m.visual_frames = mp.visual_frames;
    m.visual_seed = rng.next_u64();

    const auto draw_env = [&]() -> const EnvRecipe& { return lib.envs[rng.below(lib.envs.size())]; };
    const auto draw_sp = [&]() -> const SpeechRecipe& {
        return lib.speeches[rng.below(lib.speeches.size())];
    };
    const auto snr = [&] { return rng.uniform(mp.snr_lo, mp.snr_hi); };

    if (scenario == 0) {  // speech-only pretraining sample
        const SpeechRecipe& sp = draw_sp();
        m.on_kind = "speech";
        m.on_recipe_id = sp.id;
        m.transcription = sp.transcript;
        m.visual_label = sp.id;
        out.mix = lib.synth_speech(sp);
        out.stems.emplace_back("on", out.mix);
    } else if (scenario == 1) {  // on env + off speech
        const EnvRecipe& env = draw_env();
        const SpeechRecipe& sp = draw_sp();
        m.on_kind = "env";
        m.on_recipe_id = env.id;
        m.on_env_caption = env.caption;
        m.transcription = sp.transcript;
        m.visual_label = env.id;
        const Waveform pw = lib.synth_env(env), iw = lib.synth_speech(sp);
        const double s = snr();
        MixResult mr = mix_at_snr(pw, iw, s);
        m.offs.push_back({"speech", sp.id, "", sp.transcript, s, mr.gains[0]});
        m.mix_norm_scale = mr.norm_scale;
        out.mix = std::move(mr.mix);
        out.stems.emplace_back("on", pw);
        out.stems.emplace_back("off0", iw);
    } else if (scenario == 2) {  // on speech + off env
        const SpeechRecipe& sp = draw_sp();
        const EnvRecipe& env = draw_env();
        m.on_kind = "speech";
        m.on_recipe_id = sp.id;
        m.off_env_caption = env.caption;
        m.transcription = sp.transcript;
        m.visual_label = sp.id;
        const Waveform pw = lib.synth_speech(sp), iw = lib.synth_env(env);
        const double s = snr();
        MixResult mr = mix_at_snr(pw, iw, s);
        m.offs.push_back({"env", env.id, env.caption, "", s, mr.gains[0]});
        m.mix_norm_scale = mr.norm_scale;
        out.mix = std::move(mr.mix);
        out.stems.emplace_back("on", pw);
        out.stems.emplace_back("off0", iw);
    } else if (scenario == 3) {  // on env + off env + off speech
        const EnvRecipe& env1 = draw_env();
        const EnvRecipe* env2 = &draw_env();
        if (lib.envs.size() > 1) {
            while (env2->id == env1.id) env2 = &draw_env();
        }
        const SpeechRecipe& sp = draw_sp();
        m.on_kind = "env";
        m.on_recipe_id = env1.id;
        m.on_env_caption = env1.caption;
        m.off_env_caption = env2->caption;
        m.transcription = sp.transcript;
        m.visual_label = env1.id;
        const Waveform pw = lib.synth_env(env1);
        const Waveform iw1 = lib.synth_env(*env2), iw2 = lib.synth_speech(sp);
        const double s1 = snr(), s2 = snr();
        MixResult mr = mix_at_snr_multi(pw, {{iw1, s1}, {iw2, s2}});
        m.offs.push_back({"env", env2->id, env2->caption, "", s1, mr.gains[0]});
        m.offs.push_back({"speech", sp.id, "", sp.transcript, s2, mr.gains[1]});
        m.mix_norm_scale = mr.norm_scale;
        out.mix = std::move(mr.mix);
        out.stems.emplace_back("on", pw);
        out.stems.emplace_back("off0", iw1);
        out.stems.emplace_back("off1", iw2);
    } else {
        fail("build_sample: scenario must be 0..3");
    }
    out.cond = condition_set_from_manifest(m);
    return out;
}

BuiltSample rebuild_sample(const SampleManifest& m, const SourceLibrary& lib,
                           const MixParams& mp) {
    BuiltSample out;
    out.manifest = m;
    const Waveform pw = m.on_kind == "env" ? lib.synth_env(lib.env_by_id(m.on_recipe_id))
                                           : lib.synth_speech(lib.speech_by_id(m.on_recipe_id));
    out.stems.emplace_back("on", pw);
    if (m.offs.empty()) {
        out.mix = pw;
    } else {
        std::vector<std::pair<Waveform, double>> intfs;
        for (size_t i = 0; i < m.offs.size(); ++i) {
            const OffSource& o = m.offs[i];
            Waveform iw = o.kind == "env" ? lib.synth_env(lib.env_by_id(o.recipe_id))
                                          : lib.synth_speech(lib.speech_by_id(o.recipe_id));
            out.stems.emplace_back("off" + std::to_string(i), iw);
            intfs.emplace_back(std::move(iw), o.snr_db);
        }
        out.mix = mix_at_snr_multi(pw, intfs).mix;
    }
    (void)mp;
    out.cond = condition_set_from_manifest(m);
    return out;
}

ConditionSet condition_set_from_manifest(const SampleManifest& m) {
    const OnScreenKind kind =
        m.on_kind == "speech" ? OnScreenKind::speech : OnScreenKind::environment;
    return make_condition_set(m.on_env_caption, m.off_env_caption, m.transcription, kind,
                              m.visual_label, m.visual_seed, m.visual_frames);
}

namespace {

nlohmann::ordered_json manifest_json(const SampleManifest& m) {
    nlohmann::ordered_json j;
    j["schema_version"] = m.schema_version;
    j["id"] = m.id;
    j["scenario"] = m.scenario;
    j["seed"] = m.seed;
    j["on"] = {{"kind", m.on_kind}, {"recipe", m.on_recipe_id}};
    j["on_env_caption"] = m.on_env_caption;
    j["off_env_caption"] = m.off_env_caption;
    j["transcription"] = m.transcription;
    nlohmann::ordered_json offs = nlohmann::ordered_json::array();
    for (const auto& o : m.offs) {
        nlohmann::ordered_json jo;
        jo["kind"] = o.kind;
        jo["recipe"] = o.recipe_id;
        jo["caption"] = o.caption;
        jo["transcript"] = o.transcript;
        jo["snr_db"] = o.snr_db;
        jo["gain"] = o.gain;
        offs.push_back(std::move(jo));
    }
    j["offs"] = std::move(offs);
    j["visual"] = {{"label", m.visual_label},
                   {"seed", m.visual_seed},
                   {"frames", m.visual_frames}};
    j["mix_norm_scale"] = m.mix_norm_scale;
    j["wav"] = m.wav_path;
    return j;
}

SampleManifest manifest_from(const nlohmann::ordered_json& j) {
    SampleManifest m;
    m.schema_version = j.at("schema_version").get<int>();
    if (m.schema_version != 1) fail("manifest: unsupported schema version");
    m.id = j.at("id").get<std::string>();
    m.scenario = j.at("scenario").get<int>();
    m.seed = j.at("seed").get<uint64_t>();
    m.on_kind = j.at("on").at("kind").get<std::string>();
    m.on_recipe_id = j.at("on").at("recipe").get<std::string>();
    m.on_env_caption = j.at("on_env_caption").get<std::string>();
    m.off_env_caption = j.at("off_env_caption").get<std::string>();
    m.transcription = j.at("transcription").get<std::string>();
    for (const auto& jo : j.at("offs")) {
        OffSource o;
        o.kind = jo.at("kind").get<std::string>();
        o.recipe_id = jo.at("recipe").get<std::string>();
        o.caption = jo.at("caption").get<std::string>();
        o.transcript = jo.at("transcript").get<std::string>();
        o.snr_db = jo.at("snr_db").get<double>();
        o.gain = jo.at("gain").get<double>();
        m.offs.push_back(std::move(o));
    }
    m.visual_label = j.at("visual").at("label").get<std::string>();
    m.visual_seed = j.at("visual").at("seed").get<uint64_t>();
    m.visual_frames = j.at("visual").at("frames").get<int>();
    m.mix_norm_scale = j.at("mix_norm_scale").get<double>();
    m.wav_path = j.at("wav").get<std::string>();
    return m;
}

}  // namespace

std::string manifest_to_json(const SampleManifest& m) { return manifest_json(m).dump(2); }

SampleManifest manifest_from_json(const std::string& text) {
    try {
        return manifest_from(nlohmann::ordered_json::parse(text));
    } catch (const nlohmann::json::exception& e) {
        fail(std::string("manifest: ") + e.what());
    }
}

void write_manifest_list(const std::string& path, const std::vector<SampleManifest>& list) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& m : list) arr.push_back(manifest_json(m));
    std::ofstream f(path, std::ios::trunc);
    if (!f) fail("write_manifest_list: cannot open " + path);
    f << arr.dump(2) << "\n";
}

std::vector<SampleManifest> read_manifest_list(const std::string& path) {
    std::ifstream f(path);
    if (!f) fail("read_manifest_list: cannot open " + path);
    nlohmann::ordered_json arr;
    try {
        f >> arr;
    } catch (const std::exception& e) {
        fail("read_manifest_list: parse error in " + path + ": " + e.what());
    }
    std::vector<SampleManifest> out;
    try {
        for (const auto& j : arr) out.push_back(manifest_from(j));
    } catch (const nlohmann::json::exception& e) {
        fail("read_manifest_list: bad entry in " + path + ": " + e.what());
    }
    return out;
}

std::vector<SampleManifest> build_bench(const SourceLibrary& bench_lib, const BenchCounts& counts,
                                        uint64_t seed, const std::string& out_dir,
                                        const MixParams& mp, bool write_audio) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    if (write_audio) {
        fs::create_directories(out_dir + "/wav");
        fs::create_directories(out_dir + "/ref");
    }
    std::vector<SampleManifest> list;
    int index = 0;
    const int per_scenario[3] = {counts.s1, counts.s2, counts.s3};
    for (int s = 1; s <= 3; ++s) {
        for (int i = 0; i < per_scenario[s - 1]; ++i, ++index) {
            const uint64_t item_seed = Rng::mix64(seed ^ (0xBE4Cull + index));
            Rng rng(item_seed);
            BuiltSample b = build_training_sample(s, bench_lib, rng, mp);
            char buf[16];
            std::snprintf(buf, sizeof(buf), "b%04d", index);
            b.manifest.id = buf;
            b.manifest.seed = item_seed;
            b.manifest.wav_path = std::string("wav/") + buf + ".wav";
            if (write_audio) {
                write_wav(out_dir + "/" + b.manifest.wav_path, b.mix);
                for (const auto& [role, stem] : b.stems)
                    write_wav(out_dir + "/ref/" + buf + "_" + role + ".wav", stem);
            }
            list.push_back(std::move(b.manifest));
        }
    }
    write_manifest_list(out_dir + "/manifest.json", list);
    return list;
}

}  // namespace omnisonic
