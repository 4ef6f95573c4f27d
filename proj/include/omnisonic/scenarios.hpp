#pragma once

#include <string>
#include <vector>

#include "omnisonic/audio.hpp"
#include "omnisonic/conditioners.hpp"
#include "omnisonic/rng.hpp"

namespace omnisonic {

// S1: on-screen env + off-screen speech
// S2: on-screen speech + off-screen env
// S3: on-screen env + off-screen env + off-screen speech
// scenario 0 is the speech-only pretraining sample (stage 1).

struct EnvRecipe {
    std::string id;
    std::string caption;
    uint64_t seed = 0;
};

struct SpeechRecipe {
    std::string id;
    std::string transcript;
    uint64_t seed = 0;
};

struct SourceLibrary {
    std::vector<EnvRecipe> envs;
    std::vector<SpeechRecipe> speeches;
    int sample_rate = 16000;
    int clip_samples = 32000;

    static SourceLibrary build(int n_env, int n_speech, uint64_t seed, int sample_rate,
                               int clip_samples, const std::vector<std::string>& blocklist);

    // Disjoint recipe splits: bench takes the trailing quarter of each kind.
    SourceLibrary train_split() const;
    SourceLibrary bench_split() const;

    Waveform synth_env(const EnvRecipe& r) const;
    Waveform synth_speech(const SpeechRecipe& r) const;

    const EnvRecipe& env_by_id(const std::string& id) const;
    const SpeechRecipe& speech_by_id(const std::string& id) const;
};

// Deterministic toy speech synthesis: each character is a fixed-frequency
// tone slot; spaces are silence. decode_transcript inverts it on clean audio.
Waveform synth_char_speech(const std::string& transcript, uint64_t seed, int sample_rate,
                           int clip_samples);
std::string decode_transcript(const Waveform& w);

struct OffSource {
    std::string kind;  // "env" | "speech"
    std::string recipe_id;
    std::string caption;     // env sources
    std::string transcript;  // speech sources
    double snr_db = 0.0;
    double gain = 0.0;  // recorded mixing gain
};

struct SampleManifest {
    int schema_version = 1;
    std::string id;
    int scenario = 1;
    uint64_t seed = 0;
    std::string on_kind;  // "env" | "speech"
    std::string on_recipe_id;
    std::string on_env_caption;
    std::string off_env_caption;
    std::string transcription;
    std::vector<OffSource> offs;
    std::string visual_label;
    uint64_t visual_seed = 0;
    int visual_frames = 4;
    double mix_norm_scale = 1.0;
    std::string wav_path;
};

std::string manifest_to_json(const SampleManifest& m);
SampleManifest manifest_from_json(const std::string& text);
void write_manifest_list(const std::string& path, const std::vector<SampleManifest>& list);
std::vector<SampleManifest> read_manifest_list(const std::string& path);

ConditionSet condition_set_from_manifest(const SampleManifest& m);

struct MixParams {
    double snr_lo = -5.0, snr_hi = 20.0;
    int visual_frames = 4;
};

struct BuiltSample {
    Waveform mix;
    std::vector<std::pair<std::string, Waveform>> stems;  // role -> source waveform
    ConditionSet cond;
    SampleManifest manifest;
};

// Draws sources with the item's rng and mixes off-screen sources at random
// SNR against the on-screen primary.
BuiltSample build_training_sample(int scenario, const SourceLibrary& lib, Rng& rng,
                                  const MixParams& mp);

// Rebuild the exact mixture a manifest describes (same synthesis seeds and
// recorded SNRs).
BuiltSample rebuild_sample(const SampleManifest& m, const SourceLibrary& lib,
                           const MixParams& mp);

struct CaptionFilterResult {
    std::vector<std::string> kept;
    std::vector<std::string> removed;
};

// Case-insensitive substring blocklist (defaults: speech, voice, say).
CaptionFilterResult filter_env_captions(const std::vector<std::string>& captions,
                                        const std::vector<std::string>& blocklist);

struct BenchCounts {
    int s1 = 12, s2 = 16, s3 = 12;
    static BenchCounts full_scale() { return {300, 401, 302}; }
};

// Deterministic benchmark directory: manifest.json plus wav/ mixtures and
// ref/ per-source stems (skipped when write_audio is false).
std::vector<SampleManifest> build_bench(const SourceLibrary& bench_lib, const BenchCounts& counts,
                                        uint64_t seed, const std::string& out_dir,
                                        const MixParams& mp, bool write_audio);

}  // namespace omnisonic
