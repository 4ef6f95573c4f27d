#pragma once

#include <complex>
#include <string>
#include <vector>

#include "omnisonic/tensor.hpp"

namespace omnisonic {

struct Waveform {
    std::vector<float> samples;
    int sample_rate = 16000;
};

struct StftConfig {
    int fft_size = 1024;
    int hop = 160;
    int win_size = 1024;
    int n_mels = 64;
    double fmin = 0.0;
    double fmax = 8000.0;
};

// Log-magnitude mel grid, T rows x n_mels cols.
struct MelSpec {
    Tensor grid;
    int rows() const { return grid.rows(); }
    int cols() const { return grid.cols(); }
};

inline constexpr int kFixedClipSamples = 1024 * 160;
inline constexpr double kLogMelEps = 1e-5;

// PCM16 RIFF reader. strict: reject stereo and non-16k rates; otherwise
// stereo is averaged to mono with a stderr warning and the file's rate kept.
Waveform read_wav(const std::string& path, bool strict = true);
void write_wav(const std::string& path, const Waveform& w);

// Pad with trailing zeros or truncate to exactly num_samples.
Waveform fix_length(const Waveform& w, int num_samples = kFixedClipSamples);

// In-place radix-2 FFT (size must be a power of two).
void fft_radix2(std::vector<std::complex<double>>& a, bool inverse);

// Magnitude STFT, T x (fft/2+1). Reflect-pads (fft-hop)/2 on both sides so
// T = floor(len/hop) — the fixed-length clip maps to exactly 1024 frames.
TensorT<double> stft_magnitude(const Waveform& w, const StftConfig& cfg);

// HTK-scale triangular filterbank over [fmin, fmax], area-normalized;
// n_mels x (fft/2+1).
TensorT<double> mel_filterbank(const StftConfig& cfg, int sample_rate);

// log(mel_magnitude + 1e-5).
MelSpec mel_spectrogram(const Waveform& w, const StftConfig& cfg);

// Phase recovery from a mel grid: filterbank pseudo-inverse with a
// nonnegativity clamp, zero-phase init, then alternating projections.
// Keeps the best iterate, so the re-analysis error (returned through
// err_out, linear-magnitude L2) is non-increasing in iters.
Waveform griffin_lim(const MelSpec& m, const StftConfig& cfg, int iters = 32,
                     int sample_rate = 16000, double* err_out = nullptr);

struct MixResult {
    Waveform mix;
    std::vector<double> gains;  // per-interferer scale applied before summing
    double norm_scale = 1.0;    // peak-normalization factor (<= 1)
};

// primary + g*interferer with g chosen so the power ratio equals snr_db;
// peak-normalizes only if the sum would clip, recording the factor.
MixResult mix_at_snr(const Waveform& primary, const Waveform& interferer, double snr_db);
MixResult mix_at_snr_multi(const Waveform& primary,
                           const std::vector<std::pair<Waveform, double>>& interferers);

// 10*log10(P_a / P_b); rejects zero-power inputs.
double measure_snr(const Waveform& a, const Waveform& b);

// Spectrogram dump: one row per line, comma-separated.
void write_csv_grid(const std::string& path, const Tensor& grid);

}  // namespace omnisonic
