#include "omnisonic/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numbers>

namespace omnisonic {

namespace {

constexpr double kPi = std::numbers::pi;

void put_u32(std::ofstream& f, uint32_t v) {
    const uint8_t b[4] = {static_cast<uint8_t>(v), static_cast<uint8_t>(v >> 8),
                          static_cast<uint8_t>(v >> 16), static_cast<uint8_t>(v >> 24)};
    f.write(reinterpret_cast<const char*>(b), 4);
}

void put_u16(std::ofstream& f, uint16_t v) {
    const uint8_t b[2] = {static_cast<uint8_t>(v), static_cast<uint8_t>(v >> 8)};
    f.write(reinterpret_cast<const char*>(b), 2);
}

uint32_t get_u32(const uint8_t* p) {
    return p[0] | (uint32_t(p[1]) << 8) | (uint32_t(p[2]) << 16) | (uint32_t(p[3]) << 24);
}

uint16_t get_u16(const uint8_t* p) { return static_cast<uint16_t>(p[0] | (p[1] << 8)); }

// Reflect an out-of-range index back into [0, n); bounces until in range so
// it stays valid even when the pad exceeds the signal length.
int reflect_index(int i, int n) {
    if (n == 1) return 0;
    while (i < 0 || i >= n) {
        if (i < 0) i = -i;
        if (i >= n) i = 2 * (n - 1) - i;
    }
    return i;
}

double hz_to_mel(double f) { return 2595.0 * std::log10(1.0 + f / 700.0); }
double mel_to_hz(double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); }

std::vector<double> hann_window(int win_size, int fft_size) {
    // periodic Hann, centered in the fft frame when win < fft
    std::vector<double> w(fft_size, 0.0);
    const int off = (fft_size - win_size) / 2;
    for (int n = 0; n < win_size; ++n)
        w[off + n] = 0.5 * (1.0 - std::cos(2.0 * kPi * n / win_size));
    return w;
}

struct StftFrames {
    // complex spectra, T frames x (fft/2+1) bins
    std::vector<std::vector<std::complex<double>>> spec;
    int padded_len = 0;
};

std::vector<double> padded_signal(const Waveform& w, const StftConfig& cfg) {
    const int n = static_cast<int>(w.samples.size());
    if (n < 1) fail("stft: empty waveform");
    const int pad = (cfg.fft_size - cfg.hop) / 2;
    std::vector<double> x(n + 2 * pad);
    for (int i = 0; i < n + 2 * pad; ++i)
        x[i] = w.samples[reflect_index(i - pad, n)];
    return x;
}

StftFrames stft_complex(const Waveform& w, const StftConfig& cfg) {
    if (cfg.win_size > cfg.fft_size) fail("stft: win_size > fft_size");
    if ((cfg.fft_size & (cfg.fft_size - 1)) != 0) fail("stft: fft_size not a power of two");
    const std::vector<double> x = padded_signal(w, cfg);
    const std::vector<double> win = hann_window(cfg.win_size, cfg.fft_size);
    const int frames = static_cast<int>((x.size() - cfg.fft_size) / cfg.hop) + 1;
    const int bins = cfg.fft_size / 2 + 1;
    StftFrames out;
    out.padded_len = static_cast<int>(x.size());
    out.spec.resize(frames);
    std::vector<std::complex<double>> buf(cfg.fft_size);
    for (int t = 0; t < frames; ++t) {
        const int start = t * cfg.hop;
        for (int i = 0; i < cfg.fft_size; ++i) buf[i] = {x[start + i] * win[i], 0.0};
        fft_radix2(buf, false);
        out.spec[t].assign(buf.begin(), buf.begin() + bins);
    }
    return out;
}

// Weighted overlap-add inverse; trims the analysis padding back off.
Waveform istft(const StftFrames& frames, const StftConfig& cfg, int out_len, int sample_rate) {
    const std::vector<double> win = hann_window(cfg.win_size, cfg.fft_size);
    const int pad = (cfg.fft_size - cfg.hop) / 2;
    const int T = static_cast<int>(frames.spec.size());
    std::vector<double> acc(frames.padded_len, 0.0), wsum(frames.padded_len, 0.0);
    std::vector<std::complex<double>> buf(cfg.fft_size);
    for (int t = 0; t < T; ++t) {
        const auto& s = frames.spec[t];
        for (int k = 0; k < cfg.fft_size; ++k) {
            if (k < static_cast<int>(s.size()))
                buf[k] = s[k];
            else
                buf[k] = std::conj(s[cfg.fft_size - k]);
        }
        fft_radix2(buf, true);
        const int start = t * cfg.hop;
        for (int i = 0; i < cfg.fft_size; ++i) {
            acc[start + i] += buf[i].real() * win[i];
            wsum[start + i] += win[i] * win[i];
        }
    }
    Waveform w;
    w.sample_rate = sample_rate;
    w.samples.resize(out_len);
    for (int i = 0; i < out_len; ++i) {
        const double d = wsum[pad + i];
        w.samples[i] = static_cast<float>(d > 1e-10 ? acc[pad + i] / d : 0.0);
    }
    return w;
}

double power(const Waveform& w) {
    double acc = 0.0;
    for (float s : w.samples) acc += double(s) * double(s);
    return acc / std::max<size_t>(1, w.samples.size());
}

}  // namespace

Waveform read_wav(const std::string& path, bool strict) {
    std::ifstream f(path, std::ios::binary);
    if (!f) fail("read_wav: cannot open " + path);
    std::vector<uint8_t> buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (buf.size() < 12 || std::memcmp(buf.data(), "RIFF", 4) != 0 ||
        std::memcmp(buf.data() + 8, "WAVE", 4) != 0)
        fail("read_wav: not a RIFF/WAVE file: " + path);

    int channels = 0, rate = 0, bits = 0;
    size_t data_off = 0, data_len = 0;
    size_t pos = 12;
    while (pos + 8 <= buf.size()) {
        const uint32_t sz = get_u32(&buf[pos + 4]);
        if (std::memcmp(&buf[pos], "fmt ", 4) == 0) {
            if (sz < 16 || pos + 8 + 16 > buf.size()) fail("read_wav: bad fmt chunk");
            const uint16_t fmt = get_u16(&buf[pos + 8]);
            if (fmt != 1) fail("read_wav: only PCM supported in " + path);
            channels = get_u16(&buf[pos + 10]);
            rate = static_cast<int>(get_u32(&buf[pos + 12]));
            bits = get_u16(&buf[pos + 22]);
        } else if (std::memcmp(&buf[pos], "data", 4) == 0) {
            data_off = pos + 8;
            data_len = sz;
        }
        pos += 8 + sz + (sz & 1);
    }
    if (channels == 0 || data_off == 0) fail("read_wav: missing fmt or data chunk in " + path);
    if (bits != 16) fail("read_wav: only 16-bit PCM supported in " + path);
    if (channels != 1 && channels != 2) fail("read_wav: unsupported channel count in " + path);
    if (data_off + data_len > buf.size()) fail("read_wav: truncated data chunk in " + path);
    if (strict && channels == 2) fail("read_wav: stereo rejected in strict mode: " + path);
    if (strict && rate != 16000) fail("read_wav: sample rate must be 16000 in strict mode: " + path);
    if (channels == 2)
        std::fprintf(stderr, "read_wav: averaging stereo to mono: %s\n", path.c_str());

    const size_t n = data_len / (2 * channels);
    Waveform w;
    w.sample_rate = rate;
    w.samples.resize(n);
    for (size_t i = 0; i < n; ++i) {
        double v = 0.0;
        for (int c = 0; c < channels; ++c) {
            const int16_t s = static_cast<int16_t>(get_u16(&buf[data_off + 2 * (i * channels + c)]));
            v += s / 32768.0;
        }
        w.samples[i] = static_cast<float>(v / channels);
    }
    return w;
}

void write_wav(const std::string& path, const Waveform& w) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) fail("write_wav: cannot open " + path);
    const uint32_t data_bytes = static_cast<uint32_t>(w.samples.size() * 2);
    f.write("RIFF", 4);
    put_u32(f, 36 + data_bytes);
    f.write("WAVE", 4);
    f.write("fmt ", 4);
    put_u32(f, 16);
    put_u16(f, 1);  // PCM
    put_u16(f, 1);  // mono
    put_u32(f, static_cast<uint32_t>(w.sample_rate));
    put_u32(f, static_cast<uint32_t>(w.sample_rate * 2));
    put_u16(f, 2);
    put_u16(f, 16);
    f.write("data", 4);
    put_u32(f, data_bytes);
    for (float v : w.samples) {
        const float c = std::clamp(v, -1.0f, 1.0f);
        long q = std::lrint(double(c) * 32768.0);
        q = std::clamp(q, -32768l, 32767l);
        put_u16(f, static_cast<uint16_t>(static_cast<int16_t>(q)));
    }
    if (!f) fail("write_wav: write failed for " + path);
}

Waveform fix_length(const Waveform& w, int num_samples) {
    Waveform out;
    out.sample_rate = w.sample_rate;
    out.samples.assign(num_samples, 0.0f);
    const int n = std::min<int>(num_samples, static_cast<int>(w.samples.size()));
    std::copy_n(w.samples.begin(), n, out.samples.begin());
    return out;
}

void fft_radix2(std::vector<std::complex<double>>& a, bool inverse) {
    const size_t n = a.size();
    if (n == 0 || (n & (n - 1)) != 0) fail("fft: size must be a power of two");
    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (size_t len = 2; len <= n; len <<= 1) {
        const double ang = (inverse ? 2.0 : -2.0) * kPi / static_cast<double>(len);
        const std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> u = a[i + k];
                const std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
    if (inverse) {
        for (auto& x : a) x /= static_cast<double>(n);
    }
}

TensorT<double> stft_magnitude(const Waveform& w, const StftConfig& cfg) {
    const StftFrames fr = stft_complex(w, cfg);
    const int T = static_cast<int>(fr.spec.size());
    const int bins = cfg.fft_size / 2 + 1;
    TensorT<double> mag({T, bins});
    for (int t = 0; t < T; ++t)
        for (int k = 0; k < bins; ++k) mag.at(t, k) = std::abs(fr.spec[t][k]);
    return mag;
}

TensorT<double> mel_filterbank(const StftConfig& cfg, int sample_rate) {
    const int bins = cfg.fft_size / 2 + 1;
    TensorT<double> fb({cfg.n_mels, bins});
    const double mel_lo = hz_to_mel(cfg.fmin), mel_hi = hz_to_mel(cfg.fmax);
    std::vector<double> edges(cfg.n_mels + 2);
    for (int m = 0; m < cfg.n_mels + 2; ++m)
        edges[m] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * m / (cfg.n_mels + 1));
    for (int m = 0; m < cfg.n_mels; ++m) {
        const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
        const double norm = 2.0 / (hi - lo);
        for (int k = 0; k < bins; ++k) {
            const double f = static_cast<double>(k) * sample_rate / cfg.fft_size;
            double v = 0.0;
            if (f > lo && f < mid)
                v = (f - lo) / (mid - lo);
            else if (f >= mid && f < hi)
                v = (hi - f) / (hi - mid);
            fb.at(m, k) = v * norm;
        }
    }
    return fb;
}

MelSpec mel_spectrogram(const Waveform& w, const StftConfig& cfg) {
    const TensorT<double> mag = stft_magnitude(w, cfg);
    const TensorT<double> fb = mel_filterbank(cfg, w.sample_rate);
    const int T = mag.rows();
    MelSpec m;
    m.grid = Tensor({T, cfg.n_mels});
    for (int t = 0; t < T; ++t) {
        for (int b = 0; b < cfg.n_mels; ++b) {
            double acc = 0.0;
            for (int k = 0; k < mag.cols(); ++k) acc += fb.at(b, k) * mag.at(t, k);
            m.grid.at(t, b) = static_cast<float>(std::log(acc + kLogMelEps));
        }
    }
    check_finite(m.grid, "mel_spectrogram");
    return m;
}

Waveform griffin_lim(const MelSpec& m, const StftConfig& cfg, int iters, int sample_rate,
                     double* err_out) {
    if (iters < 1) fail("griffin_lim: iters must be >= 1");
    const int T = m.rows();
    const int bins = cfg.fft_size / 2 + 1;
    const TensorT<double> fb = mel_filterbank(cfg, sample_rate);

    // target linear magnitude = pinv(fb) * mel_mag, clamped nonnegative.
    // pinv via fb^T (fb fb^T)^{-1}, inverted through the eigendecomposition.
    TensorT<double> gram = matmul_nt_plain(fb, fb);
    // invert gram in place using jacobi through matrix_sqrt? simpler: solve per
    // mel column once: gram is n_mels x n_mels, small. Gaussian elimination.
    const int M = cfg.n_mels;
    TensorT<double> inv({M, M});
    {
        TensorT<double> a = gram;
        for (int i = 0; i < M; ++i) inv.at(i, i) = 1.0;
        for (int col = 0; col < M; ++col) {
            int piv = col;
            for (int r = col + 1; r < M; ++r)
                if (std::abs(a.at(r, col)) > std::abs(a.at(piv, col))) piv = r;
            if (std::abs(a.at(piv, col)) < 1e-12) fail("griffin_lim: singular filterbank gram");
            if (piv != col) {
                for (int c = 0; c < M; ++c) {
                    std::swap(a.at(piv, c), a.at(col, c));
                    std::swap(inv.at(piv, c), inv.at(col, c));
                }
            }
            const double d = a.at(col, col);
            for (int c = 0; c < M; ++c) {
                a.at(col, c) /= d;
                inv.at(col, c) /= d;
            }
            for (int r = 0; r < M; ++r) {
                if (r == col) continue;
                const double f = a.at(r, col);
                if (f == 0.0) continue;
                for (int c = 0; c < M; ++c) {
                    a.at(r, c) -= f * a.at(col, c);
                    inv.at(r, c) -= f * inv.at(col, c);
                }
            }
        }
    }

    TensorT<double> target({T, bins});
    std::vector<double> melmag(M);
    std::vector<double> tmp(M);
    for (int t = 0; t < T; ++t) {
        for (int b = 0; b < M; ++b)
            melmag[b] = std::max(0.0, std::exp(double(m.grid.at(t, b))) - kLogMelEps);
        for (int i = 0; i < M; ++i) {
            double acc = 0.0;
            for (int j = 0; j < M; ++j) acc += inv.at(i, j) * melmag[j];
            tmp[i] = acc;
        }
        for (int k = 0; k < bins; ++k) {
            double acc = 0.0;
            for (int i = 0; i < M; ++i) acc += fb.at(i, k) * tmp[i];
            target.at(t, k) = std::max(0.0, acc);
        }
    }

    const int out_len = T * cfg.hop;
    const int pad = (cfg.fft_size - cfg.hop) / 2;
    StftFrames fr;
    fr.padded_len = out_len + 2 * pad;
    fr.spec.resize(T);
    for (int t = 0; t < T; ++t) {
        fr.spec[t].resize(bins);
        for (int k = 0; k < bins; ++k) fr.spec[t][k] = {target.at(t, k), 0.0};
    }

    Waveform best;
    double best_err = -1.0;
    Waveform x = istft(fr, cfg, out_len, sample_rate);
    for (int it = 0; it < iters; ++it) {
        const StftFrames cur = stft_complex(x, cfg);
        double err = 0.0;
        for (int t = 0; t < T && t < static_cast<int>(cur.spec.size()); ++t) {
            for (int k = 0; k < bins; ++k) {
                const double d = std::abs(cur.spec[t][k]) - target.at(t, k);
                err += d * d;
            }
        }
        err = std::sqrt(err);
        if (best_err < 0.0 || err < best_err) {
            best_err = err;
            best = x;
        }
        if (it + 1 == iters) break;
        StftFrames next = cur;
        for (int t = 0; t < T && t < static_cast<int>(next.spec.size()); ++t) {
            for (int k = 0; k < bins; ++k) {
                const double mag = std::abs(cur.spec[t][k]);
                next.spec[t][k] = mag > 1e-12 ? cur.spec[t][k] * (target.at(t, k) / mag)
                                              : std::complex<double>(target.at(t, k), 0.0);
            }
        }
        x = istft(next, cfg, out_len, sample_rate);
    }
    if (err_out) *err_out = best_err;
    return best;
}

MixResult mix_at_snr(const Waveform& primary, const Waveform& interferer, double snr_db) {
    return mix_at_snr_multi(primary, {{interferer, snr_db}});
}

MixResult mix_at_snr_multi(const Waveform& primary,
                           const std::vector<std::pair<Waveform, double>>& interferers) {
    const double pp = power(primary);
    if (pp <= 0.0) fail("mix_at_snr: primary has zero power");
    MixResult r;
    r.mix.sample_rate = primary.sample_rate;
    std::vector<double> acc(primary.samples.size());
    for (size_t i = 0; i < acc.size(); ++i) acc[i] = primary.samples[i];
    for (const auto& [intf, snr_db] : interferers) {
        if (intf.samples.size() != primary.samples.size())
            fail("mix_at_snr: length mismatch (fix_length first)");
        const double pi = power(intf);
        if (pi <= 0.0) fail("mix_at_snr: interferer has zero power");
        const double g = std::sqrt(pp / (pi * std::pow(10.0, snr_db / 10.0)));
        r.gains.push_back(g);
        for (size_t i = 0; i < acc.size(); ++i) acc[i] += g * intf.samples[i];
    }
    double peak = 0.0;
    for (double v : acc) peak = std::max(peak, std::abs(v));
    r.norm_scale = peak > 1.0 ? 1.0 / peak : 1.0;
    r.mix.samples.resize(acc.size());
    for (size_t i = 0; i < acc.size(); ++i)
        r.mix.samples[i] = static_cast<float>(acc[i] * r.norm_scale);
    return r;
}

double measure_snr(const Waveform& a, const Waveform& b) {
    const double pa = power(a), pb = power(b);
    if (pa <= 0.0 || pb <= 0.0) fail("measure_snr: zero-power input");
    return 10.0 * std::log10(pa / pb);
}

void write_csv_grid(const std::string& path, const Tensor& grid) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) fail("write_csv_grid: cannot open " + path);
    const int R = grid.rows(), C = grid.cols();
    for (int r = 0; r < R; ++r) {
        for (int c = 0; c < C; ++c) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.6g", double(grid.at(r, c)));
            f << buf << (c + 1 < C ? "," : "");
        }
        f << "\n";
    }
}

}  // namespace omnisonic
