#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "omnisonic/audio.hpp"
#include "omnisonic/rng.hpp"

using namespace omnisonic;

namespace {

std::filesystem::path scratch_dir() {
    auto dir = std::filesystem::temp_directory_path() / "omnisonic_audio_test";
    std::filesystem::create_directories(dir);
    return dir;
}

Waveform make_tone(double freq, int n, int sr = 16000, double amp = 0.5) {
    Waveform w;
    w.sample_rate = sr;
    w.samples.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i)
        w.samples[static_cast<size_t>(i)] =
            static_cast<float>(amp * std::sin(2.0 * M_PI * freq * i / sr));
    return w;
}

}  // namespace

TEST_CASE("wav round trip silence") {
    auto path = (scratch_dir() / "silence.wav").string();
    Waveform w;
    w.samples.assign(1600, 0.0f);
    write_wav(path, w);
    Waveform back = read_wav(path);
    REQUIRE(back.samples.size() == w.samples.size());
    CHECK(back.sample_rate == 16000);
    for (float v : back.samples) CHECK(v == 0.0f);
}

TEST_CASE("wav quantization and clamping") {
    auto path = (scratch_dir() / "levels.wav").string();
    Waveform w;
    w.samples = {1.0f, -1.0f, 0.5f, 2.0f};  // 2.0 must clamp to 32767
    write_wav(path, w);
    Waveform back = read_wav(path);
    REQUIRE(back.samples.size() == 4);
    CHECK(back.samples[0] == doctest::Approx(32767.0 / 32768.0).epsilon(1e-7));
    CHECK(back.samples[1] == doctest::Approx(-1.0).epsilon(1e-7));
    CHECK(back.samples[2] == doctest::Approx(0.5).epsilon(1e-4));
    CHECK(back.samples[3] == back.samples[0]);
}

TEST_CASE("wav round trip error below one lsb") {
    auto path = (scratch_dir() / "noise.wav").string();
    Rng rng(21);
    Waveform w;
    w.samples.resize(4000);
    for (auto& v : w.samples) v = static_cast<float>(rng.uniform(-0.9, 0.9));
    write_wav(path, w);
    Waveform back = read_wav(path);
    REQUIRE(back.samples.size() == w.samples.size());
    for (size_t i = 0; i < w.samples.size(); ++i)
        CHECK(std::abs(back.samples[i] - w.samples[i]) <= 1.0f / 32768.0f);
}

TEST_CASE("strict read rejects stereo") {
    auto path = (scratch_dir() / "stereo.wav").string();
    // hand-rolled 2-channel RIFF with 4 frames
    const int frames = 4;
    const int ch = 2;
    const int sr = 16000;
    const int data_bytes = frames * ch * 2;
    std::ofstream f(path, std::ios::binary);
    auto u32 = [&](uint32_t v) { f.write(reinterpret_cast<const char*>(&v), 4); };
    auto u16 = [&](uint16_t v) { f.write(reinterpret_cast<const char*>(&v), 2); };
    f.write("RIFF", 4);
    u32(36 + data_bytes);
    f.write("WAVE", 4);
    f.write("fmt ", 4);
    u32(16);
    u16(1);
    u16(ch);
    u32(sr);
    u32(static_cast<uint32_t>(sr * ch * 2));
    u16(static_cast<uint16_t>(ch * 2));
    u16(16);
    f.write("data", 4);
    u32(static_cast<uint32_t>(data_bytes));
    for (int i = 0; i < frames * ch; ++i) u16(0);
    f.close();
    CHECK_THROWS_AS(read_wav(path, true), std::runtime_error);
    Waveform lenient = read_wav(path, false);
    CHECK(lenient.samples.size() == frames);
}

TEST_CASE("fix_length identity pad truncate") {
    Waveform w = make_tone(440.0, kFixedClipSamples);
    Waveform same = fix_length(w);
    CHECK(same.samples.size() == static_cast<size_t>(kFixedClipSamples));
    CHECK(same.samples == w.samples);

    Waveform shorter = make_tone(440.0, 1000);
    Waveform padded = fix_length(shorter, 1500);
    REQUIRE(padded.samples.size() == 1500);
    for (size_t i = 1000; i < 1500; ++i) CHECK(padded.samples[i] == 0.0f);
    for (size_t i = 0; i < 1000; ++i) CHECK(padded.samples[i] == shorter.samples[i]);

    Waveform truncated = fix_length(w, 2048);
    REQUIRE(truncated.samples.size() == 2048);
    for (size_t i = 0; i < 2048; ++i) CHECK(truncated.samples[i] == w.samples[i]);
}

TEST_CASE("fft matches dft on small input") {
    Rng rng(31);
    const int n = 16;
    std::vector<std::complex<double>> a(n);
    for (auto& v : a) v = {rng.normal(), rng.normal()};
    auto input = a;
    fft_radix2(a, false);
    for (int k = 0; k < n; ++k) {
        std::complex<double> acc = 0;
        for (int t = 0; t < n; ++t)
            acc += input[static_cast<size_t>(t)] *
                   std::polar(1.0, -2.0 * M_PI * k * t / n);
        CHECK(std::abs(a[static_cast<size_t>(k)] - acc) < 1e-9);
    }
    fft_radix2(a, true);
    for (int t = 0; t < n; ++t) CHECK(std::abs(a[static_cast<size_t>(t)] - input[static_cast<size_t>(t)]) < 1e-9);
}

TEST_CASE("full clip maps to 1024x64 mel grid") {
    StftConfig cfg;  // defaults: 1024/160/1024, 64 mels
    Waveform w = make_tone(440.0, kFixedClipSamples);
    MelSpec m = mel_spectrogram(w, cfg);
    CHECK(m.rows() == 1024);
    CHECK(m.cols() == 64);
}

TEST_CASE("zero waveform gives uniform log floor") {
    StftConfig cfg;
    cfg.n_mels = 16;
    Waveform w;
    w.samples.assign(160 * 32, 0.0f);
    MelSpec m = mel_spectrogram(w, cfg);
    const float expect = static_cast<float>(std::log(kLogMelEps));
    for (float v : m.grid.data) CHECK(v == doctest::Approx(expect).epsilon(1e-6));
}

TEST_CASE("tone lands in a stable mel band") {
    StftConfig cfg;
    Waveform w = make_tone(1000.0, 160 * 64);
    MelSpec m = mel_spectrogram(w, cfg);
    // per-frame argmax should agree across interior frames
    auto argmax_row = [&](int r) {
        int best = 0;
        for (int c = 1; c < m.cols(); ++c)
            if (m.grid.at(r, c) > m.grid.at(r, best)) best = c;
        return best;
    };
    const int mid = m.rows() / 2;
    int band = argmax_row(mid);
    for (int r = mid - 5; r <= mid + 5; ++r) CHECK(argmax_row(r) == band);

    // a much higher tone must land in a strictly higher band
    Waveform w2 = make_tone(4000.0, 160 * 64);
    MelSpec m2 = mel_spectrogram(w2, cfg);
    int band2 = 0;
    for (int c = 1; c < m2.cols(); ++c)
        if (m2.grid.at(mid, c) > m2.grid.at(mid, band2)) band2 = c;
    CHECK(band2 > band);
}

TEST_CASE("mel filterbank shape and coverage") {
    StftConfig cfg;
    auto fb = mel_filterbank(cfg, 16000);
    CHECK(fb.rows() == 64);
    CHECK(fb.cols() == 513);
    for (int r = 0; r < fb.rows(); ++r) {
        double s = 0;
        for (int c = 0; c < fb.cols(); ++c) {
            CHECK(fb.at(r, c) >= 0.0);
            s += fb.at(r, c);
        }
        CHECK(s > 0.0);  // every filter covers at least one bin
    }
}

TEST_CASE("griffin_lim silence stays silent") {
    StftConfig cfg;
    cfg.n_mels = 16;
    MelSpec m;
    m.grid = Tensor({32, 16}, std::vector<float>(32 * 16, static_cast<float>(std::log(kLogMelEps))));
    Waveform w = griffin_lim(m, cfg, 8);
    float peak = 0;
    for (float v : w.samples) peak = std::max(peak, std::abs(v));
    CHECK(peak < 1e-3f);
}

TEST_CASE("griffin_lim error non-increasing in iterations") {
    StftConfig cfg;
    Waveform src = make_tone(523.0, 160 * 128);
    MelSpec m = mel_spectrogram(src, cfg);
    double err1 = 0, err32 = 0;
    griffin_lim(m, cfg, 1, 16000, &err1);
    griffin_lim(m, cfg, 32, 16000, &err32);
    CHECK(err32 <= err1 + 1e-9);
}

TEST_CASE("griffin_lim reproduces tone band") {
    StftConfig cfg;
    Waveform src = make_tone(880.0, 160 * 128);
    MelSpec m = mel_spectrogram(src, cfg);
    Waveform rec = griffin_lim(m, cfg, 32);
    MelSpec m2 = mel_spectrogram(fix_length(rec, static_cast<int>(src.samples.size())), cfg);
    const int mid = m.rows() / 2;
    auto argmax_row = [](const MelSpec& ms, int r) {
        int best = 0;
        for (int c = 1; c < ms.cols(); ++c)
            if (ms.grid.at(r, c) > ms.grid.at(r, best)) best = c;
        return best;
    };
    CHECK(argmax_row(m2, mid) == argmax_row(m, mid));
}

TEST_CASE("mix gain closed form at 0 and 20 db") {
    Waveform a = make_tone(440.0, 8000, 16000, 0.3);
    Waveform b = make_tone(700.0, 8000, 16000, 0.3);
    // equal power => want g=1 at 0 dB, g≈0.1 at 20 dB
    MixResult r0 = mix_at_snr(a, b, 0.0);
    REQUIRE(r0.gains.size() == 1);
    CHECK(r0.gains[0] == doctest::Approx(1.0).epsilon(1e-3));
    MixResult r20 = mix_at_snr(a, b, 20.0);
    CHECK(r20.gains[0] == doctest::Approx(0.1).epsilon(1e-3));
}

TEST_CASE("mix closed loop snr within a tenth of a db") {
    Rng rng(55);
    Waveform a, b;
    a.samples.resize(16000);
    b.samples.resize(16000);
    for (auto& v : a.samples) v = static_cast<float>(rng.normal() * 0.1);
    for (auto& v : b.samples) v = static_cast<float>(rng.normal() * 0.2);
    for (double target : {-5.0, 0.0, 10.0, 20.0}) {
        MixResult r = mix_at_snr(a, b, target);
        Waveform scaled_b = b;
        for (auto& v : scaled_b.samples) v = static_cast<float>(v * r.gains[0]);
        CHECK(std::abs(measure_snr(a, scaled_b) - target) < 0.1);
    }
}

TEST_CASE("mix peak normalization recorded") {
    Waveform a = make_tone(300.0, 4000, 16000, 0.9);
    Waveform b = make_tone(500.0, 4000, 16000, 0.9);
    MixResult r = mix_at_snr(a, b, 0.0);
    CHECK(r.norm_scale < 1.0);
    float peak = 0;
    for (float v : r.mix.samples) peak = std::max(peak, std::abs(v));
    CHECK(peak <= 1.0f + 1e-6f);

    // quiet signals are left untouched
    Waveform qa = make_tone(300.0, 4000, 16000, 0.1);
    Waveform qb = make_tone(500.0, 4000, 16000, 0.1);
    MixResult rq = mix_at_snr(qa, qb, 0.0);
    CHECK(rq.norm_scale == doctest::Approx(1.0));
}

TEST_CASE("mix multi applies per-interferer snr") {
    Rng rng(66);
    Waveform p;
    p.samples.resize(8000);
    for (auto& v : p.samples) v = static_cast<float>(rng.normal() * 0.05);
    Waveform i1 = p, i2 = p;
    for (auto& v : i1.samples) v = static_cast<float>(rng.normal() * 0.05);
    for (auto& v : i2.samples) v = static_cast<float>(rng.normal() * 0.05);
    MixResult r = mix_at_snr_multi(p, {{i1, 5.0}, {i2, 15.0}});
    REQUIRE(r.gains.size() == 2);
    Waveform s1 = i1, s2 = i2;
    for (auto& v : s1.samples) v = static_cast<float>(v * r.gains[0]);
    for (auto& v : s2.samples) v = static_cast<float>(v * r.gains[1]);
    CHECK(std::abs(measure_snr(p, s1) - 5.0) < 0.1);
    CHECK(std::abs(measure_snr(p, s2) - 15.0) < 0.1);
}

TEST_CASE("measure_snr basics") {
    Waveform a = make_tone(440.0, 4000);
    CHECK(measure_snr(a, a) == doctest::Approx(0.0).epsilon(1e-9));
    Waveform tenth = a;
    for (auto& v : tenth.samples) v *= 0.1f;
    CHECK(measure_snr(a, tenth) == doctest::Approx(20.0).epsilon(1e-4));
    Waveform zero;
    zero.samples.assign(4000, 0.0f);
    CHECK_THROWS_AS(measure_snr(a, zero), std::runtime_error);
    CHECK_THROWS_AS(measure_snr(zero, a), std::runtime_error);
}

TEST_CASE("write_csv_grid emits one row per line") {
    auto path = (scratch_dir() / "grid.csv").string();
    Tensor g({2, 3}, {1.0f, 2.0f, 3.0f, 4.0f, 5.0f, 6.0f});
    write_csv_grid(path, g);
    std::ifstream f(path);
    std::string l1, l2, l3;
    REQUIRE(static_cast<bool>(std::getline(f, l1)));
    REQUIRE(static_cast<bool>(std::getline(f, l2)));
    CHECK_FALSE(static_cast<bool>(std::getline(f, l3)));
    CHECK(l1.find(',') != std::string::npos);
}
