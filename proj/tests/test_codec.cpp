#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "omnisonic/codec.hpp"
#include "omnisonic/rng.hpp"

using namespace omnisonic;

namespace {

MelSpec random_mel(int t, int f, uint64_t seed) {
    Rng rng(seed);
    MelSpec m;
    m.grid = Tensor::randn({t, f}, rng);
    return m;
}

}  // namespace

TEST_CASE("basis is orthonormal") {
    CodecConfig cfg;
    LatentCodec codec(cfg);
    const auto& q = codec.basis();
    REQUIRE(q.rows() == 16);
    REQUIRE(q.cols() == 16);
    for (int i = 0; i < 16; ++i)
        for (int j = 0; j < 16; ++j) {
            double acc = 0;
            for (int p = 0; p < 16; ++p) acc += q.at(i, p) * q.at(j, p);
            CHECK(std::abs(acc - (i == j ? 1.0 : 0.0)) < 1e-6);
        }
}

TEST_CASE("identity basis with unit patch is a reshape") {
    CodecConfig cfg;
    cfg.patch_t = 1;
    cfg.patch_f = 1;
    cfg.identity_basis = true;
    LatentCodec codec(cfg);
    MelSpec m = random_mel(8, 4, 101);
    Latent z = codec.encode(m);
    REQUIRE(z.channels() == 1);
    REQUIRE(z.time() == 8);
    REQUIRE(z.freq() == 4);
    for (int t = 0; t < 8; ++t)
        for (int f = 0; f < 4; ++f)
            CHECK(z.data.data[static_cast<size_t>(t) * 4 + f] ==
                  doctest::Approx(m.grid.at(t, f)).epsilon(1e-6));
}

TEST_CASE("zero mel maps to zero latent after centering on zero stats") {
    CodecConfig cfg;
    LatentCodec codec(cfg);
    MelSpec m;
    m.grid = Tensor({8, 8});
    Latent z = codec.encode(m);
    for (float v : z.data.data) CHECK(v == doctest::Approx(0.0).epsilon(1e-7));
}

TEST_CASE("encode decode round trip") {
    CodecConfig cfg;
    LatentCodec codec(cfg);
    MelSpec m = random_mel(16, 8, 202);
    Latent z = codec.encode(m);
    CHECK(z.channels() == 16);
    CHECK(z.time() == 4);
    CHECK(z.freq() == 2);
    MelSpec back = codec.decode(z);
    REQUIRE(back.rows() == 16);
    REQUIRE(back.cols() == 8);
    for (size_t i = 0; i < m.grid.data.size(); ++i)
        CHECK(std::abs(back.grid.data[i] - m.grid.data[i]) < 1e-5);
}

TEST_CASE("round trip survives calibration stats") {
    CodecConfig cfg;
    LatentCodec codec(cfg);
    std::vector<MelSpec> corpus;
    for (uint64_t s = 0; s < 6; ++s) corpus.push_back(random_mel(16, 8, 300 + s));
    codec.calibrate(corpus);
    MelSpec m = random_mel(16, 8, 999);
    MelSpec back = codec.decode(codec.encode(m));
    for (size_t i = 0; i < m.grid.data.size(); ++i)
        CHECK(std::abs(back.grid.data[i] - m.grid.data[i]) < 1e-5);
}

TEST_CASE("orthonormal projection preserves patch norms pre standardization") {
    CodecConfig cfg;
    LatentCodec codec(cfg);  // default stats: mean 0 / std 1
    MelSpec m = random_mel(8, 8, 404);
    Latent z = codec.encode(m);
    // total energy is preserved by an orthonormal transform
    double em = 0, ez = 0;
    for (float v : m.grid.data) em += static_cast<double>(v) * v;
    for (float v : z.data.data) ez += static_cast<double>(v) * v;
    CHECK(ez == doctest::Approx(em).epsilon(1e-5));
}

TEST_CASE("calibration standardizes channels") {
    CodecConfig cfg;
    LatentCodec codec(cfg);
    std::vector<MelSpec> corpus;
    for (uint64_t s = 0; s < 24; ++s) corpus.push_back(random_mel(32, 8, 500 + s));
    codec.calibrate(corpus);
    // per-channel mean/std of encoded corpus must be ~0/~1
    const int C = codec.out_channels();
    std::vector<double> sum(static_cast<size_t>(C), 0.0), sq(static_cast<size_t>(C), 0.0);
    size_t per_ch = 0;
    for (const auto& m : corpus) {
        Latent z = codec.encode(m);
        const int tl = z.time(), fl = z.freq();
        per_ch += static_cast<size_t>(tl) * fl;
        for (int c = 0; c < C; ++c)
            for (int i = 0; i < tl * fl; ++i) {
                double v = z.data.data[static_cast<size_t>(c) * tl * fl + i];
                sum[static_cast<size_t>(c)] += v;
                sq[static_cast<size_t>(c)] += v * v;
            }
    }
    for (int c = 0; c < C; ++c) {
        double mean = sum[static_cast<size_t>(c)] / static_cast<double>(per_ch);
        double var = sq[static_cast<size_t>(c)] / static_cast<double>(per_ch) - mean * mean;
        CHECK(std::abs(mean) < 1e-5);
        CHECK(std::sqrt(var) == doctest::Approx(1.0).epsilon(1e-4));
    }
}

TEST_CASE("truncate_8 keeps eight channels") {
    CodecConfig cfg;
    cfg.truncate_8 = true;
    LatentCodec codec(cfg);
    CHECK(codec.out_channels() == 8);
    MelSpec m = random_mel(16, 8, 606);
    Latent z = codec.encode(m);
    CHECK(z.channels() == 8);
    MelSpec back = codec.decode(z);  // lossy but shape-correct
    CHECK(back.rows() == 16);
    CHECK(back.cols() == 8);
}

TEST_CASE("encode rejects misaligned grids") {
    CodecConfig cfg;
    LatentCodec codec(cfg);
    MelSpec m = random_mel(10, 8, 707);  // 10 % 4 != 0
    CHECK_THROWS_AS(codec.encode(m), std::runtime_error);
}

TEST_CASE("set_stats validates dimension and positivity") {
    CodecConfig cfg;
    LatentCodec codec(cfg);
    CHECK_THROWS_AS(codec.set_stats({0.0}, {1.0}), std::runtime_error);
    std::vector<double> means(16, 0.0), stds(16, 1.0);
    stds[3] = 0.0;
    CHECK_THROWS_AS(codec.set_stats(means, stds), std::runtime_error);
    stds[3] = 1.0;
    codec.set_stats(means, stds);  // well-formed stats accepted
    CHECK(codec.stds()[3] == 1.0);
}

TEST_CASE("same seed same basis, different seed different basis") {
    CodecConfig a, b;
    b.seed = a.seed + 1;
    LatentCodec ca(a), cb(b), ca2(a);
    CHECK(ca.basis().data == ca2.basis().data);
    CHECK(ca.basis().data != cb.basis().data);
}
