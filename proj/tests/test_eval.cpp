#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "omnisonic/evalmetrics.hpp"
#include "omnisonic/linalg.hpp"
#include "omnisonic/rng.hpp"

using namespace omnisonic;

namespace {

TensorT<double> random_feats(int m, int d, uint64_t seed, double shift = 0.0) {
    Rng rng(seed);
    TensorT<double> t({m, d});
    for (auto& v : t.data) v = rng.normal() + shift;
    return t;
}

// Denman-Beavers iteration: an independent matrix square root for the oracle
TensorT<double> db_sqrt(TensorT<double> y) {
    const int n = y.rows();
    TensorT<double> z({n, n});
    for (int i = 0; i < n; ++i) z.at(i, i) = 1.0;
    auto inverse = [&](const TensorT<double>& m) {
        TensorT<double> a = m;
        TensorT<double> inv({n, n});
        for (int i = 0; i < n; ++i) inv.at(i, i) = 1.0;
        for (int col = 0; col < n; ++col) {
            int piv = col;
            for (int r = col + 1; r < n; ++r)
                if (std::abs(a.at(r, col)) > std::abs(a.at(piv, col))) piv = r;
            for (int c = 0; c < n; ++c) {
                std::swap(a.data[static_cast<size_t>(piv) * n + c], a.data[static_cast<size_t>(col) * n + c]);
                std::swap(inv.data[static_cast<size_t>(piv) * n + c], inv.data[static_cast<size_t>(col) * n + c]);
            }
            const double d = a.at(col, col);
            for (int c = 0; c < n; ++c) {
                a.at(col, c) /= d;
                inv.at(col, c) /= d;
            }
            for (int r = 0; r < n; ++r) {
                if (r == col) continue;
                const double f = a.at(r, col);
                if (f == 0.0) continue;
                for (int c = 0; c < n; ++c) {
                    a.at(r, c) -= f * a.at(col, c);
                    inv.at(r, c) -= f * inv.at(col, c);
                }
            }
        }
        return inv;
    };
    for (int it = 0; it < 60; ++it) {
        TensorT<double> yi = inverse(y), zi = inverse(z);
        TensorT<double> yn({n, n}), zn({n, n});
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                yn.at(i, j) = 0.5 * (y.at(i, j) + zi.at(i, j));
                zn.at(i, j) = 0.5 * (z.at(i, j) + yi.at(i, j));
            }
        y = yn;
        z = zn;
    }
    return y;
}

TensorT<double> covariance(const TensorT<double>& x) {
    const int m = x.rows(), d = x.cols();
    std::vector<double> mu(static_cast<size_t>(d), 0.0);
    for (int r = 0; r < m; ++r)
        for (int c = 0; c < d; ++c) mu[static_cast<size_t>(c)] += x.at(r, c);
    for (auto& v : mu) v /= m;
    TensorT<double> s({d, d});
    for (int r = 0; r < m; ++r)
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                s.at(i, j) += (x.at(r, i) - mu[static_cast<size_t>(i)]) *
                              (x.at(r, j) - mu[static_cast<size_t>(j)]);
    for (auto& v : s.data) v /= (m - 1);
    return s;
}

std::vector<std::string> words(std::initializer_list<const char*> w) {
    std::vector<std::string> out;
    for (const char* s : w) out.emplace_back(s);
    return out;
}

}  // namespace

TEST_CASE("fad of a set against itself is zero") {
    auto a = random_feats(6, 32, 1);
    CHECK(std::abs(frechet_distance(a, a)) < 1e-6);
    auto big = random_feats(40, 8, 2);
    CHECK(std::abs(frechet_distance(big, big)) < 1e-6);
}

TEST_CASE("fad matches the 1-d analytic value for a pure mean shift") {
    // both sets have mean 0/1 and variance 1 exactly: {-1/sqrt2, 1/sqrt2}
    const double v = 1.0 / std::sqrt(2.0);
    TensorT<double> a({2, 1}, {-v, v});
    TensorT<double> b({2, 1}, {1.0 - v, 1.0 + v});
    // muA-muB = 1, SA = SB = 1 => FAD = 1 + (1+1-2) = 1
    CHECK(frechet_distance(a, b) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("fad 1-d analytic value for a variance change") {
    const double v = 1.0 / std::sqrt(2.0);
    TensorT<double> a({2, 1}, {-v, v});          // var 1
    TensorT<double> b({2, 1}, {-2.0 * v, 2.0 * v});  // var 4
    // 0 + (1 + 4 - 2*sqrt(4)) = 1
    CHECK(frechet_distance(a, b) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("fad is symmetric") {
    auto a = random_feats(12, 6, 3);
    auto b = random_feats(15, 6, 4, 0.3);
    CHECK(frechet_distance(a, b) == doctest::Approx(frechet_distance(b, a)).epsilon(1e-8));
}

TEST_CASE("fad is invariant under a shared rotation") {
    auto a = random_feats(20, 4, 5);
    auto b = random_feats(24, 4, 6, 0.5);
    // Givens rotation in coordinates (0, 2)
    const double th = 0.7;
    auto rot = [&](const TensorT<double>& x) {
        TensorT<double> y = x;
        for (int r = 0; r < x.rows(); ++r) {
            const double x0 = x.at(r, 0), x2 = x.at(r, 2);
            y.at(r, 0) = std::cos(th) * x0 - std::sin(th) * x2;
            y.at(r, 2) = std::sin(th) * x0 + std::cos(th) * x2;
        }
        return y;
    };
    CHECK(frechet_distance(rot(a), rot(b)) ==
          doctest::Approx(frechet_distance(a, b)).epsilon(1e-6));
}

TEST_CASE("fad trace term agrees with a denman-beavers oracle") {
    auto a = random_feats(30, 4, 7);
    auto b = random_feats(28, 4, 8, 0.2);
    TensorT<double> sa = covariance(a), sb = covariance(b);
    // oracle: tr sqrt(SA SB) via DB iteration on the (nonsymmetric) product
    TensorT<double> prod = matmul_plain(sa, sb);
    TensorT<double> root = db_sqrt(prod);
    double tr_ab = 0;
    for (int i = 0; i < 4; ++i) tr_ab += root.at(i, i);

    std::vector<double> mu_a(4, 0.0), mu_b(4, 0.0);
    for (int r = 0; r < a.rows(); ++r)
        for (int c = 0; c < 4; ++c) mu_a[static_cast<size_t>(c)] += a.at(r, c);
    for (auto& v : mu_a) v /= a.rows();
    for (int r = 0; r < b.rows(); ++r)
        for (int c = 0; c < 4; ++c) mu_b[static_cast<size_t>(c)] += b.at(r, c);
    for (auto& v : mu_b) v /= b.rows();
    double mean_term = 0, tr_a = 0, tr_b = 0;
    for (int i = 0; i < 4; ++i) {
        mean_term += (mu_a[static_cast<size_t>(i)] - mu_b[static_cast<size_t>(i)]) *
                     (mu_a[static_cast<size_t>(i)] - mu_b[static_cast<size_t>(i)]);
        tr_a += sa.at(i, i);
        tr_b += sb.at(i, i);
    }
    const double oracle = mean_term + tr_a + tr_b - 2.0 * tr_ab;
    CHECK(frechet_distance(a, b) == doctest::Approx(oracle).epsilon(1e-5));
}

TEST_CASE("fad input validation") {
    auto a = random_feats(6, 4, 9);
    auto b = random_feats(6, 5, 10);
    CHECK_THROWS_AS(frechet_distance(a, b), std::runtime_error);  // dim mismatch
    TensorT<double> one({1, 4});
    CHECK_THROWS_AS(frechet_distance(one, a), std::runtime_error);  // <2 samples
}

TEST_CASE("mean_kl basics") {
    TensorT<double> p({2, 4}, {0.25, 0.25, 0.25, 0.25, 0.1, 0.2, 0.3, 0.4});
    CHECK(mean_kl(p, p) == doctest::Approx(0.0).epsilon(1e-12));

    // one-hot ref vs uniform gen: KL = ln K
    TensorT<double> onehot({1, 4}, {1.0, 0.0, 0.0, 0.0});
    TensorT<double> uniform({1, 4}, {0.25, 0.25, 0.25, 0.25});
    CHECK(mean_kl(onehot, uniform) == doctest::Approx(std::log(4.0)).epsilon(1e-6));

    TensorT<double> bad({1, 4}, {0.5, 0.2, 0.2, 0.2});  // sums to 1.1
    CHECK_THROWS_AS(mean_kl(bad, uniform), std::runtime_error);
    TensorT<double> mism({2, 4});
    CHECK_THROWS_AS(mean_kl(onehot, mism), std::runtime_error);
}

TEST_CASE("mean_kl averages over rows and is safe at zero gen mass") {
    TensorT<double> refs({2, 2}, {1.0, 0.0, 0.5, 0.5});
    TensorT<double> gens({2, 2}, {0.5, 0.5, 0.5, 0.5});
    const double row0 = std::log(2.0);  // KL(1,0 || .5,.5)
    CHECK(mean_kl(refs, gens) == doctest::Approx(row0 / 2.0).epsilon(1e-9));

    // gen assigns (floored) zero mass where ref has support: finite, large
    TensorT<double> zg({1, 2}, {0.0, 1.0});
    TensorT<double> rf({1, 2}, {1.0, 0.0});
    const double kl = mean_kl(rf, zg);
    CHECK(std::isfinite(kl));
    CHECK(kl > 10.0);  // ~ln(1e10)
}

TEST_CASE("levenshtein hand cases") {
    CHECK(levenshtein(words({"a", "b", "c"}), words({"a", "x", "c"})) == 1);
    CHECK(levenshtein(words({"a", "b", "c"}), words({"a", "b", "c"})) == 0);
    CHECK(levenshtein(words({"a", "b"}), words({})) == 2);
    CHECK(levenshtein(words({}), words({"x", "y", "z"})) == 3);
    CHECK(levenshtein(words({"kitten"}), words({"sitting"})) == 1);  // one substitution
    CHECK(edit_error_rate(words({"a", "b", "c"}), words({"a", "x", "c"})) ==
          doctest::Approx(1.0 / 3.0));
}

TEST_CASE("edit_error_rate edge cases") {
    CHECK(edit_error_rate(words({"a", "b"}), words({})) == doctest::Approx(1.0));
    CHECK_THROWS_AS(edit_error_rate(words({}), words({"a"})), std::runtime_error);
    // appending a wrong token never lowers the distance
    auto ref = words({"ona", "tib", "rek"});
    auto hyp = words({"ona", "tib"});
    const int base = levenshtein(ref, hyp);
    auto worse = hyp;
    worse.emplace_back("zzz");
    CHECK(levenshtein(ref, worse) >= base);
}

TEST_CASE("levenshtein agrees with a full-matrix dp oracle on random pairs") {
    auto oracle = [](const std::vector<std::string>& a, const std::vector<std::string>& b) {
        const size_t n = a.size(), m = b.size();
        std::vector<std::vector<int>> d(n + 1, std::vector<int>(m + 1, 0));
        for (size_t i = 0; i <= n; ++i) d[i][0] = static_cast<int>(i);
        for (size_t j = 0; j <= m; ++j) d[0][j] = static_cast<int>(j);
        for (size_t i = 1; i <= n; ++i)
            for (size_t j = 1; j <= m; ++j)
                d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1,
                                    d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
        return d[n][m];
    };
    Rng rng(77);
    const std::vector<std::string> vocab = {"a", "b", "c", "d"};
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<std::string> a(rng.below(9)), b(rng.below(9));
        for (auto& t : a) t = vocab[rng.below(vocab.size())];
        for (auto& t : b) t = vocab[rng.below(vocab.size())];
        CHECK(levenshtein(a, b) == oracle(a, b));
    }
}

TEST_CASE("cosine alignment score") {
    TensorT<double> a({2, 3}, {1.0, 0.0, 0.0, 0.0, 2.0, 0.0});
    CHECK(cosine_alignment_score(a, a) == doctest::Approx(100.0).epsilon(1e-9));
    TensorT<double> orth({2, 3}, {0.0, 1.0, 0.0, 0.0, 0.0, 3.0});
    CHECK(cosine_alignment_score(a, orth) == doctest::Approx(0.0).epsilon(1e-9));
    TensorT<double> zero({2, 3});
    CHECK_THROWS_AS(cosine_alignment_score(a, zero), std::runtime_error);
    TensorT<double> mism({3, 3});
    CHECK_THROWS_AS(cosine_alignment_score(a, mism), std::runtime_error);
}

TEST_CASE("tokenizers") {
    CHECK(tokenize_words("Low hum  of rain") == words({"low", "hum", "of", "rain"}));
    CHECK(tokenize_words("") == words({}));
    CHECK(tokenize_chars("ab c") == words({"a", "b", "c"}));
    auto ph = tokenize_phonemes("bat");
    REQUIRE(ph.size() == 3);
    CHECK(ph[1] == tokenize_phonemes("cat")[1]);  // shared vowel class
    CHECK(tokenize_phonemes("b")[0] == tokenize_phonemes("p")[0]);  // both labial stops
    CHECK(tokenize_phonemes("d")[0] == tokenize_phonemes("t")[0]);  // both coronal stops
    CHECK(tokenize_phonemes("b")[0] != tokenize_phonemes("d")[0]);
    CHECK(tokenize_phonemes("f")[0] != tokenize_phonemes("b")[0]);
}

TEST_CASE("toy features and posterior") {
    Rng rng(88);
    MelSpec m;
    m.grid = Tensor::randn({16, 8}, rng);
    auto f = toy_features(m);
    REQUIRE(f.size() == 8);
    // per-band mean oracle on band 0
    double mean0 = 0;
    for (int r = 0; r < 16; ++r) mean0 += m.grid.at(r, 0);
    mean0 /= 16;
    CHECK(f[0] == doctest::Approx(mean0).epsilon(1e-6));

    auto p = toy_posterior(m);
    REQUIRE(p.size() == 8);
    double s = 0;
    for (double v : p) {
        CHECK(v > 0.0);
        s += v;
    }
    CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
}
