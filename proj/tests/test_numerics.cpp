#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "omnisonic/autodiff.hpp"
#include "omnisonic/gradcheck.hpp"
#include "omnisonic/linalg.hpp"
#include "omnisonic/ostn.hpp"
#include "omnisonic/rng.hpp"

using namespace omnisonic;

TEST_CASE("square grad") {
    auto w = leaf(TensorT<double>({1, 1}, {3.0}));
    auto y = sum_all(mul(w, w));
    backward(y);
    CHECK(y->value.data[0] == doctest::Approx(9.0));
    CHECK(w->grad.data[0] == doctest::Approx(6.0));
}

TEST_CASE("softmax grad at symmetric point") {
    auto x = leaf(TensorT<double>({1, 2}, {0.0, 0.0}));
    auto s = softmax_rows(x);
    auto first = sum_all(slice_cols(s, 0, 1));
    backward(first);
    CHECK(x->grad.data[0] == doctest::Approx(0.25).epsilon(1e-9));
    CHECK(x->grad.data[1] == doctest::Approx(-0.25).epsilon(1e-9));
}

TEST_CASE("finite_diff_grad basics") {
    auto f_sum = [](const TensorT<double>& t) {
        double s = 0;
        for (double v : t.data) s += v;
        return s;
    };
    auto g = finite_diff_grad(f_sum, TensorT<double>({1, 3}, {1.0, -2.0, 0.5}));
    for (double v : g.data) CHECK(v == doctest::Approx(1.0).epsilon(1e-8));

    auto f_sq = [](const TensorT<double>& t) {
        double s = 0;
        for (double v : t.data) s += v * v;
        return s;
    };
    auto g2 = finite_diff_grad(f_sq, TensorT<double>({1, 2}, {1.0, 2.0}));
    CHECK(g2.data[0] == doctest::Approx(2.0).epsilon(1e-7));
    CHECK(g2.data[1] == doctest::Approx(4.0).epsilon(1e-7));
}

TEST_CASE("finite_diff_grad step sweep agrees on smooth function") {
    auto f = [](const TensorT<double>& t) {
        double s = 0;
        for (double v : t.data) s += std::sin(v) * std::exp(0.3 * v);
        return s;
    };
    TensorT<double> x({1, 4}, {0.3, -1.1, 0.7, 2.0});
    auto ga = finite_diff_grad(f, x, 1e-3);
    auto gb = finite_diff_grad(f, x, 1e-4);
    CHECK(max_rel_err(ga, gb) < 1e-5);
}

TEST_CASE("finite_diff_grad rejects out-of-range step") {
    auto f = [](const TensorT<double>& t) { return t.data[0]; };
    CHECK_THROWS_AS(finite_diff_grad(f, TensorT<double>({1, 1}, {0.0}), 1e-6), std::runtime_error);
    CHECK_THROWS_AS(finite_diff_grad(f, TensorT<double>({1, 1}, {0.0}), 0.1), std::runtime_error);
}

TEST_CASE("composite block matches finite differences") {
    Rng rng(99);
    TensorT<double> x0 = TensorT<double>::randn({3, 4}, rng, 0.5);
    TensorT<double> w0 = TensorT<double>::randn({4, 4}, rng, 0.5);
    TensorT<double> tgt = TensorT<double>::randn({3, 4}, rng, 0.5);

    auto run = [&](const TensorT<double>& xv, const TensorT<double>& wv) {
        auto x = leaf(xv);
        auto w = leaf(wv);
        auto h = silu(matmul(x, w));
        auto n = layer_norm_rows(h, 1e-6);
        auto s = softmax_rows(n);
        auto loss = mse(s, constant(tgt));
        return std::make_tuple(loss, x, w);
    };

    auto [loss, x, w] = run(x0, w0);
    backward(loss);

    auto fx = [&](const TensorT<double>& xv) {
        auto [l, a, b] = run(xv, w0);
        (void)a;
        (void)b;
        return l->value.data[0];
    };
    auto fw = [&](const TensorT<double>& wv) {
        auto [l, a, b] = run(x0, wv);
        (void)a;
        (void)b;
        return l->value.data[0];
    };
    CHECK(max_rel_err(x->grad, finite_diff_grad(fx, x0)) < 1e-4);
    CHECK(max_rel_err(w->grad, finite_diff_grad(fw, w0)) < 1e-4);
}

TEST_CASE("backward requires scalar objective") {
    auto x = leaf(TensorT<double>({1, 2}, {1.0, 2.0}));
    auto y = mul(x, x);
    CHECK_THROWS_AS(backward(y), std::runtime_error);
}

TEST_CASE("softmax rows sum to one and are shift invariant") {
    Rng rng(5);
    TensorT<double> v = TensorT<double>::randn({4, 6}, rng, 2.0);
    TensorT<double> shifted = v;
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 6; ++c) shifted.at(r, c) += 17.5;
    auto s = softmax_rows_plain(v);
    auto s2 = softmax_rows_plain(shifted);
    for (int r = 0; r < 4; ++r) {
        double sum = 0;
        for (int c = 0; c < 6; ++c) {
            sum += s.at(r, c);
            CHECK(s.at(r, c) == doctest::Approx(s2.at(r, c)).epsilon(1e-9));
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("rope position zero is identity") {
    Rng rng(7);
    TensorT<double> v = TensorT<double>::randn({2, 8}, rng);
    TensorT<double> r = v;
    rope_rows_apply(r, {0, 0}, 10000.0, +1);
    for (size_t i = 0; i < v.data.size(); ++i) CHECK(r.data[i] == doctest::Approx(v.data[i]));
}

TEST_CASE("rope preserves row norms") {
    Rng rng(8);
    TensorT<double> v = TensorT<double>::randn({3, 16}, rng);
    TensorT<double> r = v;
    rope_rows_apply(r, {1, 5, 42}, 10000.0, +1);
    for (int row = 0; row < 3; ++row) {
        double na = 0, nb = 0;
        for (int c = 0; c < 16; ++c) {
            na += v.at(row, c) * v.at(row, c);
            nb += r.at(row, c) * r.at(row, c);
        }
        CHECK(std::sqrt(nb) == doctest::Approx(std::sqrt(na)).epsilon(1e-6));
    }
}

TEST_CASE("rope dot depends only on relative position") {
    Rng rng(9);
    TensorT<double> q = TensorT<double>::randn({1, 8}, rng);
    TensorT<double> k = TensorT<double>::randn({1, 8}, rng);
    auto dot_at = [&](int pq, int pk) {
        TensorT<double> a = q, b = k;
        rope_rows_apply(a, {pq}, 10000.0, +1);
        rope_rows_apply(b, {pk}, 10000.0, +1);
        double d = 0;
        for (int c = 0; c < 8; ++c) d += a.at(0, c) * b.at(0, c);
        return d;
    };
    CHECK(dot_at(3, 1) == doctest::Approx(dot_at(9, 7)).epsilon(1e-5));
    CHECK(dot_at(5, 5) == doctest::Approx(dot_at(0, 0)).epsilon(1e-5));
}

TEST_CASE("rope rejects odd head dim") {
    TensorT<double> v({1, 3}, {1.0, 2.0, 3.0});
    CHECK_THROWS_AS(rope_rows_apply(v, {0}, 10000.0, +1), std::runtime_error);
}

TEST_CASE("jacobi_eigh 2x2 oracle") {
    // [[2,1],[1,2]] has eigenvalues 1 and 3.
    TensorT<double> a({2, 2}, {2.0, 1.0, 1.0, 2.0});
    auto eig = jacobi_eigh(a);
    CHECK(eig.values[0] == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(eig.values[1] == doctest::Approx(3.0).epsilon(1e-10));
    // eigenvector for 3 is (1,1)/sqrt(2) up to sign
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    CHECK(std::abs(eig.vectors.at(0, 1)) == doctest::Approx(inv_sqrt2).epsilon(1e-8));
    CHECK(std::abs(eig.vectors.at(1, 1)) == doctest::Approx(inv_sqrt2).epsilon(1e-8));
}

TEST_CASE("matrix_sqrt_psd identity and diagonal") {
    TensorT<double> eye({2, 2}, {1.0, 0.0, 0.0, 1.0});
    auto s = matrix_sqrt_psd(eye);
    CHECK(s.at(0, 0) == doctest::Approx(1.0));
    CHECK(s.at(0, 1) == doctest::Approx(0.0));

    TensorT<double> d({2, 2}, {4.0, 0.0, 0.0, 9.0});
    auto sd = matrix_sqrt_psd(d);
    CHECK(sd.at(0, 0) == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(sd.at(1, 1) == doctest::Approx(3.0).epsilon(1e-9));
    CHECK(std::abs(sd.at(0, 1)) < 1e-9);
}

TEST_CASE("matrix_sqrt_psd squares back to input") {
    Rng rng(11);
    TensorT<double> m = TensorT<double>::randn({5, 5}, rng);
    TensorT<double> a({5, 5});
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) {
            double acc = 0;
            for (int p = 0; p < 5; ++p) acc += m.at(p, i) * m.at(p, j);
            a.at(i, j) = acc;
        }
    auto s = matrix_sqrt_psd(a);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) {
            double acc = 0;
            for (int p = 0; p < 5; ++p) acc += s.at(i, p) * s.at(p, j);
            CHECK(acc == doctest::Approx(a.at(i, j)).epsilon(1e-8).scale(1.0));
        }
}

TEST_CASE("matrix_sqrt_psd rejects asymmetric input") {
    TensorT<double> a({2, 2}, {1.0, 0.5, -0.5, 1.0});
    CHECK_THROWS_AS(matrix_sqrt_psd(a), std::runtime_error);
}

TEST_CASE("ostn round trip") {
    Rng rng(13);
    Tensor t = Tensor::randn({3, 5, 2}, rng);
    auto dir = std::filesystem::temp_directory_path() / "omnisonic_ostn_test";
    std::filesystem::create_directories(dir);
    const std::string path = (dir / "t.ostn").string();
    write_ostn(path, t);
    Tensor back = read_ostn(path);
    REQUIRE(back.shape == t.shape);
    for (size_t i = 0; i < t.data.size(); ++i) CHECK(back.data[i] == t.data[i]);
    std::filesystem::remove_all(dir);
}

TEST_CASE("rng determinism and fork independence") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

    Rng base(42);
    Rng f1 = base.fork("alpha");
    Rng f2 = base.fork("beta");
    CHECK(f1.seed() != f2.seed());
    // forking is a pure function of the parent seed, not its stream position
    Rng advanced(42);
    advanced.next_u64();
    CHECK(advanced.fork("alpha").seed() == f1.seed());

    // crude distribution sanity for normal()
    Rng n(1);
    double mean = 0, var = 0;
    const int kN = 20000;
    std::vector<double> xs(kN);
    for (int i = 0; i < kN; ++i) {
        xs[i] = n.normal();
        mean += xs[i];
    }
    mean /= kN;
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= kN;
    CHECK(std::abs(mean) < 0.05);
    CHECK(var == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("rng below stays in range and covers values") {
    Rng r(3);
    std::vector<int> hits(7, 0);
    for (int i = 0; i < 7000; ++i) {
        uint64_t v = r.below(7);
        REQUIRE(v < 7);
        hits[static_cast<size_t>(v)]++;
    }
    for (int h : hits) CHECK(h > 700);
}

TEST_CASE("check_finite rejects nan") {
    TensorT<double> t({1, 2}, {1.0, std::nan("")});
    CHECK_THROWS_AS(check_finite(t, "test"), std::runtime_error);
}
