#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "omnisonic/rng.hpp"

namespace omnisonic {

[[noreturn]] inline void fail(const std::string& msg) {
    throw std::runtime_error(msg);
}

// Dense row-major tensor. Training runs on TensorT<float>; the verification
// oracles instantiate the same code with double.
template <class S>
struct TensorT {
    std::vector<int> shape;
    std::vector<S> data;

    TensorT() = default;

    explicit TensorT(std::vector<int> shp, S fill = S(0)) : shape(std::move(shp)) {
        data.assign(checked_numel(shape), fill);
    }

    TensorT(std::vector<int> shp, std::vector<S> values)
        : shape(std::move(shp)), data(std::move(values)) {
        if (checked_numel(shape) != data.size()) fail("tensor: shape/data size mismatch");
    }

    static size_t checked_numel(const std::vector<int>& shp) {
        if (shp.empty()) fail("tensor: empty shape");
        size_t n = 1;
        for (int d : shp) {
            if (d <= 0) fail("tensor: non-positive extent");
            n *= static_cast<size_t>(d);
        }
        return n;
    }

    size_t numel() const { return data.size(); }
    int rank() const { return static_cast<int>(shape.size()); }

    int rows() const {
        if (rank() != 2) fail("tensor: rows() on non-matrix");
        return shape[0];
    }
    int cols() const {
        if (rank() != 2) fail("tensor: cols() on non-matrix");
        return shape[1];
    }

    S& at(int r, int c) { return data[static_cast<size_t>(r) * cols() + c]; }
    const S& at(int r, int c) const { return data[static_cast<size_t>(r) * cols() + c]; }

    void fill(S v) { std::fill(data.begin(), data.end(), v); }

    bool same_shape(const TensorT& other) const { return shape == other.shape; }

    static TensorT zeros(std::vector<int> shp) { return TensorT(std::move(shp)); }

    static TensorT full(std::vector<int> shp, S v) { return TensorT(std::move(shp), v); }

    static TensorT scalar(S v) { return TensorT({1, 1}, std::vector<S>{v}); }

    static TensorT randn(std::vector<int> shp, Rng& rng, double stddev = 1.0) {
        TensorT t(std::move(shp));
        for (auto& v : t.data) v = static_cast<S>(rng.normal() * stddev);
        return t;
    }

    template <class S2>
    TensorT<S2> cast() const {
        TensorT<S2> out;
        out.shape = shape;
        out.data.resize(data.size());
        for (size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<S2>(data[i]);
        return out;
    }
};

using Tensor = TensorT<float>;

inline std::string shape_string(const std::vector<int>& shp) {
    std::string s = "[";
    for (size_t i = 0; i < shp.size(); ++i) {
        if (i) s += "x";
        s += std::to_string(shp[i]);
    }
    return s + "]";
}

// NaN/Inf never propagate silently: every op output goes through this.
template <class S>
void check_finite(const TensorT<S>& t, const char* where) {
    for (S v : t.data) {
        if (!std::isfinite(static_cast<double>(v))) {
            fail(std::string("non-finite value produced by ") + where);
        }
    }
}

// ---- plain matrix helpers used by op forward/backward kernels ----

template <class S>
TensorT<S> matmul_plain(const TensorT<S>& a, const TensorT<S>& b) {
    const int m = a.rows(), k = a.cols(), n = b.cols();
    if (b.rows() != k) fail("matmul: inner dims " + shape_string(a.shape) + " vs " + shape_string(b.shape));
    TensorT<S> out({m, n});
    for (int i = 0; i < m; ++i) {
        const S* arow = &a.data[static_cast<size_t>(i) * k];
        S* orow = &out.data[static_cast<size_t>(i) * n];
        for (int p = 0; p < k; ++p) {
            const S av = arow[p];
            if (av == S(0)) continue;
            const S* brow = &b.data[static_cast<size_t>(p) * n];
            for (int j = 0; j < n; ++j) orow[j] += av * brow[j];
        }
    }
    return out;
}

// a * b^T, with a (m x k) and b (n x k).
template <class S>
TensorT<S> matmul_nt_plain(const TensorT<S>& a, const TensorT<S>& b) {
    const int m = a.rows(), k = a.cols(), n = b.rows();
    if (b.cols() != k) fail("matmul_nt: inner dims " + shape_string(a.shape) + " vs " + shape_string(b.shape));
    TensorT<S> out({m, n});
    for (int i = 0; i < m; ++i) {
        const S* arow = &a.data[static_cast<size_t>(i) * k];
        for (int j = 0; j < n; ++j) {
            const S* brow = &b.data[static_cast<size_t>(j) * k];
            S acc = 0;
            for (int p = 0; p < k; ++p) acc += arow[p] * brow[p];
            out.at(i, j) = acc;
        }
    }
    return out;
}

// a^T * b, with a (k x m) and b (k x n).
template <class S>
TensorT<S> matmul_tn_plain(const TensorT<S>& a, const TensorT<S>& b) {
    const int k = a.rows(), m = a.cols(), n = b.cols();
    if (b.rows() != k) fail("matmul_tn: inner dims");
    TensorT<S> out({m, n});
    for (int p = 0; p < k; ++p) {
        const S* arow = &a.data[static_cast<size_t>(p) * m];
        const S* brow = &b.data[static_cast<size_t>(p) * n];
        for (int i = 0; i < m; ++i) {
            const S av = arow[i];
            if (av == S(0)) continue;
            S* orow = &out.data[static_cast<size_t>(i) * n];
            for (int j = 0; j < n; ++j) orow[j] += av * brow[j];
        }
    }
    return out;
}

template <class S>
double max_abs_diff(const TensorT<S>& a, const TensorT<S>& b) {
    if (!a.same_shape(b)) fail("max_abs_diff: shape mismatch");
    double m = 0;
    for (size_t i = 0; i < a.data.size(); ++i) {
        m = std::max(m, std::abs(static_cast<double>(a.data[i]) - static_cast<double>(b.data[i])));
    }
    return m;
}

}  // namespace omnisonic
