#include "omnisonic/codec.hpp"

#include <cmath>

#include "omnisonic/rng.hpp"

namespace omnisonic {

namespace {

// Seeded random matrix orthonormalized by modified Gram-Schmidt in double.
TensorT<double> orthonormal_basis(int dim, uint64_t seed) {
    Rng rng(seed);
    TensorT<double> q({dim, dim});
    for (auto& v : q.data) v = rng.normal();
    for (int i = 0; i < dim; ++i) {
        for (int j = 0; j < i; ++j) {
            double dot = 0.0;
            for (int k = 0; k < dim; ++k) dot += q.at(i, k) * q.at(j, k);
            for (int k = 0; k < dim; ++k) q.at(i, k) -= dot * q.at(j, k);
        }
        double norm = 0.0;
        for (int k = 0; k < dim; ++k) norm += q.at(i, k) * q.at(i, k);
        norm = std::sqrt(norm);
        if (norm < 1e-8) fail("orthonormal_basis: degenerate draw");
        for (int k = 0; k < dim; ++k) q.at(i, k) /= norm;
    }
    return q;
}

}  // namespace

LatentCodec::LatentCodec(const CodecConfig& cfg) : cfg_(cfg) {
    if (cfg.patch_t < 1 || cfg.patch_f < 1) fail("codec: patch dims must be positive");
    const int dim = cfg.patch_t * cfg.patch_f;
    if (cfg.truncate_8 && dim < 8) fail("codec: truncate_8 needs patch dim >= 8");
    if (cfg.identity_basis) {
        q_ = TensorT<double>::zeros({dim, dim});
        for (int i = 0; i < dim; ++i) q_.at(i, i) = 1.0;
    } else {
        q_ = orthonormal_basis(dim, cfg.seed);
    }
    mean_.assign(out_channels(), 0.0);
    std_.assign(out_channels(), 1.0);
}

void LatentCodec::calibrate(const std::vector<MelSpec>& corpus) {
    if (corpus.empty()) fail("codec: empty calibration corpus");
    const int C = out_channels();
    std::vector<double> sum(C, 0.0), sumsq(C, 0.0);
    size_t count = 0;
    for (const MelSpec& m : corpus) {
        const int T = m.rows(), F = m.cols();
        if (T % cfg_.patch_t != 0 || F % cfg_.patch_f != 0)
            fail("codec: calibration grid not divisible by patch");
        const int dim = cfg_.patch_t * cfg_.patch_f;
        std::vector<double> v(dim);
        for (int pt = 0; pt < T / cfg_.patch_t; ++pt) {
            for (int pf = 0; pf < F / cfg_.patch_f; ++pf) {
                int i = 0;
                for (int dt = 0; dt < cfg_.patch_t; ++dt)
                    for (int df = 0; df < cfg_.patch_f; ++df)
                        v[i++] = m.grid.at(pt * cfg_.patch_t + dt, pf * cfg_.patch_f + df);
                for (int c = 0; c < C; ++c) {
                    double y = 0.0;
                    for (int k = 0; k < dim; ++k) y += q_.at(c, k) * v[k];
                    sum[c] += y;
                    sumsq[c] += y * y;
                }
                ++count;
            }
        }
    }
    for (int c = 0; c < C; ++c) {
        mean_[c] = sum[c] / double(count);
        const double var = sumsq[c] / double(count) - mean_[c] * mean_[c];
        std_[c] = std::sqrt(std::max(var, 1e-12));
        if (std_[c] < 1e-6) std_[c] = 1.0;  // flat channel: leave unscaled
    }
}

void LatentCodec::set_stats(std::vector<double> means, std::vector<double> stds) {
    if (static_cast<int>(means.size()) != out_channels() ||
        static_cast<int>(stds.size()) != out_channels())
        fail("codec: stats size mismatch");
    for (double s : stds)
        if (s <= 0.0) fail("codec: non-positive std");
    mean_ = std::move(means);
    std_ = std::move(stds);
}

Latent LatentCodec::encode(const MelSpec& m) const {
    const int T = m.rows(), F = m.cols();
    if (T % cfg_.patch_t != 0 || F % cfg_.patch_f != 0)
        fail("codec: grid not divisible by patch");
    const int Tl = T / cfg_.patch_t, Fl = F / cfg_.patch_f;
    const int dim = cfg_.patch_t * cfg_.patch_f;
    const int C = out_channels();
    Latent x;
    x.data = Tensor({C, Tl, Fl});
    std::vector<double> v(dim);
    for (int pt = 0; pt < Tl; ++pt) {
        for (int pf = 0; pf < Fl; ++pf) {
            int i = 0;
            for (int dt = 0; dt < cfg_.patch_t; ++dt)
                for (int df = 0; df < cfg_.patch_f; ++df)
                    v[i++] = m.grid.at(pt * cfg_.patch_t + dt, pf * cfg_.patch_f + df);
            for (int c = 0; c < C; ++c) {
                double y = 0.0;
                for (int k = 0; k < dim; ++k) y += q_.at(c, k) * v[k];
                x.data.data[(static_cast<size_t>(c) * Tl + pt) * Fl + pf] =
                    static_cast<float>((y - mean_[c]) / std_[c]);
            }
        }
    }
    check_finite(x.data, "codec.encode");
    return x;
}

MelSpec LatentCodec::decode(const Latent& x) const {
    const int C = x.channels(), Tl = x.time(), Fl = x.freq();
    if (C != out_channels()) fail("codec: channel count mismatch");
    const int dim = cfg_.patch_t * cfg_.patch_f;
    MelSpec m;
    m.grid = Tensor({Tl * cfg_.patch_t, Fl * cfg_.patch_f});
    std::vector<double> y(dim, 0.0), v(dim);
    for (int pt = 0; pt < Tl; ++pt) {
        for (int pf = 0; pf < Fl; ++pf) {
            std::fill(y.begin(), y.end(), 0.0);
            for (int c = 0; c < C; ++c)
                y[c] = double(x.data.data[(static_cast<size_t>(c) * Tl + pt) * Fl + pf]) *
                           std_[c] + mean_[c];
            for (int k = 0; k < dim; ++k) {
                double acc = 0.0;
                for (int c = 0; c < dim; ++c) acc += q_.at(c, k) * y[c];  // Q^T y
                v[k] = acc;
            }
            int i = 0;
            for (int dt = 0; dt < cfg_.patch_t; ++dt)
                for (int df = 0; df < cfg_.patch_f; ++df)
                    m.grid.at(pt * cfg_.patch_t + dt, pf * cfg_.patch_f + df) =
                        static_cast<float>(v[i++]);
        }
    }
    check_finite(m.grid, "codec.decode");
    return m;
}

}  // namespace omnisonic
