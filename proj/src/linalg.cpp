#include "omnisonic/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace omnisonic {

EigResult jacobi_eigh(const TensorT<double>& a, int max_sweeps, double tol) {
    const int n = a.rows();
    if (a.cols() != n) fail("jacobi_eigh: matrix must be square");
    TensorT<double> m = a;
    TensorT<double> v({n, n});
    for (int i = 0; i < n; ++i) v.at(i, i) = 1.0;

    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += m.at(p, q) * m.at(p, q);
        if (std::sqrt(off) < tol) break;

        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = m.at(p, q);
                if (std::abs(apq) < 1e-300) continue;
                const double app = m.at(p, p), aqq = m.at(q, q);
                const double tau = (aqq - app) / (2.0 * apq);
                const double t = (tau >= 0 ? 1.0 : -1.0) /
                                 (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double mkp = m.at(k, p), mkq = m.at(k, q);
                    m.at(k, p) = c * mkp - s * mkq;
                    m.at(k, q) = s * mkp + c * mkq;
                }
                for (int k = 0; k < n; ++k) {
                    const double mpk = m.at(p, k), mqk = m.at(q, k);
                    m.at(p, k) = c * mpk - s * mqk;
                    m.at(q, k) = s * mpk + c * mqk;
                }
                for (int k = 0; k < n; ++k) {
                    const double vkp = v.at(k, p), vkq = v.at(k, q);
                    v.at(k, p) = c * vkp - s * vkq;
                    v.at(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int i, int j) { return m.at(i, i) < m.at(j, j); });

    EigResult r;
    r.values.resize(n);
    r.vectors = TensorT<double>({n, n});
    for (int k = 0; k < n; ++k) {
        r.values[k] = m.at(order[k], order[k]);
        for (int i = 0; i < n; ++i) r.vectors.at(i, k) = v.at(i, order[k]);
    }
    return r;
}

TensorT<double> matrix_sqrt_psd(const TensorT<double>& a) {
    const int n = a.rows();
    if (a.cols() != n) fail("matrix_sqrt_psd: matrix must be square");
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            if (std::abs(a.at(i, j) - a.at(j, i)) > 1e-6)
                fail("matrix_sqrt_psd: input not symmetric");
        }
    }
    // Symmetrize exactly before decomposing so tiny asymmetries don't leak in.
    TensorT<double> sym({n, n});
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) sym.at(i, j) = 0.5 * (a.at(i, j) + a.at(j, i));

    EigResult eig = jacobi_eigh(sym);
    double lam_max = 0.0;
    for (double lam : eig.values) lam_max = std::max(lam_max, std::abs(lam));
    // Tolerances scale with the spectrum: rank-deficient inputs put true-zero
    // eigenvalues at noise level, and sqrt would otherwise inflate them.
    const double neg_tol = std::max(1e-8, 1e-8 * lam_max);
    const double zero_floor = lam_max * 1e-12;
    for (double& lam : eig.values) {
        if (lam < -neg_tol) fail("matrix_sqrt_psd: negative eigenvalue beyond tolerance");
        lam = lam <= zero_floor ? 0.0 : std::sqrt(lam);
    }
    // V diag(sqrt(lam)) V^T
    TensorT<double> out({n, n});
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int k = 0; k < n; ++k)
                acc += eig.vectors.at(i, k) * eig.values[k] * eig.vectors.at(j, k);
            out.at(i, j) = acc;
        }
    }
    return out;
}

}  // namespace omnisonic
