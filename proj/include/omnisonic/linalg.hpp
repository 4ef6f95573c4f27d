#pragma once

#include <vector>

#include "omnisonic/tensor.hpp"

namespace omnisonic {

// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
// Returns eigenvalues ascending; eigvecs columns match that order.
struct EigResult {
    std::vector<double> values;
    TensorT<double> vectors;  // column k = eigenvector for values[k]
};

EigResult jacobi_eigh(const TensorT<double>& a, int max_sweeps = 64, double tol = 1e-12);

// Principal square root of a symmetric PSD matrix. Validates symmetry to
// 1e-6; eigenvalues in [-1e-8, 0) are clamped to zero, anything lower is an
// error (the input was supposed to be PSD).
TensorT<double> matrix_sqrt_psd(const TensorT<double>& a);

}  // namespace omnisonic
