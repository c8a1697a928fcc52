// SPDX-License-Identifier: Apache-2.0
//
// Row-major float64 GEMM kernels accumulating into C, backed by Eigen's
// single-threaded product kernels (deterministic for fixed shapes).

#pragma once

#include <Eigen/Core>
#include <cstddef>

namespace diva::kernels {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using Map = Eigen::Map<RowMat>;

inline Eigen::Index ix(std::size_t n) { return static_cast<Eigen::Index>(n); }

// C[p x r] += A[p x k] * B[k x r]
inline void gemm_nn(std::size_t p, std::size_t k, std::size_t r, const double* a, const double* b,
                    double* c) {
    if (p == 0 || r == 0 || k == 0) return;
    Map(c, ix(p), ix(r)).noalias() += ConstMap(a, ix(p), ix(k)) * ConstMap(b, ix(k), ix(r));
}

// C[p x r] += A[p x k] * B[r x k]^T
inline void gemm_nt(std::size_t p, std::size_t k, std::size_t r, const double* a, const double* b,
                    double* c) {
    if (p == 0 || r == 0 || k == 0) return;
    Map(c, ix(p), ix(r)).noalias() +=
        ConstMap(a, ix(p), ix(k)) * ConstMap(b, ix(r), ix(k)).transpose();
}

// C[p x r] += A[k x p]^T * B[k x r]
inline void gemm_tn(std::size_t p, std::size_t k, std::size_t r, const double* a, const double* b,
                    double* c) {
    if (p == 0 || r == 0 || k == 0) return;
    Map(c, ix(p), ix(r)).noalias() +=
        ConstMap(a, ix(k), ix(p)).transpose() * ConstMap(b, ix(k), ix(r));
}

}  // namespace diva::kernels
