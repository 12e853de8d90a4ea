#pragma once

#include <cstdint>

namespace ulo {

// Dense row-major kernels used by the engine. All variants have a fixed
// reduction order per output element, independent of thread count, so
// results are bitwise reproducible run to run.

// C[M,N] = A[M,K] * B[K,N]   (+= when accumulate)
void gemm_nn(int64_t m, int64_t k, int64_t n, const double* a, const double* b,
             double* c, bool accumulate = false);

// C[M,K] = A[M,L] * B[K,L]^T, i.e. C[i,j] = sum_l A[i,l] * B[j,l].
// Tuned for a long contraction dimension L and small M, K.
void gemm_nt(int64_t m, int64_t l, int64_t k, const double* a, const double* b,
             double* c, bool accumulate = false);

// out[N,M] = in[M,N]^T
void transpose(int64_t m, int64_t n, const double* in, double* out);

}  // namespace ulo
