#include "ulo/gemm.hpp"

#include <algorithm>
#include <cstring>

namespace ulo {
namespace {

// Register tile of the nn kernel. 8x16 doubles of C stay in registers
// across the k chunk; B rows are streamed through L1/L2.
constexpr int64_t kMr = 8;
constexpr int64_t kNr = 16;
constexpr int64_t kKc = 128;   // k chunk
constexpr int64_t kNc = 512;   // column tile handed to one thread
constexpr int64_t kLc = 1024;  // contraction chunk of the nt kernel

typedef double v8d __attribute__((vector_size(64), aligned(8)));

inline v8d load8(const double* p) {
  v8d v;
  __builtin_memcpy(&v, p, sizeof(v));
  return v;
}

inline void store8(double* p, v8d v) { __builtin_memcpy(p, &v, sizeof(v)); }

// 8x16 register tile; the 16 vector accumulators live in registers across
// the whole k chunk.
inline void kernel_nn_8x16(int64_t kc, const double* __restrict a, int64_t lda,
                           const double* __restrict b, int64_t ldb,
                           double* __restrict c, int64_t ldc, bool first) {
  v8d acc[kMr][2];
  if (first) {
    for (auto& row : acc) row[0] = row[1] = v8d{};
  } else {
    for (int64_t i = 0; i < kMr; ++i) {
      acc[i][0] = load8(c + i * ldc);
      acc[i][1] = load8(c + i * ldc + 8);
    }
  }
  for (int64_t p = 0; p < kc; ++p) {
    const double* brow = b + p * ldb;
    const v8d b0 = load8(brow);
    const v8d b1 = load8(brow + 8);
    for (int64_t i = 0; i < kMr; ++i) {
      const v8d av = v8d{} + a[i * lda + p];
      acc[i][0] += av * b0;
      acc[i][1] += av * b1;
    }
  }
  for (int64_t i = 0; i < kMr; ++i) {
    store8(c + i * ldc, acc[i][0]);
    store8(c + i * ldc + 8, acc[i][1]);
  }
}

inline void kernel_nn(int64_t mr, int64_t kc, int64_t nr, const double* a,
                      int64_t lda, const double* b, int64_t ldb, double* c,
                      int64_t ldc, bool first) {
  if (mr == kMr && nr == kNr) {
    kernel_nn_8x16(kc, a, lda, b, ldb, c, ldc, first);
    return;
  }
  // ragged edges
  for (int64_t i = 0; i < mr; ++i) {
    for (int64_t j = 0; j < nr; ++j) {
      double s = first ? 0.0 : c[i * ldc + j];
      for (int64_t p = 0; p < kc; ++p) s += a[i * lda + p] * b[p * ldb + j];
      c[i * ldc + j] = s;
    }
  }
}

}  // namespace

void gemm_nn(int64_t m, int64_t k, int64_t n, const double* a, const double* b,
             double* c, bool accumulate) {
  if (m == 0 || n == 0) return;
  if (k == 0) {
    if (!accumulate)
      std::memset(c, 0, sizeof(double) * static_cast<size_t>(m * n));
    return;
  }
#pragma omp parallel for schedule(static, 1)
  for (int64_t j0 = 0; j0 < n; j0 += kNc) {
    const int64_t jn = std::min(kNc, n - j0);
    for (int64_t p0 = 0; p0 < k; p0 += kKc) {
      const int64_t pk = std::min(kKc, k - p0);
      const bool first = (p0 == 0) && !accumulate;
      for (int64_t i0 = 0; i0 < m; i0 += kMr) {
        const int64_t im = std::min(kMr, m - i0);
        for (int64_t j1 = 0; j1 < jn; j1 += kNr) {
          const int64_t jr = std::min(kNr, jn - j1);
          kernel_nn(im, pk, jr, a + i0 * k + p0, k, b + p0 * n + j0 + j1, n,
                    c + i0 * n + j0 + j1, n, first);
        }
      }
    }
  }
}

void gemm_nt(int64_t m, int64_t l, int64_t k, const double* a, const double* b,
             double* c, bool accumulate) {
  if (m == 0 || k == 0) return;
  if (l == 0) {
    if (!accumulate)
      std::memset(c, 0, sizeof(double) * static_cast<size_t>(m * k));
    return;
  }
  if (!accumulate)
    std::memset(c, 0, sizeof(double) * static_cast<size_t>(m * k));
  // Contraction chunks run in order; threads split the rows of B, so every
  // C element sees chunk-ordered serial accumulation whatever the thread
  // count is.
#pragma omp parallel
  {
    for (int64_t l0 = 0; l0 < l; l0 += kLc) {
      const int64_t lc = std::min(kLc, l - l0);
      const int64_t lv = lc - lc % 8;  // vectorizable part
#pragma omp for schedule(static)
      for (int64_t j0 = 0; j0 < k; j0 += 4) {
        const int64_t jb = std::min<int64_t>(4, k - j0);
        for (int64_t i0 = 0; i0 < m; i0 += 4) {
          const int64_t ib = std::min<int64_t>(4, m - i0);
          if (ib == 4 && jb == 4) {
            // 8 independent lanes per (i,j) pair; each lane is a serial
            // reduction, so the loop vectorizes without reassociation.
            double acc[4][4][8] = {};
            const double* ap[4];
            const double* bp[4];
            for (int64_t i = 0; i < 4; ++i) ap[i] = a + (i0 + i) * l + l0;
            for (int64_t j = 0; j < 4; ++j) bp[j] = b + (j0 + j) * l + l0;
            for (int64_t p = 0; p < lv; p += 8) {
              for (int64_t i = 0; i < 4; ++i) {
                for (int64_t j = 0; j < 4; ++j) {
                  for (int64_t q = 0; q < 8; ++q)
                    acc[i][j][q] += ap[i][p + q] * bp[j][p + q];
                }
              }
            }
            for (int64_t i = 0; i < 4; ++i) {
              for (int64_t j = 0; j < 4; ++j) {
                double s = 0.0;
                for (int64_t q = 0; q < 8; ++q) s += acc[i][j][q];
                for (int64_t p = lv; p < lc; ++p) s += ap[i][p] * bp[j][p];
                c[(i0 + i) * k + j0 + j] += s;
              }
            }
          } else {
            for (int64_t i = 0; i < ib; ++i) {
              for (int64_t j = 0; j < jb; ++j) {
                double lanes[8] = {};
                const double* ar = a + (i0 + i) * l + l0;
                const double* br = b + (j0 + j) * l + l0;
                for (int64_t p = 0; p < lv; p += 8)
                  for (int64_t q = 0; q < 8; ++q) lanes[q] += ar[p + q] * br[p + q];
                double s = 0.0;
                for (int64_t q = 0; q < 8; ++q) s += lanes[q];
                for (int64_t p = lv; p < lc; ++p) s += ar[p] * br[p];
                c[(i0 + i) * k + j0 + j] += s;
              }
            }
          }
        }
      }
      // implicit barrier keeps chunk order
    }
  }
}

void transpose(int64_t m, int64_t n, const double* in, double* out) {
  constexpr int64_t kB = 32;
  for (int64_t i0 = 0; i0 < m; i0 += kB) {
    const int64_t im = std::min(kB, m - i0);
    for (int64_t j0 = 0; j0 < n; j0 += kB) {
      const int64_t jn = std::min(kB, n - j0);
      for (int64_t i = 0; i < im; ++i)
        for (int64_t j = 0; j < jn; ++j)
          out[(j0 + j) * m + i0 + i] = in[(i0 + i) * n + j0 + j];
    }
  }
}

}  // namespace ulo
