// Compiled with -mavx2 -mfma on x86-64. Nothing here runs unless dispatch
// has confirmed the CPU supports both extensions.
#include "mixfree/kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>

namespace mixfree::kernels {

namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

inline __m256d gather4(const double* table, const std::int32_t* idx) {
  const __m128i i4 = _mm_loadu_si128(reinterpret_cast<const __m128i*>(idx));
  return _mm256_i32gather_pd(table, i4, 8);
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4)
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double sum_avx2(const double* a, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_add_pd(_mm256_loadu_pd(a + i), acc0);
    acc1 = _mm256_add_pd(_mm256_loadu_pd(a + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) acc0 = _mm256_add_pd(_mm256_loadu_pd(a + i), acc0);
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += a[i];
  return acc;
}

double gathered_sq_error_avx2(const double* table, const std::int32_t* idx, const double* y,
                              std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256d r0 = _mm256_sub_pd(gather4(table, idx + i), _mm256_loadu_pd(y + i));
    const __m256d r1 = _mm256_sub_pd(gather4(table, idx + i + 4), _mm256_loadu_pd(y + i + 4));
    acc0 = _mm256_fmadd_pd(r0, r0, acc0);
    acc1 = _mm256_fmadd_pd(r1, r1, acc1);
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) {
    const double r = table[idx[i]] - y[i];
    acc += r * r;
  }
  return acc;
}

double gathered_weighted_sum_avx2(const double* table, const std::int32_t* idx,
                                  const double* w, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(gather4(table, idx + i), _mm256_loadu_pd(w + i), acc0);
    acc1 = _mm256_fmadd_pd(gather4(table, idx + i + 4), _mm256_loadu_pd(w + i + 4), acc1);
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += w[i] * table[idx[i]];
  return acc;
}

double gathered_sq_sum_avx2(const double* table, const std::int32_t* idx, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256d v0 = gather4(table, idx + i);
    const __m256d v1 = gather4(table, idx + i + 4);
    acc0 = _mm256_fmadd_pd(v0, v0, acc0);
    acc1 = _mm256_fmadd_pd(v1, v1, acc1);
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) {
    const double v = table[idx[i]];
    acc += v * v;
  }
  return acc;
}

}  // namespace

const KernelTable& avx2_table() {
  static const KernelTable table{Isa::Avx2,
                                 dot_avx2,
                                 sum_avx2,
                                 gathered_sq_error_avx2,
                                 gathered_weighted_sum_avx2,
                                 gathered_sq_sum_avx2};
  return table;
}

}  // namespace mixfree::kernels

#else

namespace mixfree::kernels {
const KernelTable& avx2_table() { return scalar_table(); }
}  // namespace mixfree::kernels

#endif
