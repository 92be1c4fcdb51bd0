// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.

#include <immintrin.h>

#include "morsm/kernels.hpp"

namespace morsm::kernels {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  __m256d acc2 = _mm256_setzero_pd();
  __m256d acc3 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    acc2 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 8), _mm256_loadu_pd(b + i + 8), acc2);
    acc3 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 12), _mm256_loadu_pd(b + i + 12), acc3);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double s = hsum(_mm256_add_pd(_mm256_add_pd(acc0, acc1), _mm256_add_pd(acc2, acc3)));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

// Vectorized across output samples: lanes hold y[t..t+3], the tap loop runs
// in the same order as the scalar kernel.
void fir_avx2(const double* h, std::size_t taps, const double* x, double* y,
              std::size_t n) {
  if (taps == 0) {
    for (std::size_t t = 0; t < n; ++t) y[t] = 0.0;
    return;
  }
  const std::size_t head = taps - 1 < n ? taps - 1 : n;
  for (std::size_t t = 0; t < head; ++t) {
    double acc = 0.0;
    for (std::size_t k = 0; k <= t; ++k) acc += h[k] * x[t - k];
    y[t] = acc;
  }
  std::size_t t = head;
  for (; t + 8 <= n; t += 8) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    for (std::size_t k = 0; k < taps; ++k) {
      const __m256d hk = _mm256_broadcast_sd(h + k);
      acc0 = _mm256_fmadd_pd(hk, _mm256_loadu_pd(x + t - k), acc0);
      acc1 = _mm256_fmadd_pd(hk, _mm256_loadu_pd(x + t + 4 - k), acc1);
    }
    _mm256_storeu_pd(y + t, acc0);
    _mm256_storeu_pd(y + t + 4, acc1);
  }
  for (; t + 4 <= n; t += 4) {
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t k = 0; k < taps; ++k) {
      acc = _mm256_fmadd_pd(_mm256_broadcast_sd(h + k), _mm256_loadu_pd(x + t - k), acc);
    }
    _mm256_storeu_pd(y + t, acc);
  }
  for (; t < n; ++t) {
    double acc = 0.0;
    for (std::size_t k = 0; k < taps; ++k) acc += h[k] * x[t - k];
    y[t] = acc;
  }
}

}  // namespace

const KernelTable& avx2_table() {
  static const KernelTable table{Backend::kAvx2, "avx2", &dot_avx2, &fir_avx2};
  return table;
}

}  // namespace morsm::kernels
