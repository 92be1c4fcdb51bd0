#pragma once

// Data-parallel inner loops. Each backend provides the same table of kernels;
// the library calls through `kernels::active()`, which is resolved once from
// the CPU features (or the MORSM_KERNELS environment variable).

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace morsm::kernels {

enum class Backend { kScalar, kAvx2 };

struct KernelTable {
  Backend backend;
  const char* name;

  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);

  // y[t] = sum_{k < taps, k <= t} h[k] * x[t - k] for t < n  (zero history)
  void (*fir)(const double* h, std::size_t taps, const double* x, double* y,
              std::size_t n);
};

const KernelTable& scalar_table();
#if defined(MORSM_HAVE_AVX2)
const KernelTable& avx2_table();
#endif

bool backend_available(Backend b);

/// Table used by the library. Defaults to the widest supported backend.
const KernelTable& active();

/// Overrides the active backend (tests use this to compare variants).
/// Throws morsm::Error if the backend is not available on this machine.
void set_backend(Backend b);

std::vector<Backend> available_backends();

std::string_view backend_name(Backend b);

// Convenience wrappers over the active table.

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size() < b.size() ? a.size() : b.size());
}

/// out[k] = sum_{t=k}^{n-1} x[t] * z[t-k] for k = 0..max_lag.
void cross_correlation(std::span<const double> x, std::span<const double> z,
                       std::size_t max_lag, std::span<double> out);

}  // namespace morsm::kernels
