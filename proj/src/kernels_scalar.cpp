#include "morsm/kernels.hpp"

namespace morsm::kernels {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void fir_scalar(const double* h, std::size_t taps, const double* x, double* y,
                std::size_t n) {
  for (std::size_t t = 0; t < n; ++t) {
    const std::size_t kmax = t + 1 < taps ? t + 1 : taps;
    double acc = 0.0;
    for (std::size_t k = 0; k < kmax; ++k) acc += h[k] * x[t - k];
    y[t] = acc;
  }
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{Backend::kScalar, "scalar", &dot_scalar,
                                 &fir_scalar};
  return table;
}

}  // namespace morsm::kernels
