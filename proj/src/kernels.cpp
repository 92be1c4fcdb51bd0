#include "morsm/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

#include "morsm/error.hpp"

namespace morsm::kernels {
namespace {

bool cpu_has_avx2() {
#if defined(MORSM_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable& table_for(Backend b) {
#if defined(MORSM_HAVE_AVX2)
  if (b == Backend::kAvx2) return avx2_table();
#endif
  (void)b;
  return scalar_table();
}

const KernelTable* initial_table() {
  if (const char* env = std::getenv("MORSM_KERNELS")) {
    const std::string want(env);
    if (want == "scalar") return &scalar_table();
    if (want == "avx2" && cpu_has_avx2()) return &table_for(Backend::kAvx2);
  }
  if (cpu_has_avx2()) return &table_for(Backend::kAvx2);
  return &scalar_table();
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{initial_table()};
  return table;
}

}  // namespace

bool backend_available(Backend b) {
  switch (b) {
    case Backend::kScalar:
      return true;
    case Backend::kAvx2:
      return cpu_has_avx2();
  }
  return false;
}

const KernelTable& active() { return *current().load(std::memory_order_acquire); }

void set_backend(Backend b) {
  if (!backend_available(b)) {
    throw Error(ErrorCode::kInvalidArgument,
                "kernel backend not available: " + std::string(backend_name(b)));
  }
  current().store(&table_for(b), std::memory_order_release);
}

std::vector<Backend> available_backends() {
  std::vector<Backend> out{Backend::kScalar};
  if (backend_available(Backend::kAvx2)) out.push_back(Backend::kAvx2);
  return out;
}

std::string_view backend_name(Backend b) {
  switch (b) {
    case Backend::kScalar:
      return "scalar";
    case Backend::kAvx2:
      return "avx2";
  }
  return "unknown";
}

void cross_correlation(std::span<const double> x, std::span<const double> z,
                       std::size_t max_lag, std::span<double> out) {
  const std::size_t n = x.size() < z.size() ? x.size() : z.size();
  const auto& k = active();
  for (std::size_t lag = 0; lag <= max_lag; ++lag) {
    out[lag] = lag < n ? k.dot(x.data() + lag, z.data(), n - lag) : 0.0;
  }
}

}  // namespace morsm::kernels
