#pragma once

// Test-only oracles and generators. Nothing here calls into the code paths it
// is used to check.

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include "morsm/lti.hpp"
#include "morsm/signalgen.hpp"

namespace morsm::testing {

inline std::vector<double> white_noise(std::uint64_t seed, std::size_t n, double sd = 1.0) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> dist(0.0, sd);
  std::vector<double> out(n);
  for (auto& v : out) v = dist(gen);
  return out;
}

/// Power-series division num/den, first `len` terms, straight from
/// den * g = num coefficient matching.
inline std::vector<double> long_division(const std::vector<double>& num,
                                         const std::vector<double>& den, std::size_t len) {
  std::vector<double> g(len, 0.0);
  for (std::size_t k = 0; k < len; ++k) {
    double acc = k < num.size() ? num[k] : 0.0;
    for (std::size_t j = 1; j < den.size() && j <= k; ++j) acc -= den[j] * g[k - j];
    g[k] = acc / den[0];
  }
  return g;
}

/// Direct-form recursion with explicit zero history, written independently
/// of the library's filter.
inline std::vector<double> naive_filter(const std::vector<double>& num,
                                        const std::vector<double>& den,
                                        const std::vector<double>& x) {
  std::vector<double> y(x.size(), 0.0);
  for (std::size_t t = 0; t < x.size(); ++t) {
    double acc = 0.0;
    for (std::size_t k = 0; k < num.size(); ++k) {
      if (t >= k) acc += num[k] * x[t - k];
    }
    for (std::size_t k = 1; k < den.size(); ++k) {
      if (t >= k) acc -= den[k] * y[t - k];
    }
    y[t] = acc / den[0];
  }
  return y;
}

/// Durand-Kerner iteration for the roots of z^m + c_1 z^{m-1} + ... + c_m.
inline std::vector<std::complex<double>> durand_kerner(const std::vector<double>& c) {
  const std::size_t m = c.size();
  std::vector<std::complex<double>> z(m);
  const std::complex<double> seed(0.4, 0.9);
  for (std::size_t i = 0; i < m; ++i) z[i] = std::pow(seed, static_cast<double>(i));
  auto p = [&](std::complex<double> x) {
    std::complex<double> acc = 1.0;
    for (double ci : c) acc = acc * x + ci;
    return acc;
  };
  for (int iter = 0; iter < 2000; ++iter) {
    double delta = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      std::complex<double> denom = 1.0;
      for (std::size_t j = 0; j < m; ++j) {
        if (j != i) denom *= (z[i] - z[j]);
      }
      if (std::abs(denom) == 0.0) denom = 1e-14;
      const auto step = p(z[i]) / denom;
      z[i] -= step;
      delta = std::max(delta, std::abs(step));
    }
    if (delta < 1e-14) break;
  }
  return z;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double max_abs(const std::vector<double>& a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

/// Noise-free record: white u, y = G u.
inline DataRecord noise_free_record(const BjSystem& sys, std::size_t N, std::uint64_t seed) {
  ExperimentInput exp;
  exp.input_filter = RationalTf();
  exp.innovation_variance = 1.0;
  exp.noise_variance = 0.0;
  exp.seed = seed;
  return generate_data(sys, exp, N);
}

inline DataRecord reference_record(std::size_t N, std::uint64_t seed) {
  ExperimentInput exp{reference_input_filter(), 1.0, 1.0, seed};
  return generate_data(reference_system(), exp, N);
}

}  // namespace morsm::testing
