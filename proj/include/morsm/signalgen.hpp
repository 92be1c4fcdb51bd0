#pragma once

// Box-Jenkins data generation:
//   u = F_u w,   y = (L/F) u + (C/D) e,
// with w and e independent Gaussian white sequences.

#include <cstddef>
#include <cstdint>
#include <optional>

#include "morsm/lti.hpp"

namespace morsm {

struct BjSystem {
  Polynomial L;  // strictly causal
  Polynomial F;  // monic
  Polynomial C;  // monic
  Polynomial D;  // monic

  BjSystem() = default;
  BjSystem(Polynomial l, Polynomial f, Polynomial c, Polynomial d);

  std::size_t m_l() const noexcept { return L.degree(); }
  std::size_t m_f() const noexcept { return F.degree(); }
  std::size_t m_c() const noexcept { return C.degree(); }
  std::size_t m_d() const noexcept { return D.degree(); }

  RationalTf plant() const { return {L, F}; }
  RationalTf noise() const { return {C, D}; }

  /// Throws kUnstableSystem if F, C or D is unstable or if L/F or C/D share
  /// a root (within 1e-8).
  void validate() const;
};

struct ExperimentInput {
  RationalTf input_filter = RationalTf();  // F_u
  double innovation_variance = 1.0;        // variance of w
  double noise_variance = 1.0;             // variance of e
  std::uint64_t seed = 0;
};

struct DataRecord {
  Signal u;
  Signal y;
  std::optional<BjSystem> truth;
  ExperimentInput meta;

  std::size_t size() const noexcept { return u.size(); }
};

/// G = (q^-1 + 0.1 q^-2) / (1 - 1.2 q^-1 + 0.6 q^-2),
/// H = (1 + 0.7 q^-1) / (1 - 0.9 q^-1).
BjSystem reference_system();

/// F_u = 1 / (1 - q^-1 + 0.89 q^-2).
RationalTf reference_input_filter();

/// Deterministic in (sys, exp, N).
DataRecord generate_data(const BjSystem& sys, const ExperimentInput& exp, std::size_t N);

/// As generate_data, but the noise is scaled per realization so that
/// sum u^2 / sum (H e)^2 equals `snr` exactly; meta.noise_variance holds the
/// resulting variance.
DataRecord generate_data_at_snr(const BjSystem& sys, const ExperimentInput& exp,
                                std::size_t N, double snr);

/// Noise variance scale lambda^2 with sum u^2 / sum (lambda H e_raw)^2 = target.
double calibrate_snr(const BjSystem& sys, const Signal& u, const Signal& e_raw,
                     double target_snr);

/// Realized signal-to-noise ratio sum u^2 / sum (H e)^2.
double realized_snr(const BjSystem& sys, const Signal& u, const Signal& e);

/// Random fourth-order system: l_i ~ U(-1, 1); F, C, D each with two
/// conjugate root pairs of modulus ~ U(0.7, 0.9) and argument ~ U(0, pi/2).
BjSystem sample_random_system(std::uint64_t seed, std::size_t order = 4);

}  // namespace morsm
