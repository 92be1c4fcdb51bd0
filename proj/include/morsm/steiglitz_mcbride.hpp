#pragma once

// Steiglitz-McBride iterations and the two ARX-based pre-filters that turn
// them into MORSM (simulated output B(eta) u) and BJSM (whitened measured
// output A(eta) y).

#include <cstddef>
#include <iosfwd>
#include <vector>

#include <Eigen/Core>

#include "morsm/arx.hpp"
#include "morsm/lti.hpp"
#include "morsm/signalgen.hpp"

namespace morsm {

/// Plant model L/F; theta = [f_1..f_mf, l_1..l_ml].
struct PlantEstimate {
  Polynomial L = Polynomial::strictly_causal({});
  Polynomial F;

  static PlantEstimate from_theta(const Eigen::VectorXd& theta, std::size_t m_f,
                                  std::size_t m_l);
  static PlantEstimate from_system(const BjSystem& sys) { return {sys.L, sys.F}; }

  std::size_t m_l() const noexcept { return L.degree(); }
  std::size_t m_f() const noexcept { return F.degree(); }
  Eigen::VectorXd theta() const;
  RationalTf tf() const { return {L, F}; }
};

struct SmTrace {
  std::vector<PlantEstimate> iterates;  // [0] is the initialization
  std::vector<double> costs;            // +inf where F is unstable
  std::vector<bool> f_stable;
  /// The relative-change stopping rule fired before max_iterations.
  bool converged = false;

  std::size_t last() const noexcept { return iterates.size() - 1; }
};

struct SmOptions {
  std::size_t max_iterations = 1;
  double stop_tol = 1e-10;
};

struct Prefiltered {
  Signal y;
  Signal u;
};

/// y_pf = B(eta) u, u_pf = A(eta) u. The measured output is not used.
Prefiltered morsm_prefilter(const ArxModel& arx, const Signal& u);

/// y_pf = A(eta) y, u_pf = A(eta) u.
Prefiltered bjsm_prefilter(const ArxModel& arx, const Signal& u, const Signal& y);

/// Iterate 0 is the least-squares fit of F y_pf = L u_pf; iterate k+1 refits
/// after filtering both channels by 1/F(theta_k). Regression rows start at
/// t = max(m_f, m_l) + 1. An unstable F(theta_k) has its outside roots pulled
/// to modulus 0.99 before being inverted; the trace records the event.
SmTrace sm_iterate(const Signal& y_pf, const Signal& u_pf, std::size_t m_l, std::size_t m_f,
                   const SmOptions& opts = {});

/// (1/N) sum (y_pf - (L/F) u_pf)^2, the cost each iteration attempts to reduce.
double output_error_cost(const Signal& y_pf, const Signal& u_pf, const PlantEstimate& plant);

struct ReductionResult {
  PlantEstimate estimate;
  std::size_t headline_iteration = 0;
  SmTrace trace;
  ArxFitReport arx;
};

/// ARX fit, MORSM pre-filter, SM iterations. The headline estimate is
/// iterate 1 (iterate 0 if max_iterations is 0).
ReductionResult morsm(const DataRecord& data, std::size_t m_l, std::size_t m_f, std::size_t n,
                      const SmOptions& opts = {}, double delta = kDefaultArxDelta);
/// Same, reusing an ARX fit; `u` is the only data consulted.
ReductionResult morsm(const ArxFitReport& arx, const Signal& u, std::size_t m_l,
                      std::size_t m_f, const SmOptions& opts = {});

/// ARX fit, BJSM pre-filter, SM iterations. The headline estimate is the
/// final iterate.
ReductionResult bjsm(const DataRecord& data, std::size_t m_l, std::size_t m_f, std::size_t n,
                     const SmOptions& opts = {}, double delta = kDefaultArxDelta);
ReductionResult bjsm(const ArxFitReport& arx, const DataRecord& data, std::size_t m_l,
                     std::size_t m_f, const SmOptions& opts = {});

/// (1/N) sum [B(eta) u - (L/F) A(eta) u]^2. Throws kUnstablePlant if F is
/// unstable.
double asym_cost(const ArxModel& arx, const PlantEstimate& plant, const Signal& u);

/// Columns: iter, f_1..f_mf, l_1..l_ml, asym_cost, f_stable
void write_trace_csv(std::ostream& os, const SmTrace& trace);

}  // namespace morsm
