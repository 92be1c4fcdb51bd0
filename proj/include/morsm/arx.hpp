#pragma once

// High-order ARX estimation by linear least squares:
//   A(q) y_t = B(q) u_t + e_t,  A = 1 + sum a_k q^-k,  B = sum b_k q^-k,
// both with n coefficients.

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "morsm/lti.hpp"
#include "morsm/signalgen.hpp"

namespace morsm {

struct ArxModel {
  std::size_t n = 0;
  std::vector<double> a;  // a_1..a_n
  std::vector<double> b;  // b_1..b_n

  ArxModel() = default;
  ArxModel(std::vector<double> a_coeffs, std::vector<double> b_coeffs);

  Polynomial A() const { return Polynomial::monic(a); }
  Polynomial B() const { return Polynomial::strictly_causal(b); }

  /// [a_1..a_n, b_1..b_n]
  Eigen::VectorXd eta() const;
};

struct ArxFitReport {
  ArxModel model;
  bool regularized = false;
  double residual_variance = 0.0;
  /// lambda_max / lambda_min of the sample covariance R.
  double condition_estimate = 0.0;
  /// Smallest eigenvalue of R; ||R^-1||_2 is its reciprocal.
  double min_eigenvalue = 0.0;
};

struct Regression {
  Eigen::MatrixXd phi;     // N x 2n
  Eigen::VectorXd target;  // N
};

/// Rows t = 1..N: [-y_{t-1} .. -y_{t-n}, u_{t-1} .. u_{t-n}] with zero
/// initial conditions. Throws kSampleTooSmall unless N > 2n.
Regression build_regressor(const DataRecord& data, std::size_t n);

inline constexpr double kDefaultArxDelta = 1e-4;

/// Least-squares ARX fit. When ||R^-1||_2 >= 2/delta the estimate uses
/// R + (delta/2) I instead of R.
ArxFitReport estimate_arx(const DataRecord& data, std::size_t n,
                          double delta = kDefaultArxDelta);

/// Sample covariance R = (1/N) sum phi phi^T and r = (1/N) sum phi y of the
/// order-n regressor, computed from lagged correlations without forming the
/// regressor matrix.
void arx_normal_equations(const DataRecord& data, std::size_t n, Eigen::MatrixXd& R,
                          Eigen::VectorXd& r);

/// Growth schedule for the ARX order: round(c N^{1/5}) clamped to
/// [10, N/4], with c such that default_order(1000) = 50. Requires N >= 50.
std::size_t default_order(std::size_t N);

}  // namespace morsm
