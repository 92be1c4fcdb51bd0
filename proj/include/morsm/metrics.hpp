#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include <Eigen/Core>

#include "morsm/signalgen.hpp"
#include "morsm/steiglitz_mcbride.hpp"

namespace morsm {

inline constexpr std::size_t kDefaultImpulseLength = 100;

struct ImpulseError {
  double rmse = 0.0;     // +inf if the truncated response overflowed
  bool unstable = false;  // estimated F outside the stability region
};

/// || g_true - g_est ||_2 over the first `len` impulse-response samples.
ImpulseError rmse_impulse(const BjSystem& truth, const PlantEstimate& est,
                          std::size_t len = kDefaultImpulseLength);

/// 100 (1 - rmse / || g_true - mean(g_true) ||), in percent.
double fit_impulse(const BjSystem& truth, const PlantEstimate& est,
                   std::size_t len = kDefaultImpulseLength);
double fit_from_rmse(const BjSystem& truth, double rmse, std::size_t len = kDefaultImpulseLength);

/// Cramer-Rao information for theta = [f; l]:
///   M = 1/(2 pi sigma^2) int Re{ v v^* } Phi_u dw,
///   v = [ -G/(F H) Gamma_m ; 1/(F H) Gamma_m ],  Phi_u = sigma_w^2 |F_u|^2.
/// The asymptotic covariance bound of sqrt(N)(theta_hat - theta) is M^-1.
struct CrBound {
  Eigen::MatrixXd M;
  Eigen::MatrixXd inverse;
  double sigma2 = 1.0;

  const Eigen::MatrixXd& covariance() const noexcept { return inverse; }
};

inline constexpr std::size_t kDefaultQuadraturePoints = 8192;

CrBound cramer_rao(const BjSystem& sys, const RationalTf& input_filter, double sigma_w2,
                   double sigma2, std::size_t m, std::size_t K = kDefaultQuadraturePoints);

/// Unbiased sample covariance (divisor R - 1) about the sample mean.
Eigen::MatrixXd empirical_cov(const std::vector<Eigen::VectorXd>& estimates);

/// trace(N * emp) / trace(bound covariance).
double efficiency_ratio(const Eigen::MatrixXd& emp, const CrBound& bound, std::size_t N);

/// Header `matrix,i,j,value`; rows for M then its inverse (row-major).
void write_crbound_csv(std::ostream& os, const CrBound& bound);

}  // namespace morsm
