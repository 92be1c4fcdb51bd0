#include "morsm/metrics.hpp"

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <ostream>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "morsm/error.hpp"
#include "morsm/io.hpp"

namespace morsm {

ImpulseError rmse_impulse(const BjSystem& truth, const PlantEstimate& est, std::size_t len) {
  ImpulseError out;
  out.unstable = !is_stable(est.F);
  const auto g0 = impulse_response(truth.plant(), len);
  std::vector<double> g;
  try {
    g = impulse_response(est.tf(), len);
  } catch (const FilterOverflow&) {
    out.rmse = std::numeric_limits<double>::infinity();
    return out;
  }
  double ss = 0.0;
  for (std::size_t k = 0; k < len; ++k) ss += (g0[k] - g[k]) * (g0[k] - g[k]);
  out.rmse = std::isfinite(ss) ? std::sqrt(ss) : std::numeric_limits<double>::infinity();
  return out;
}

double fit_from_rmse(const BjSystem& truth, double rmse, std::size_t len) {
  const auto g0 = impulse_response(truth.plant(), len);
  double mean = 0.0;
  for (double v : g0) mean += v;
  mean /= static_cast<double>(len);
  double ss = 0.0;
  for (double v : g0) ss += (v - mean) * (v - mean);
  if (!(ss > 0.0)) throw Error(ErrorCode::kDegenerateFit, "degenerate FIT baseline");
  return 100.0 * (1.0 - rmse / std::sqrt(ss));
}

double fit_impulse(const BjSystem& truth, const PlantEstimate& est, std::size_t len) {
  return fit_from_rmse(truth, rmse_impulse(truth, est, len).rmse, len);
}

CrBound cramer_rao(const BjSystem& sys, const RationalTf& input_filter, double sigma_w2,
                   double sigma2, std::size_t m, std::size_t K) {
  if (sys.m_f() != m || sys.m_l() != m) {
    throw Error(ErrorCode::kInvalidArgument, "Cramer-Rao bound needs m = m_f = m_l");
  }
  if (!(sigma2 > 0.0) || !(sigma_w2 > 0.0) || K < 2 * m + 1) {
    throw Error(ErrorCode::kInvalidArgument, "invalid Cramer-Rao arguments");
  }
  sys.validate();

  const auto dim = static_cast<Eigen::Index>(2 * m);
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXcd v(dim);
  // Uniform periodic grid: the trapezoidal rule reduces to an equal-weight sum.
  for (std::size_t j = 0; j < K; ++j) {
    const double w = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(K);
    const std::complex<double> z_inv = std::polar(1.0, -w);
    const auto F = sys.F.evaluate(z_inv);
    const auto G = sys.L.evaluate(z_inv) / F;
    const auto H = sys.C.evaluate(z_inv) / sys.D.evaluate(z_inv);
    const double phi_u = sigma_w2 * std::norm(input_filter.frequency_response(w));
    const auto base = 1.0 / (F * H);
    std::complex<double> shift = 1.0;
    for (std::size_t k = 0; k < m; ++k) {
      shift *= z_inv;
      v[static_cast<Eigen::Index>(k)] = -G * base * shift;
      v[static_cast<Eigen::Index>(m + k)] = base * shift;
    }
    M.noalias() += phi_u * (v * v.adjoint()).real();
  }
  M /= sigma2 * static_cast<double>(K);
  M = 0.5 * (M + M.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(M);
  const double lmin = eig.eigenvalues().minCoeff();
  const double lmax = eig.eigenvalues().maxCoeff();
  if (!(lmin > 1e-12 * lmax)) {
    throw Error(ErrorCode::kSingularCramerRao,
                "Cramer-Rao matrix singular (model not identifiable, e.g. common factors)");
  }
  CrBound out;
  out.M = M;
  out.inverse = M.inverse();
  out.inverse = 0.5 * (out.inverse + out.inverse.transpose()).eval();
  out.sigma2 = sigma2;
  return out;
}

Eigen::MatrixXd empirical_cov(const std::vector<Eigen::VectorXd>& estimates) {
  if (estimates.size() < 2) {
    throw Error(ErrorCode::kTooFewEstimates, "empirical covariance needs at least 2 estimates");
  }
  const auto dim = estimates.front().size();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
  for (const auto& e : estimates) mean += e;
  mean /= static_cast<double>(estimates.size());
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(dim, dim);
  for (const auto& e : estimates) {
    const Eigen::VectorXd d = e - mean;
    cov.noalias() += d * d.transpose();
  }
  return cov / static_cast<double>(estimates.size() - 1);
}

double efficiency_ratio(const Eigen::MatrixXd& emp, const CrBound& bound, std::size_t N) {
  return static_cast<double>(N) * emp.trace() / bound.covariance().trace();
}

void write_crbound_csv(std::ostream& os, const CrBound& bound) {
  os << "matrix,i,j,value\n";
  auto dump = [&](const char* name, const Eigen::MatrixXd& A) {
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
      for (Eigen::Index j = 0; j < A.cols(); ++j) {
        os << name << ',' << i + 1 << ',' << j + 1 << ',' << format_double(A(i, j)) << '\n';
      }
    }
  };
  dump("M", bound.M);
  dump("M_inv", bound.inverse);
}

}  // namespace morsm
