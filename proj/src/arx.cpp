#include "morsm/arx.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>

#include "morsm/error.hpp"
#include "morsm/kernels.hpp"

namespace morsm {
namespace {

void check_sample_size(std::size_t N, std::size_t n) {
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "ARX order must be positive");
  if (N <= 2 * n) {
    throw Error(ErrorCode::kSampleTooSmall,
                "sample size too small for order " + std::to_string(n));
  }
}

// S(i, j) = sum_{t=0}^{N-1} x[t-i] z[t-j] for i, j = 1..n (zero history),
// written into block(i-1, j-1).
//
// The first row and column come from dot products; the rest follows from
// S(i+1, j+1) = S(i, j) - x[N-1-i] z[N-1-j].
template <typename Block>
void lagged_products(std::span<const double> x, std::span<const double> z, std::size_t n,
                     Block block) {
  const std::size_t N = x.size();
  const auto& k = kernels::active();
  for (std::size_t j = 1; j <= n; ++j) {
    block(0, j - 1) = k.dot(x.data() + (j - 1), z.data(), N - j);
  }
  for (std::size_t i = 2; i <= n; ++i) {
    block(i - 1, 0) = k.dot(x.data(), z.data() + (i - 1), N - i);
  }
  for (std::size_t i = 1; i < n; ++i) {
    for (std::size_t j = 1; j < n; ++j) {
      block(i, j) = block(i - 1, j - 1) - x[N - 1 - i] * z[N - 1 - j];
    }
  }
}

}  // namespace

ArxModel::ArxModel(std::vector<double> a_coeffs, std::vector<double> b_coeffs)
    : n(a_coeffs.size()), a(std::move(a_coeffs)), b(std::move(b_coeffs)) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kInvalidArgument, "ARX A and B must have equal order");
  }
}

Eigen::VectorXd ArxModel::eta() const {
  Eigen::VectorXd out(2 * n);
  for (std::size_t k = 0; k < n; ++k) {
    out[static_cast<Eigen::Index>(k)] = a[k];
    out[static_cast<Eigen::Index>(n + k)] = b[k];
  }
  return out;
}

Regression build_regressor(const DataRecord& data, std::size_t n) {
  const std::size_t N = data.size();
  check_sample_size(N, n);
  Regression reg{Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(2 * n)),
                 Eigen::VectorXd(static_cast<Eigen::Index>(N))};
  for (std::size_t t = 0; t < N; ++t) {
    const auto row = static_cast<Eigen::Index>(t);
    for (std::size_t k = 1; k <= n && k <= t; ++k) {
      reg.phi(row, static_cast<Eigen::Index>(k - 1)) = -data.y[t - k];
      reg.phi(row, static_cast<Eigen::Index>(n + k - 1)) = data.u[t - k];
    }
    reg.target[row] = data.y[t];
  }
  return reg;
}

void arx_normal_equations(const DataRecord& data, std::size_t n, Eigen::MatrixXd& R,
                          Eigen::VectorXd& r) {
  const std::size_t N = data.size();
  check_sample_size(N, n);
  const auto y = data.y.view();
  const auto u = data.u.view();
  const auto m = static_cast<Eigen::Index>(n);

  R.resize(2 * m, 2 * m);
  r.resize(2 * m);
  lagged_products(y, y, n, [&](std::size_t i, std::size_t j) -> double& {
    return R(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  });
  lagged_products(y, u, n, [&](std::size_t i, std::size_t j) -> double& {
    return R(static_cast<Eigen::Index>(i), m + static_cast<Eigen::Index>(j));
  });
  lagged_products(u, u, n, [&](std::size_t i, std::size_t j) -> double& {
    return R(m + static_cast<Eigen::Index>(i), m + static_cast<Eigen::Index>(j));
  });
  R.topRightCorner(m, m) *= -1.0;
  R.bottomLeftCorner(m, m) = R.topRightCorner(m, m).transpose();

  const auto& k = kernels::active();
  for (std::size_t i = 1; i <= n; ++i) {
    const auto idx = static_cast<Eigen::Index>(i - 1);
    r[idx] = -k.dot(y.data(), y.data() + i, N - i);
    r[m + idx] = k.dot(u.data(), y.data() + i, N - i);
  }
  const double scale = 1.0 / static_cast<double>(N);
  R *= scale;
  r *= scale;
}

ArxFitReport estimate_arx(const DataRecord& data, std::size_t n, double delta) {
  if (!(delta > 0.0)) throw Error(ErrorCode::kInvalidArgument, "ARX delta must be positive");
  Eigen::MatrixXd R;
  Eigen::VectorXd r;
  arx_normal_equations(data, n, R, r);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(R);
  if (eig.info() != Eigen::Success) throw Error(ErrorCode::kArxSolveFailed, "ARX solve failed");
  const Eigen::VectorXd& lambda = eig.eigenvalues();
  const double lmin = lambda.minCoeff();
  const double lmax = lambda.maxCoeff();

  ArxFitReport report;
  report.min_eigenvalue = lmin;
  report.condition_estimate = lmin > 0.0 ? lmax / lmin : std::numeric_limits<double>::infinity();
  // ||R^-1||_2 < 2/delta  <=>  lambda_min > delta/2
  report.regularized = !(lmin > delta / 2.0);
  const double shift = report.regularized ? delta / 2.0 : 0.0;

  const Eigen::MatrixXd& V = eig.eigenvectors();
  Eigen::VectorXd coord = V.transpose() * r;
  for (Eigen::Index i = 0; i < coord.size(); ++i) coord[i] /= (lambda[i] + shift);
  const Eigen::VectorXd eta = V * coord;
  if (!eta.allFinite()) throw Error(ErrorCode::kArxSolveFailed, "ARX solve failed");

  std::vector<double> a(n), b(n);
  for (std::size_t k = 0; k < n; ++k) {
    a[k] = eta[static_cast<Eigen::Index>(k)];
    b[k] = eta[static_cast<Eigen::Index>(n + k)];
  }
  report.model = ArxModel(std::move(a), std::move(b));

  const auto ay = fir_filter(report.model.A(), data.y.view());
  const auto bu = fir_filter(report.model.B(), data.u.view());
  double ss = 0.0;
  for (std::size_t t = 0; t < ay.size(); ++t) {
    const double e = ay[t] - bu[t];
    ss += e * e;
  }
  report.residual_variance = ss / static_cast<double>(data.size());
  return report;
}

std::size_t default_order(std::size_t N) {
  if (N < 50) {
    throw Error(ErrorCode::kSampleTooSmall, "default ARX order needs N >= 50");
  }
  constexpr double kExponent = 1.0 / 5.0;
  const double c = 50.0 / std::pow(1000.0, kExponent);
  const auto raw = static_cast<std::size_t>(std::llround(c * std::pow(static_cast<double>(N), kExponent)));
  return std::clamp<std::size_t>(raw, 10, N / 4);
}

}  // namespace morsm
