#include "morsm/steiglitz_mcbride.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

#include <Eigen/QR>

#include "morsm/error.hpp"
#include "morsm/io.hpp"

namespace morsm {
namespace {

Eigen::VectorXd least_squares_arx(std::span<const double> y, std::span<const double> u,
                                  std::size_t m_l, std::size_t m_f) {
  const std::size_t N = y.size();
  const std::size_t m = std::max(m_l, m_f);
  const auto rows = static_cast<Eigen::Index>(N - m);
  const auto cols = static_cast<Eigen::Index>(m_f + m_l);
  Eigen::MatrixXd phi(rows, cols);
  Eigen::VectorXd target(rows);
  for (std::size_t t = m; t < N; ++t) {
    const auto row = static_cast<Eigen::Index>(t - m);
    for (std::size_t k = 1; k <= m_f; ++k) phi(row, static_cast<Eigen::Index>(k - 1)) = -y[t - k];
    for (std::size_t k = 1; k <= m_l; ++k) {
      phi(row, static_cast<Eigen::Index>(m_f + k - 1)) = u[t - k];
    }
    target[row] = y[t];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(phi);
  if (qr.rank() < cols) {
    throw Error(ErrorCode::kRankDeficientSm, "rank-deficient SM regression");
  }
  Eigen::VectorXd theta = qr.solve(target);
  if (!theta.allFinite()) {
    throw Error(ErrorCode::kRankDeficientSm, "rank-deficient SM regression");
  }
  return theta;
}

}  // namespace

PlantEstimate PlantEstimate::from_theta(const Eigen::VectorXd& theta, std::size_t m_f,
                                        std::size_t m_l) {
  if (static_cast<std::size_t>(theta.size()) != m_f + m_l) {
    throw Error(ErrorCode::kInvalidArgument, "theta length does not match plant orders");
  }
  std::vector<double> f(theta.data(), theta.data() + m_f);
  std::vector<double> l(theta.data() + m_f, theta.data() + m_f + m_l);
  return {Polynomial::strictly_causal(std::move(l)), Polynomial::monic(std::move(f))};
}

Eigen::VectorXd PlantEstimate::theta() const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(m_f() + m_l()));
  Eigen::Index i = 0;
  for (double c : F.coeffs()) out[i++] = c;
  for (double c : L.coeffs()) out[i++] = c;
  return out;
}

Prefiltered morsm_prefilter(const ArxModel& arx, const Signal& u) {
  if (arx.n == 0) throw Error(ErrorCode::kInvalidArgument, "ARX order must be positive");
  return {Signal(fir_filter(arx.B(), u.view())), Signal(fir_filter(arx.A(), u.view()))};
}

Prefiltered bjsm_prefilter(const ArxModel& arx, const Signal& u, const Signal& y) {
  if (arx.n == 0) throw Error(ErrorCode::kInvalidArgument, "ARX order must be positive");
  if (u.size() != y.size()) throw Error(ErrorCode::kInvalidArgument, "u and y lengths differ");
  return {Signal(fir_filter(arx.A(), y.view())), Signal(fir_filter(arx.A(), u.view()))};
}

double output_error_cost(const Signal& y_pf, const Signal& u_pf, const PlantEstimate& plant) {
  const auto sim = filter(plant.tf(), u_pf.view());
  double ss = 0.0;
  for (std::size_t t = 0; t < sim.size(); ++t) {
    const double e = y_pf[t] - sim[t];
    ss += e * e;
  }
  return ss / static_cast<double>(sim.size());
}

SmTrace sm_iterate(const Signal& y_pf, const Signal& u_pf, std::size_t m_l, std::size_t m_f,
                   const SmOptions& opts) {
  if (y_pf.size() != u_pf.size()) {
    throw Error(ErrorCode::kInvalidArgument, "pre-filtered signals differ in length");
  }
  if (m_f == 0 || m_l == 0) throw Error(ErrorCode::kInvalidArgument, "plant orders must be positive");
  if (y_pf.size() <= m_l + m_f) {
    throw Error(ErrorCode::kSampleTooSmall, "sample size too small for the plant orders");
  }

  SmTrace trace;
  auto record = [&](PlantEstimate est) {
    const bool stable = is_stable(est.F);
    double cost = std::numeric_limits<double>::infinity();
    if (stable) {
      try {
        cost = output_error_cost(y_pf, u_pf, est);
      } catch (const FilterOverflow&) {
      }
    }
    trace.iterates.push_back(std::move(est));
    trace.costs.push_back(cost);
    trace.f_stable.push_back(stable);
  };

  Eigen::VectorXd theta = least_squares_arx(y_pf.view(), u_pf.view(), m_l, m_f);
  record(PlantEstimate::from_theta(theta, m_f, m_l));

  for (std::size_t k = 0; k < opts.max_iterations; ++k) {
    const Polynomial& F = trace.iterates.back().F;
    const RationalTf inv(Polynomial::one(),
                         trace.f_stable.back() ? F : project_into_unit_disc(F, 0.99));
    const auto yf = filter(inv, y_pf.view());
    const auto uf = filter(inv, u_pf.view());
    Eigen::VectorXd next = least_squares_arx(yf, uf, m_l, m_f);
    const double change = (next - theta).norm();
    const double scale = theta.norm();
    theta = std::move(next);
    record(PlantEstimate::from_theta(theta, m_f, m_l));
    if (change <= opts.stop_tol * scale) {
      trace.converged = true;
      break;
    }
  }
  return trace;
}

ReductionResult morsm(const ArxFitReport& arx, const Signal& u, std::size_t m_l,
                      std::size_t m_f, const SmOptions& opts) {
  const auto pf = morsm_prefilter(arx.model, u);
  ReductionResult out;
  out.trace = sm_iterate(pf.y, pf.u, m_l, m_f, opts);
  out.headline_iteration = std::min<std::size_t>(1, out.trace.last());
  out.estimate = out.trace.iterates[out.headline_iteration];
  out.arx = arx;
  return out;
}

ReductionResult morsm(const DataRecord& data, std::size_t m_l, std::size_t m_f, std::size_t n,
                      const SmOptions& opts, double delta) {
  return morsm(estimate_arx(data, n, delta), data.u, m_l, m_f, opts);
}

ReductionResult bjsm(const ArxFitReport& arx, const DataRecord& data, std::size_t m_l,
                     std::size_t m_f, const SmOptions& opts) {
  const auto pf = bjsm_prefilter(arx.model, data.u, data.y);
  ReductionResult out;
  out.trace = sm_iterate(pf.y, pf.u, m_l, m_f, opts);
  out.headline_iteration = out.trace.last();
  out.estimate = out.trace.iterates.back();
  out.arx = arx;
  return out;
}

ReductionResult bjsm(const DataRecord& data, std::size_t m_l, std::size_t m_f, std::size_t n,
                     const SmOptions& opts, double delta) {
  return bjsm(estimate_arx(data, n, delta), data, m_l, m_f, opts);
}

double asym_cost(const ArxModel& arx, const PlantEstimate& plant, const Signal& u) {
  if (!is_stable(plant.F)) throw Error(ErrorCode::kUnstablePlant, "unstable candidate plant");
  const auto pf = morsm_prefilter(arx, u);
  return output_error_cost(pf.y, pf.u, plant);
}

void write_trace_csv(std::ostream& os, const SmTrace& trace) {
  if (trace.iterates.empty()) return;
  const auto& first = trace.iterates.front();
  os << "iter";
  for (std::size_t k = 1; k <= first.m_f(); ++k) os << ",f_" << k;
  for (std::size_t k = 1; k <= first.m_l(); ++k) os << ",l_" << k;
  os << ",asym_cost,f_stable\n";
  for (std::size_t i = 0; i < trace.iterates.size(); ++i) {
    os << i;
    const auto theta = trace.iterates[i].theta();
    for (Eigen::Index j = 0; j < theta.size(); ++j) os << ',' << format_double(theta[j]);
    os << ',' << format_double(trace.costs[i]) << ',' << (trace.f_stable[i] ? 1 : 0) << '\n';
  }
}

}  // namespace morsm
