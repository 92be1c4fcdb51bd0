#include "morsm/pem.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/QR>

#include "morsm/error.hpp"

namespace morsm {
namespace {

void require_invertible(const BjEstimate& est) {
  if (!is_stable(est.C) || !is_stable(est.plant.F)) {
    throw Error(ErrorCode::kNonInvertiblePredictor, "non-invertible predictor");
  }
}

std::vector<double> output_residual(const PlantEstimate& plant, const DataRecord& data) {
  auto v = filter(plant.tf(), data.u.view());
  for (std::size_t t = 0; t < v.size(); ++t) v[t] = data.y[t] - v[t];
  return v;
}

double mean_square(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s / static_cast<double>(x.size());
}

// column(t) = x[t - k]
void put_shifted(Eigen::MatrixXd& J, Eigen::Index col, std::span<const double> x, std::size_t k,
                 double sign) {
  const std::size_t N = x.size();
  for (std::size_t t = 0; t < N; ++t) {
    J(static_cast<Eigen::Index>(t), col) = t >= k ? sign * x[t - k] : 0.0;
  }
}

bool admissible(const BjEstimate& est) { return is_stable(est.C) && is_stable(est.plant.F); }

}  // namespace

BjEstimate BjEstimate::from_parameters(const Eigen::VectorXd& p, const BjEstimate& shape) {
  const std::size_t mf = shape.plant.m_f(), ml = shape.plant.m_l();
  const std::size_t mc = shape.C.degree(), md = shape.D.degree();
  if (static_cast<std::size_t>(p.size()) != mf + ml + mc + md) {
    throw Error(ErrorCode::kInvalidArgument, "parameter vector does not match model orders");
  }
  const double* it = p.data();
  std::vector<double> f(it, it + mf);
  it += mf;
  std::vector<double> l(it, it + ml);
  it += ml;
  std::vector<double> c(it, it + mc);
  it += mc;
  std::vector<double> d(it, it + md);
  return {PlantEstimate{Polynomial::strictly_causal(std::move(l)), Polynomial::monic(std::move(f))},
          Polynomial::monic(std::move(c)), Polynomial::monic(std::move(d))};
}

Eigen::VectorXd BjEstimate::alpha() const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(C.degree() + D.degree()));
  Eigen::Index i = 0;
  for (double c : C.coeffs()) out[i++] = c;
  for (double d : D.coeffs()) out[i++] = d;
  return out;
}

Eigen::VectorXd BjEstimate::parameters() const {
  const Eigen::VectorXd theta = plant.theta();
  const Eigen::VectorXd a = alpha();
  Eigen::VectorXd out(theta.size() + a.size());
  out << theta, a;
  return out;
}

Signal prediction_errors(const BjEstimate& est, const DataRecord& data) {
  require_invertible(est);
  const auto v = output_residual(est.plant, data);
  return Signal(filter(RationalTf(est.D, est.C), std::span<const double>(v)));
}

double pem_loss(const BjEstimate& est, const DataRecord& data) {
  return mean_square(prediction_errors(est, data).view());
}

Eigen::MatrixXd prediction_error_jacobian(const BjEstimate& est, const DataRecord& data,
                                          Eigen::VectorXd* eps_out) {
  require_invertible(est);
  const std::size_t N = data.size();
  const std::size_t mf = est.plant.m_f(), ml = est.plant.m_l();
  const std::size_t mc = est.C.degree(), md = est.D.degree();

  const auto gu = filter(est.plant.tf(), data.u.view());
  std::vector<double> v(N);
  for (std::size_t t = 0; t < N; ++t) v[t] = data.y[t] - gu[t];
  const auto eps = filter(RationalTf(est.D, est.C), std::span<const double>(v));

  const RationalTf dcf(est.D, poly_mul(est.C, est.plant.F));
  const RationalTf inv_c = RationalTf::all_pole(est.C);
  const auto s_f = filter(dcf, std::span<const double>(gu));
  const auto s_l = filter(dcf, data.u.view());
  const auto s_c = filter(inv_c, std::span<const double>(eps));
  const auto s_d = filter(inv_c, std::span<const double>(v));

  Eigen::MatrixXd J(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(mf + ml + mc + md));
  Eigen::Index col = 0;
  for (std::size_t k = 1; k <= mf; ++k) put_shifted(J, col++, s_f, k, 1.0);
  for (std::size_t k = 1; k <= ml; ++k) put_shifted(J, col++, s_l, k, -1.0);
  for (std::size_t k = 1; k <= mc; ++k) put_shifted(J, col++, s_c, k, -1.0);
  for (std::size_t k = 1; k <= md; ++k) put_shifted(J, col++, s_d, k, 1.0);

  if (eps_out != nullptr) *eps_out = Eigen::Map<const Eigen::VectorXd>(eps.data(), static_cast<Eigen::Index>(N));
  return J;
}

PemReport pem_fit(const DataRecord& data, const BjEstimate& init, const PemOptions& opts) {
  if (!admissible(init)) {
    throw Error(ErrorCode::kNonInvertiblePredictor, "PEM initialization is not stable");
  }
  PemReport report;
  report.estimate = init;
  report.loss = pem_loss(init, data);
  report.loss_history.push_back(report.loss);
  if (report.loss == 0.0) {
    report.converged = true;
    return report;
  }

  const double inv_n = 1.0 / static_cast<double>(data.size());
  Eigen::VectorXd p = init.parameters();
  const auto P = p.size();

  for (std::size_t iter = 0; iter < opts.max_iterations; ++iter) {
    Eigen::VectorXd eps;
    const Eigen::MatrixXd J = prediction_error_jacobian(report.estimate, data, &eps);
    const Eigen::VectorXd grad = 2.0 * inv_n * (J.transpose() * eps);
    report.gradient_norm = grad.norm();

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(J);
    if (qr.rank() < P) {
      throw Error(ErrorCode::kIllConditionedPem,
                  "ill-conditioned PEM step (Jacobian rank " + std::to_string(qr.rank()) +
                      " of " + std::to_string(P) + ", iteration " + std::to_string(iter) + ")");
    }
    const Eigen::VectorXd step = -qr.solve(eps);
    if (!step.allFinite()) {
      throw Error(ErrorCode::kIllConditionedPem, "ill-conditioned PEM step (non-finite direction)");
    }

    bool accepted = false;
    double mu = 1.0;
    BjEstimate candidate;
    double candidate_loss = 0.0;
    for (std::size_t h = 0; h <= opts.max_halvings; ++h, mu *= 0.5) {
      candidate = BjEstimate::from_parameters(p + mu * step, report.estimate);
      if (!admissible(candidate)) continue;
      try {
        candidate_loss = pem_loss(candidate, data);
      } catch (const FilterOverflow&) {
        continue;
      }
      if (candidate_loss < report.loss) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      report.converged = true;
      break;
    }

    const double rel = (report.loss - candidate_loss) / report.loss;
    p = candidate.parameters();
    report.estimate = std::move(candidate);
    report.loss = candidate_loss;
    report.loss_history.push_back(candidate_loss);
    ++report.iterations;
    if (rel < opts.f_tol || report.loss == 0.0) {
      report.converged = true;
      break;
    }
  }
  return report;
}

BjEstimate initial_noise_model(const PlantEstimate& plant, const DataRecord& data,
                               std::size_t m_c, std::size_t m_d) {
  const std::size_t N = data.size();
  const std::size_t h = std::min<std::size_t>(30, N / 10);
  BjEstimate out{plant, Polynomial::monic(std::vector<double>(m_c, 0.0)),
                 Polynomial::monic(std::vector<double>(m_d, 0.0))};
  if (m_c + m_d == 0) return out;
  if (h <= m_c + m_d || N < 4 * (h + m_c + m_d)) {
    throw Error(ErrorCode::kSampleTooSmall, "sample size too small for noise-model initialization");
  }
  const auto v = output_residual(plant, data);

  // Stage 1: AR(h) whitening of v.
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(N - h), static_cast<Eigen::Index>(h));
  Eigen::VectorXd target(static_cast<Eigen::Index>(N - h));
  for (std::size_t t = h; t < N; ++t) {
    for (std::size_t k = 1; k <= h; ++k) X(static_cast<Eigen::Index>(t - h), static_cast<Eigen::Index>(k - 1)) = -v[t - k];
    target[static_cast<Eigen::Index>(t - h)] = v[t];
  }
  const Eigen::VectorXd ar = X.colPivHouseholderQr().solve(target);
  std::vector<double> innov(N, 0.0);
  for (std::size_t t = h; t < N; ++t) innov[t] = target[static_cast<Eigen::Index>(t - h)] - X.row(static_cast<Eigen::Index>(t - h)).dot(ar);

  // Stage 2: D v = C e  =>  v_t = -sum d_k v_{t-k} + sum c_k e_{t-k} + e_t.
  const std::size_t start = 2 * h;
  const auto rows = static_cast<Eigen::Index>(N - start);
  Eigen::MatrixXd Z(rows, static_cast<Eigen::Index>(m_c + m_d));
  Eigen::VectorXd rhs(rows);
  for (std::size_t t = start; t < N; ++t) {
    const auto r = static_cast<Eigen::Index>(t - start);
    for (std::size_t k = 1; k <= m_c; ++k) Z(r, static_cast<Eigen::Index>(k - 1)) = innov[t - k];
    for (std::size_t k = 1; k <= m_d; ++k) Z(r, static_cast<Eigen::Index>(m_c + k - 1)) = -v[t - k];
    rhs[r] = v[t] - innov[t];
  }
  const Eigen::VectorXd cd = Z.colPivHouseholderQr().solve(rhs);
  if (!cd.allFinite()) return out;
  Polynomial C = Polynomial::monic(std::vector<double>(cd.data(), cd.data() + m_c));
  Polynomial D = Polynomial::monic(std::vector<double>(cd.data() + m_c, cd.data() + m_c + m_d));
  if (!is_stable(C)) C = project_into_unit_disc(C);
  if (!is_stable(D)) D = project_into_unit_disc(D);
  out.C = std::move(C);
  out.D = std::move(D);
  return out;
}

double morsm_selection_loss(const ArxModel& arx, const PlantEstimate& plant,
                            const DataRecord& data) {
  if (!is_stable(plant.F)) throw Error(ErrorCode::kUnstablePlant, "unstable candidate plant");
  const auto v = output_residual(plant, data);
  return mean_square(fir_filter(arx.A(), v));
}

}  // namespace morsm
