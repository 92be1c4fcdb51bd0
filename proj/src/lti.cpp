#include "morsm/lti.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>

#include "morsm/error.hpp"
#include "morsm/kernels.hpp"

namespace morsm {

Polynomial::Polynomial(double constant, std::vector<double> coeffs)
    : constant_(constant), coeffs_(std::move(coeffs)) {
  if (constant_ != 0.0 && constant_ != 1.0) {
    throw Error(ErrorCode::kInvalidArgument,
                "polynomial constant term must be 0 or 1, got " +
                    std::to_string(constant_));
  }
  for (double c : coeffs_) {
    if (!std::isfinite(c)) {
      throw Error(ErrorCode::kInvalidArgument, "non-finite polynomial coefficient");
    }
  }
}

Polynomial Polynomial::delay(std::size_t k) {
  if (k == 0) return one();
  std::vector<double> c(k, 0.0);
  c.back() = 1.0;
  return Polynomial(0.0, std::move(c));
}

std::vector<double> Polynomial::full() const {
  std::vector<double> out;
  out.reserve(coeffs_.size() + 1);
  out.push_back(constant_);
  out.insert(out.end(), coeffs_.begin(), coeffs_.end());
  return out;
}

std::complex<double> Polynomial::evaluate(std::complex<double> z_inv) const {
  // Horner from the highest power of q^-1.
  std::complex<double> acc = 0.0;
  for (std::size_t k = coeffs_.size(); k > 0; --k) acc = acc * z_inv + coeffs_[k - 1];
  return acc * z_inv + constant_;
}

RationalTf::RationalTf(Polynomial n, Polynomial d) : num(std::move(n)), den(std::move(d)) {
  if (!den.is_monic()) {
    throw Error(ErrorCode::kInvalidArgument, "transfer function denominator must be monic");
  }
}

std::complex<double> RationalTf::frequency_response(double omega) const {
  const std::complex<double> z_inv = std::polar(1.0, -omega);
  return num.evaluate(z_inv) / den.evaluate(z_inv);
}

Signal::Signal(std::vector<double> samples) : samples_(std::move(samples)) {
  for (std::size_t t = 0; t < samples_.size(); ++t) {
    if (!std::isfinite(samples_[t])) {
      throw Error(ErrorCode::kInvalidArgument,
                  "non-finite signal sample at index " + std::to_string(t));
    }
  }
}

Polynomial poly_mul(const Polynomial& p, const Polynomial& q) {
  const auto a = p.full();
  const auto b = q.full();
  std::vector<double> c(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) c[i + j] += a[i] * b[j];
  }
  const double constant = c.front();
  c.erase(c.begin());
  return Polynomial(constant, std::move(c));
}

std::vector<double> fir_filter(const Polynomial& p, std::span<const double> x) {
  const auto h = p.full();
  std::vector<double> y(x.size());
  kernels::active().fir(h.data(), h.size(), x.data(), y.data(), x.size());
  return y;
}

std::vector<double> filter(const RationalTf& tf, std::span<const double> x) {
  std::vector<double> y = fir_filter(tf.num, x);
  const auto a = tf.den.coeffs();
  const std::size_t na = a.size();
  if (na > 0) {
    for (std::size_t t = 0; t < y.size(); ++t) {
      double acc = y[t];
      const std::size_t kmax = std::min(na, t);
      for (std::size_t k = 1; k <= kmax; ++k) acc -= a[k - 1] * y[t - k];
      y[t] = acc;
    }
  }
  for (std::size_t t = 0; t < y.size(); ++t) {
    if (!std::isfinite(y[t])) throw FilterOverflow(t);
  }
  return y;
}

Signal filter(const RationalTf& tf, const Signal& x) {
  if (x.empty()) throw Error(ErrorCode::kInvalidArgument, "cannot filter an empty signal");
  return Signal(filter(tf, x.view()));
}

std::vector<double> impulse_response(const RationalTf& tf, std::size_t len) {
  if (len == 0) throw Error(ErrorCode::kInvalidArgument, "impulse response length must be >= 1");
  std::vector<double> impulse(len, 0.0);
  impulse[0] = 1.0;
  return filter(tf, std::span<const double>(impulse));
}

namespace {

// Roots of full[0] z^d + full[1] z^{d-1} + ... + full[d] after stripping
// leading zeros.
std::vector<std::complex<double>> roots_of_sequence(std::vector<double> full) {
  auto first = std::find_if(full.begin(), full.end(), [](double c) { return c != 0.0; });
  full.erase(full.begin(), first);
  if (full.size() <= 1) return {};
  const Eigen::Index m = static_cast<Eigen::Index>(full.size() - 1);
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index j = 0; j < m; ++j) companion(0, j) = -full[j + 1] / full[0];
  for (Eigen::Index i = 1; i < m; ++i) companion(i, i - 1) = 1.0;
  Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
  const auto& ev = solver.eigenvalues();
  std::vector<std::complex<double>> out(ev.data(), ev.data() + ev.size());
  return out;
}

}  // namespace

std::vector<std::complex<double>> roots(const Polynomial& p) { return roots_of_sequence(p.full()); }

Polynomial from_roots(std::span<const std::complex<double>> r) {
  std::vector<std::complex<double>> c{1.0};
  for (const auto& root : r) {
    c.push_back(0.0);
    for (std::size_t k = c.size() - 1; k > 0; --k) c[k] -= root * c[k - 1];
  }
  std::vector<double> coeffs;
  coeffs.reserve(r.size());
  for (std::size_t k = 1; k < c.size(); ++k) coeffs.push_back(c[k].real());
  return Polynomial::monic(std::move(coeffs));
}

double spectral_radius(const Polynomial& p) {
  double rho = 0.0;
  for (const auto& z : roots(p)) rho = std::max(rho, std::abs(z));
  return rho;
}

bool is_stable(const Polynomial& p) {
  if (!p.is_monic()) {
    throw Error(ErrorCode::kInvalidArgument, "stability test requires a monic polynomial");
  }
  return spectral_radius(p) < 1.0 - kStabilityMargin;
}

Polynomial project_into_unit_disc(const Polynomial& p, double max_modulus) {
  auto r = roots(p);
  bool changed = false;
  for (auto& z : r) {
    const double mod = std::abs(z);
    if (mod >= 1.0 - kStabilityMargin) {
      z *= max_modulus / mod;
      changed = true;
    }
  }
  if (!changed) return p;
  return from_roots(r);
}

double min_root_distance(const Polynomial& p, const Polynomial& q) {
  const auto rp = roots(p);
  const auto rq = roots(q);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& a : rp) {
    for (const auto& b : rq) best = std::min(best, std::abs(a - b));
  }
  return best;
}

}  // namespace morsm
