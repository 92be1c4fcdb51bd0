#pragma once

// Polynomials in the backward shift operator q^-1, rational transfer
// functions built from them, and causal filtering with zero initial
// conditions (every signal is taken to be 0 for t <= 0).

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace morsm {

/// c + coeffs[0] q^-1 + coeffs[1] q^-2 + ...  with c in {0, 1}.
///
/// Denominators and noise-model numerators are monic (c = 1); plant
/// numerators are strictly causal (c = 0). Trailing zero coefficients are
/// kept: the degree is the stored coefficient count and carries model-order
/// meaning.
class Polynomial {
 public:
  Polynomial() = default;  // the constant 1
  Polynomial(double constant, std::vector<double> coeffs);

  static Polynomial monic(std::vector<double> coeffs) {
    return Polynomial(1.0, std::move(coeffs));
  }
  static Polynomial strictly_causal(std::vector<double> coeffs) {
    return Polynomial(0.0, std::move(coeffs));
  }
  static Polynomial one() { return Polynomial(); }
  /// q^-k
  static Polynomial delay(std::size_t k);

  double constant() const noexcept { return constant_; }
  std::span<const double> coeffs() const noexcept { return coeffs_; }
  std::size_t degree() const noexcept { return coeffs_.size(); }
  bool is_monic() const noexcept { return constant_ == 1.0; }

  /// Coefficient of q^-k, k = 0..degree().
  double operator[](std::size_t k) const noexcept {
    return k == 0 ? constant_ : coeffs_[k - 1];
  }

  /// [constant, coeffs...]
  std::vector<double> full() const;

  /// Value of the polynomial with q^-1 replaced by `z_inv`.
  std::complex<double> evaluate(std::complex<double> z_inv) const;

  friend bool operator==(const Polynomial&, const Polynomial&) = default;

 private:
  double constant_ = 1.0;
  std::vector<double> coeffs_;
};

/// num / den with a monic denominator.
struct RationalTf {
  Polynomial num;
  Polynomial den;

  RationalTf() = default;
  RationalTf(Polynomial n, Polynomial d);

  static RationalTf fir(Polynomial n) { return RationalTf(std::move(n), Polynomial::one()); }
  static RationalTf all_pole(Polynomial d) { return RationalTf(Polynomial::one(), std::move(d)); }

  std::complex<double> frequency_response(double omega) const;
};

/// A finite-valued sample sequence u_1..u_N (stored 0-based).
class Signal {
 public:
  Signal() = default;
  explicit Signal(std::vector<double> samples);
  Signal(std::initializer_list<double> samples)
      : Signal(std::vector<double>(samples)) {}

  std::size_t size() const noexcept { return samples_.size(); }
  bool empty() const noexcept { return samples_.empty(); }
  double operator[](std::size_t t) const noexcept { return samples_[t]; }
  std::span<const double> view() const noexcept { return samples_; }
  const std::vector<double>& samples() const noexcept { return samples_; }

  friend bool operator==(const Signal&, const Signal&) = default;

 private:
  std::vector<double> samples_;
};

Polynomial poly_mul(const Polynomial& p, const Polynomial& q);

/// Causal filtering, zero initial conditions, output length = input length.
/// Throws FilterOverflow at the first non-finite output sample.
Signal filter(const RationalTf& tf, const Signal& x);
std::vector<double> filter(const RationalTf& tf, std::span<const double> x);

/// Numerator-only filtering (no recursion).
std::vector<double> fir_filter(const Polynomial& p, std::span<const double> x);

/// First `len` Markov coefficients g_0, g_1, ... of tf.
std::vector<double> impulse_response(const RationalTf& tf, std::size_t len);

/// Roots of z^m + p_1 z^{m-1} + ... + p_m (the poles/zeros of p(q^-1)),
/// from the companion matrix eigenvalues. Requires a monic p.
std::vector<std::complex<double>> roots(const Polynomial& p);

/// Monic polynomial with the given roots; the roots must be closed under
/// conjugation (imaginary residue is discarded).
Polynomial from_roots(std::span<const std::complex<double>> r);

inline constexpr double kStabilityMargin = 1e-9;

/// All roots strictly inside |z| < 1 - kStabilityMargin. Requires a monic p.
bool is_stable(const Polynomial& p);

/// Largest root modulus (0 for degree 0).
double spectral_radius(const Polynomial& p);

/// Pulls every root with modulus >= 1 - kStabilityMargin radially onto
/// |z| = max_modulus; the degree is preserved.
Polynomial project_into_unit_disc(const Polynomial& p, double max_modulus = 0.99);

/// Smallest distance between a root of p and a root of q (both monic in the
/// sense of roots(); strictly causal numerators are handled by dropping the
/// leading zero). Returns +inf if either has no roots.
double min_root_distance(const Polynomial& p, const Polynomial& q);

}  // namespace morsm
