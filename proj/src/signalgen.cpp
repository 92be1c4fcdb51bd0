#include "morsm/signalgen.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "morsm/error.hpp"
#include "morsm/seed.hpp"

namespace morsm {
namespace {

constexpr double kCommonRootTolerance = 1e-8;

// Stream ids for the sub-generators of one experiment seed.
constexpr std::uint64_t kInputStream = 1;
constexpr std::uint64_t kNoiseStream = 2;

std::vector<double> gaussian(std::uint64_t seed, std::size_t n, double variance) {
  std::vector<double> out(n, 0.0);
  if (variance == 0.0) return out;
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> dist(0.0, std::sqrt(variance));
  for (auto& v : out) v = dist(gen);
  return out;
}

double energy(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

void check_input(const ExperimentInput& exp) {
  const auto& fu = exp.input_filter;
  if (!fu.num.is_monic() || !is_stable(fu.num) || !is_stable(fu.den)) {
    throw Error(ErrorCode::kInvalidArgument,
                "input filter must be monic, stable and inversely stable");
  }
  if (!(exp.innovation_variance > 0.0) || !(exp.noise_variance >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "variances must be positive");
  }
}

Polynomial random_half_ring(std::mt19937_64& gen, std::size_t pairs) {
  std::uniform_real_distribution<double> modulus(0.7, 0.9);
  std::uniform_real_distribution<double> argument(0.0, std::numbers::pi / 2.0);
  std::vector<std::complex<double>> r;
  for (std::size_t i = 0; i < pairs; ++i) {
    const double rho = modulus(gen);
    const double phi = argument(gen);
    const auto z = std::polar(rho, phi);
    r.push_back(z);
    r.push_back(std::conj(z));
  }
  return from_roots(r);
}

}  // namespace

BjSystem::BjSystem(Polynomial l, Polynomial f, Polynomial c, Polynomial d)
    : L(std::move(l)), F(std::move(f)), C(std::move(c)), D(std::move(d)) {
  if (L.constant() != 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "plant numerator must be strictly causal");
  }
  if (!F.is_monic() || !C.is_monic() || !D.is_monic()) {
    throw Error(ErrorCode::kInvalidArgument, "F, C and D must be monic");
  }
}

void BjSystem::validate() const {
  if (!is_stable(F) || !is_stable(C) || !is_stable(D)) {
    throw Error(ErrorCode::kUnstableSystem, "unstable true system");
  }
  if (min_root_distance(L, F) < kCommonRootTolerance ||
      min_root_distance(C, D) < kCommonRootTolerance) {
    throw Error(ErrorCode::kUnstableSystem,
                "true system has a common factor (L/F or C/D)");
  }
}

BjSystem reference_system() {
  return BjSystem(Polynomial::strictly_causal({1.0, 0.1}), Polynomial::monic({-1.2, 0.6}),
                  Polynomial::monic({0.7}), Polynomial::monic({-0.9}));
}

RationalTf reference_input_filter() {
  return RationalTf::all_pole(Polynomial::monic({-1.0, 0.89}));
}

DataRecord generate_data(const BjSystem& sys, const ExperimentInput& exp, std::size_t N) {
  if (N == 0) throw Error(ErrorCode::kInvalidArgument, "sample size must be positive");
  sys.validate();
  check_input(exp);

  const auto w = gaussian(substream(exp.seed, kInputStream), N, exp.innovation_variance);
  const auto e = gaussian(substream(exp.seed, kNoiseStream), N, exp.noise_variance);
  auto u = filter(exp.input_filter, std::span<const double>(w));
  auto y = filter(sys.plant(), std::span<const double>(u));
  const auto v = filter(sys.noise(), std::span<const double>(e));
  for (std::size_t t = 0; t < N; ++t) y[t] += v[t];

  return DataRecord{Signal(std::move(u)), Signal(std::move(y)), sys, exp};
}

double calibrate_snr(const BjSystem& sys, const Signal& u, const Signal& e_raw,
                     double target_snr) {
  if (!(target_snr > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "target SNR must be positive");
  }
  const double eu = energy(u.view());
  const double ev = energy(filter(sys.noise(), e_raw.view()));
  if (!(eu > 0.0) || !(ev > 0.0)) {
    throw Error(ErrorCode::kDegenerateSnrInput, "degenerate input for SNR calibration");
  }
  return eu / (target_snr * ev);
}

double realized_snr(const BjSystem& sys, const Signal& u, const Signal& e) {
  return energy(u.view()) / energy(filter(sys.noise(), e.view()));
}

DataRecord generate_data_at_snr(const BjSystem& sys, const ExperimentInput& exp,
                                std::size_t N, double snr) {
  if (N == 0) throw Error(ErrorCode::kInvalidArgument, "sample size must be positive");
  sys.validate();
  check_input(exp);

  const auto w = gaussian(substream(exp.seed, kInputStream), N, exp.innovation_variance);
  const auto e_raw = gaussian(substream(exp.seed, kNoiseStream), N, 1.0);
  Signal u(filter(exp.input_filter, std::span<const double>(w)));
  const double lambda2 = calibrate_snr(sys, u, Signal(e_raw), snr);
  const double lambda = std::sqrt(lambda2);

  std::vector<double> e(e_raw);
  for (auto& v : e) v *= lambda;
  auto y = filter(sys.plant(), u.view());
  const auto v = filter(sys.noise(), std::span<const double>(e));
  for (std::size_t t = 0; t < N; ++t) y[t] += v[t];

  ExperimentInput meta = exp;
  meta.noise_variance = lambda2;
  return DataRecord{std::move(u), Signal(std::move(y)), sys, meta};
}

BjSystem sample_random_system(std::uint64_t seed, std::size_t order) {
  if (order == 0 || order % 2 != 0) {
    throw Error(ErrorCode::kInvalidArgument, "random system order must be even and positive");
  }
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> coeff(-1.0, 1.0);
  for (int attempt = 0; attempt < 100; ++attempt) {
    std::vector<double> l(order);
    for (auto& c : l) c = coeff(gen);
    BjSystem sys(Polynomial::strictly_causal(std::move(l)), random_half_ring(gen, order / 2),
                 random_half_ring(gen, order / 2), random_half_ring(gen, order / 2));
    if (min_root_distance(sys.L, sys.F) >= kCommonRootTolerance &&
        min_root_distance(sys.C, sys.D) >= kCommonRootTolerance && is_stable(sys.F) &&
        is_stable(sys.C) && is_stable(sys.D)) {
      return sys;
    }
  }
  throw Error(ErrorCode::kDegenerateRandomSystem, "degenerate random system");
}

}  // namespace morsm
