#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "morsm/error.hpp"
#include "morsm/metrics.hpp"
#include "test_support.hpp"

using namespace morsm;

namespace {

BjSystem fir_toy() {
  // G = 0.5 q^-1 with a first-order denominator whose coefficient is zero.
  return BjSystem(Polynomial::strictly_causal({0.5}), Polynomial::monic({0.0}), Polynomial::one(),
                  Polynomial::one());
}

double rel_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff() / b.cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("rmse_impulse examples") {
  const auto sys = reference_system();
  const auto truth = PlantEstimate::from_system(sys);
  CHECK(rmse_impulse(sys, truth).rmse == 0.0);
  CHECK_FALSE(rmse_impulse(sys, truth).unstable);

  // Drop the 0.1 q^-2 numerator term: the error is 0.1 * impulse(1/F) delayed by two.
  const PlantEstimate dropped{Polynomial::strictly_causal({1.0, 0.0}), sys.F};
  const auto h = testing::long_division({1.0}, sys.F.full(), 98);
  double ss = 0.0;
  for (double v : h) ss += 0.01 * v * v;
  CHECK(rmse_impulse(sys, dropped, 100).rmse == doctest::Approx(std::sqrt(ss)).epsilon(1e-12));
}

TEST_CASE("a unit offset in one coefficient has unit error") {
  // Truth q^-1 (F = 1 + 0 q^-1); estimate q^-1 + q^-3 differs by e_3.
  const BjSystem sys(Polynomial::strictly_causal({1.0, 0.0, 0.0}), Polynomial::monic({0.0, 0.0, 0.0}),
                     Polynomial::one(), Polynomial::one());
  const PlantEstimate est{Polynomial::strictly_causal({1.0, 0.0, 1.0}), Polynomial::monic({0.0, 0.0, 0.0})};
  CHECK(rmse_impulse(sys, est, 10).rmse == doctest::Approx(1.0));
}

TEST_CASE("rmse_impulse is non-decreasing in the length") {
  const auto sys = reference_system();
  const PlantEstimate est{Polynomial::strictly_causal({0.9, 0.2}), Polynomial::monic({-1.1, 0.5})};
  double prev = 0.0;
  for (std::size_t len = 1; len <= 200; ++len) {
    const double r = rmse_impulse(sys, est, len).rmse;
    CHECK(r >= prev);
    prev = r;
  }
}

TEST_CASE("unstable estimates are flagged with a finite truncated error") {
  const auto sys = reference_system();
  const PlantEstimate est{Polynomial::strictly_causal({1.0, 0.1}), Polynomial::monic({-1.05})};
  const auto err = rmse_impulse(sys, est, 100);
  CHECK(err.unstable);
  CHECK(std::isfinite(err.rmse));
  CHECK(err.rmse > 1.0);
}

TEST_CASE("fit_impulse examples") {
  const auto sys = reference_system();
  CHECK(fit_impulse(sys, PlantEstimate::from_system(sys)) == doctest::Approx(100.0));

  // An estimate whose impulse response is the mean of the truth's has FIT 0;
  // its RMSE equals the baseline norm by construction.
  const auto g = impulse_response(sys.plant(), 100);
  double mean = 0.0;
  for (double v : g) mean += v;
  mean /= 100.0;
  double base = 0.0;
  for (double v : g) base += (v - mean) * (v - mean);
  CHECK(fit_from_rmse(sys, std::sqrt(base), 100) == doctest::Approx(0.0).epsilon(1e-12));

  // Same relative error after scaling truth and estimate by 3.
  const PlantEstimate est{Polynomial::strictly_causal({0.9, 0.2}), Polynomial::monic({-1.1, 0.5})};
  const BjSystem sys3(Polynomial::strictly_causal({3.0, 0.3}), sys.F, sys.C, sys.D);
  const PlantEstimate est3{Polynomial::strictly_causal({2.7, 0.6}), est.F};
  CHECK(fit_impulse(sys3, est3) == doctest::Approx(fit_impulse(sys, est)).epsilon(1e-12));
  CHECK(fit_impulse(sys, est) < 100.0);

  // Constant true impulse response over the window: g = [0] repeated.
  const BjSystem flat(Polynomial::strictly_causal({0.0, 1.0}), Polynomial::monic({0.0, 0.0}),
                      Polynomial::one(), Polynomial::one());
  CHECK_THROWS_AS(fit_impulse(flat, PlantEstimate::from_system(flat), 1), Error);
}

TEST_CASE("Cramer-Rao matrix of the FIR toy") {
  const auto cr = cramer_rao(fir_toy(), RationalTf(), 1.0, 1.0, 1);
  Eigen::Matrix2d want;
  want << 0.25, 0.0, 0.0, 1.0;
  CHECK((cr.M - want).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((cr.covariance() - want.inverse()).cwiseAbs().maxCoeff() < 1e-9);

  const auto doubled = cramer_rao(fir_toy(), RationalTf(), 2.0, 1.0, 1);
  CHECK(rel_diff(doubled.M, 2.0 * cr.M) < 1e-12);
}

TEST_CASE("Cramer-Rao matrix of the reference system") {
  const auto cr = cramer_rao(reference_system(), reference_input_filter(), 1.0, 1.0, 2);
  REQUIRE(cr.M.rows() == 4);
  CHECK((cr.M - cr.M.transpose()).cwiseAbs().maxCoeff() < 1e-10);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cr.M);
  CHECK(eig.eigenvalues().minCoeff() > 0.0);
  CHECK((cr.M * cr.inverse - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-8);

  const auto fine = cramer_rao(reference_system(), reference_input_filter(), 1.0, 1.0, 2, 16384);
  CHECK(rel_diff(fine.M, cr.M) < 1e-6);
  const auto coarse = cramer_rao(reference_system(), reference_input_filter(), 1.0, 1.0, 2, 4096);
  CHECK(rel_diff(coarse.M, cr.M) < 1e-6);
}

TEST_CASE("Cramer-Rao preconditions") {
  CHECK_THROWS_AS(cramer_rao(reference_system(), reference_input_filter(), 1.0, 1.0, 3), Error);
  // L and F share the root 0.5: not identifiable.
  const BjSystem common(Polynomial::strictly_causal({1.0, -0.5}), Polynomial::monic({-0.5, 0.0}),
                        Polynomial::one(), Polynomial::one());
  CHECK_THROWS_AS(cramer_rao(common, RationalTf(), 1.0, 1.0, 2), Error);
}

TEST_CASE("empirical covariance") {
  std::vector<Eigen::VectorXd> same(5, Eigen::Vector2d(1.0, -2.0));
  CHECK(empirical_cov(same).cwiseAbs().maxCoeff() == 0.0);

  std::vector<Eigen::VectorXd> pair{Eigen::VectorXd::Constant(1, -1.0), Eigen::VectorXd::Constant(1, 1.0)};
  CHECK(empirical_cov(pair)(0, 0) == doctest::Approx(2.0));
  CHECK_THROWS_AS(empirical_cov({Eigen::VectorXd::Zero(2)}), Error);
}

TEST_CASE("efficiency ratio") {
  CrBound b;
  b.M = Eigen::Matrix2d::Identity() * 2.0;
  b.inverse = Eigen::Matrix2d::Identity() * 0.5;
  const Eigen::MatrixXd emp = Eigen::Matrix2d::Identity() * 0.005;
  CHECK(efficiency_ratio(emp, b, 100) == doctest::Approx(1.0));
}

TEST_CASE("crbound CSV layout") {
  const auto cr = cramer_rao(fir_toy(), RationalTf(), 1.0, 1.0, 1);
  std::ostringstream os;
  write_crbound_csv(os, cr);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "matrix,i,j,value");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 8);
}
