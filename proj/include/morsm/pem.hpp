#pragma once

// Prediction-error method for Box-Jenkins models,
//   eps_t = (D/C) [y_t - (L/F) u_t],   V_N = (1/N) sum eps_t^2,
// minimized by damped Gauss-Newton.

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "morsm/arx.hpp"
#include "morsm/signalgen.hpp"
#include "morsm/steiglitz_mcbride.hpp"

namespace morsm {

/// Plant plus noise model; alpha = [c_1..c_mc, d_1..d_md].
struct BjEstimate {
  PlantEstimate plant;
  Polynomial C;
  Polynomial D;

  static BjEstimate from_system(const BjSystem& sys) {
    return {PlantEstimate::from_system(sys), sys.C, sys.D};
  }
  /// Parameters [theta; alpha] with the orders of `shape`.
  static BjEstimate from_parameters(const Eigen::VectorXd& p, const BjEstimate& shape);

  Eigen::VectorXd alpha() const;
  Eigen::VectorXd parameters() const;
  std::size_t parameter_count() const {
    return plant.m_f() + plant.m_l() + C.degree() + D.degree();
  }
};

struct PemOptions {
  std::size_t max_iterations = 1000;
  double f_tol = 1e-5;  // stop on relative loss decrease below this
  std::size_t max_halvings = 40;
};

struct PemReport {
  BjEstimate estimate;
  double loss = 0.0;
  std::size_t iterations = 0;  // accepted Gauss-Newton steps
  bool converged = false;
  double gradient_norm = 0.0;
  std::vector<double> loss_history;  // loss before the first and after each accepted step
};

/// Throws kNonInvertiblePredictor if C or F is unstable.
Signal prediction_errors(const BjEstimate& est, const DataRecord& data);

double pem_loss(const BjEstimate& est, const DataRecord& data);

/// d eps_t / d p for p = [f, l, c, d] (N x P), from filtered sensitivity
/// signals. `eps` receives the prediction errors.
Eigen::MatrixXd prediction_error_jacobian(const BjEstimate& est, const DataRecord& data,
                                          Eigen::VectorXd* eps = nullptr);

/// Starts from `init` (orders are taken from it).
PemReport pem_fit(const DataRecord& data, const BjEstimate& init, const PemOptions& opts = {});

/// Noise model C/D for the output residual of `plant`, fitted in two linear
/// stages: a long AR model supplies innovation estimates, then C and D come
/// from one least-squares regression on lagged residuals and innovations.
/// Unstable factors are pulled inside the unit disc. A flat C = D start would
/// make the PEM Jacobian rank deficient.
BjEstimate initial_noise_model(const PlantEstimate& plant, const DataRecord& data,
                               std::size_t m_c, std::size_t m_d);

/// (1/N) sum [A(eta) (y - (L/F) u)]^2: the prediction-error loss with the ARX
/// polynomial standing in for the inverse noise model.
double morsm_selection_loss(const ArxModel& arx, const PlantEstimate& plant,
                            const DataRecord& data);

}  // namespace morsm
