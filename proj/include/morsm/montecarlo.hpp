#pragma once

// Seeded Monte Carlo sweeps over sample sizes and estimation methods.
//
// Every (N, run) pair owns a seed derived from the base seed, so results do
// not depend on how runs are scheduled across workers.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "morsm/arx.hpp"
#include "morsm/metrics.hpp"
#include "morsm/pem.hpp"
#include "morsm/signalgen.hpp"
#include "morsm/steiglitz_mcbride.hpp"

namespace morsm {

enum class Study { kFixedSystem, kRandomSystems };

enum class MethodKind {
  kMorsm,
  kBjsm,
  kSm,        // Steiglitz-McBride on the raw data
  kPemTrue,   // PEM started at the true parameters
  kPemMorsm,  // PEM started at the MORSM plant, noise model from its residual
};

struct MethodSpec {
  MethodKind kind = MethodKind::kMorsm;
  std::size_t iterations = 1;  // Steiglitz-McBride iterations
  bool select_iteration = false;

  /// e.g. "morsm_k1", "morsm_k20_sel", "bjsm_k100", "pem_true"
  std::string label() const;

  /// Parses "<kind>[:k=<iters>][:select]" with kind in
  /// {morsm, bjsm, sm, pem_true, pem_morsm}.
  static MethodSpec parse(std::string_view token);

  bool uses_arx() const noexcept {
    return kind == MethodKind::kMorsm || kind == MethodKind::kBjsm ||
           kind == MethodKind::kPemMorsm;
  }
};

struct McConfig {
  Study study = Study::kFixedSystem;
  std::vector<std::size_t> sample_sizes;
  std::size_t runs_per_N = 100;
  std::vector<MethodSpec> methods;
  std::uint64_t base_seed = 1;
  std::optional<double> snr;  // random systems default to 10
  std::size_t len_ir = kDefaultImpulseLength;
  std::size_t arx_order = 50;              // 0: default_order(N)
  std::vector<std::size_t> arx_grid;       // non-empty: select the order
  double arx_delta = kDefaultArxDelta;
  double stop_tol = 1e-10;
  PemOptions pem;
  bool exclude_unstable = false;
  std::size_t random_order = 4;
  BjSystem system = reference_system();  // fixed-system study
  ExperimentInput input{reference_input_filter(), 1.0, 1.0, 0};
  std::size_t workers = 0;  // 0: hardware concurrency

  /// Throws kInvalidArgument on an inconsistent configuration.
  void validate() const;
};

/// Split-stream hash of (base_seed, N, run).
std::uint64_t derive_seed(std::uint64_t base_seed, std::size_t N, std::size_t run);

/// `count` sizes from lo to hi, logarithmically spaced and rounded.
std::vector<std::size_t> logspace_sizes(std::size_t lo, std::size_t hi, std::size_t count);

/// Order grid "lo:hi:step" (inclusive).
std::vector<std::size_t> parse_grid(std::string_view spec);

/// Memoizes ARX fits of one data record by order.
class ArxCache {
 public:
  ArxCache(const DataRecord& data, double delta) : data_(data), delta_(delta) {}
  const ArxFitReport& get(std::size_t n);

 private:
  const DataRecord& data_;
  double delta_;
  std::map<std::size_t, ArxFitReport> fits_;
};

struct IterationChoice {
  std::size_t k = 0;
  double loss = std::numeric_limits<double>::infinity();
};

/// Iterate of `trace` minimizing morsm_selection_loss with `loss_arx`;
/// unstable iterates are skipped and ties go to the smaller k. Throws
/// kSelectionFailed if no iterate is stable.
IterationChoice select_iteration(const SmTrace& trace, const ArxModel& loss_arx,
                                 const DataRecord& data);

struct OrderSelection {
  std::size_t n = 0;
  std::size_t k = 0;
  PlantEstimate estimate;
  double loss = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> candidates;
  std::vector<double> losses;           // per candidate; +inf when unstable or failed
  std::vector<std::string> failures;    // per candidate; empty when it succeeded
};

struct ReductionSettings {
  std::size_t m_l = 0;
  std::size_t m_f = 0;
  SmOptions sm;
};

/// Runs the MORSM or BJSM pipeline for each order in `grid` and keeps the
/// one whose estimate minimizes morsm_selection_loss, where the loss always
/// uses the A polynomial of the largest order in the grid. Ties go to the
/// smaller order. Throws kSelectionFailed listing every failure if no
/// candidate succeeds.
OrderSelection select_order(const DataRecord& data, std::span<const std::size_t> grid,
                            const MethodSpec& method, const ReductionSettings& settings,
                            ArxCache& cache);

struct RunRecord {
  std::size_t N = 0;
  std::size_t run = 0;
  std::uint64_t seed = 0;
  std::string method;
  bool failed = false;
  std::string error;
  std::size_t n_arx = 0;
  std::size_t k_iter = 0;
  double rmse = std::numeric_limits<double>::quiet_NaN();
  double fit = std::numeric_limits<double>::quiet_NaN();
  bool unstable = false;
  std::uint64_t data_checksum = 0;
  double noise_variance = 0.0;
  Eigen::VectorXd theta;
};

struct AggregateRow {
  std::size_t N = 0;
  std::string method;
  double mean_rmse = 0.0;
  double mean_fit = 0.0;
  double eff_ratio = std::numeric_limits<double>::quiet_NaN();
  std::size_t n_unstable = 0;
  std::size_t n_failed = 0;
};

struct McResult {
  std::vector<AggregateRow> aggregate;
  std::vector<RunRecord> runs;  // ordered by (N, run, method)
};

/// One (N, run) cell: generate the system and data, run every method on
/// the same record.
std::vector<RunRecord> run_cell(const McConfig& cfg, std::size_t N, std::size_t run);

McResult run_study(const McConfig& cfg);

/// Single-threaded reduction of per-run rows into per-(N, method) rows.
std::vector<AggregateRow> aggregate_runs(const McConfig& cfg, std::span<const RunRecord> runs);

/// N,method,mean_rmse,mean_fit,eff_ratio,n_unstable,n_failed
void write_aggregate_csv(std::ostream& os, std::span<const AggregateRow> rows);

/// N,run,seed,method,status,n_arx,k_iter,rmse,fit,unstable,noise_variance,data_checksum,theta,error
void write_runs_csv(std::ostream& os, std::span<const RunRecord> runs);

}  // namespace morsm
