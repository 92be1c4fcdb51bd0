#include "morsm/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <ostream>
#include <sstream>
#include <thread>

#include "morsm/error.hpp"
#include "morsm/io.hpp"
#include "morsm/seed.hpp"

namespace morsm {
namespace {

constexpr std::uint64_t kSystemStream = 7;
constexpr double kDefaultRandomSnr = 10.0;

std::size_t parse_size(std::string_view s, std::string_view what) {
  std::size_t v = 0;
  const auto* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) {
    throw Error(ErrorCode::kParse, "invalid " + std::string(what) + ": '" + std::string(s) + "'");
  }
  return v;
}

double mean_power(const Signal& y) {
  double s = 0.0;
  for (double v : y.view()) s += v * v;
  return s / static_cast<double>(y.size());
}

// Strictly better than `best` beyond a small tolerance, so near-equal losses
// keep the earlier (smaller) candidate.
bool improves(double loss, double best, double power) {
  if (!std::isfinite(loss)) return false;
  if (!std::isfinite(best)) return true;
  return loss < best - (1e-9 * std::abs(best) + 1e-12 * power);
}

struct Estimate {
  PlantEstimate plant;
  std::size_t n = 0;
  std::size_t k = 0;
};

ReductionResult reduce(const MethodSpec& method, const ArxFitReport& arx, const DataRecord& data,
                       const ReductionSettings& s) {
  if (method.kind == MethodKind::kBjsm) return bjsm(arx, data, s.m_l, s.m_f, s.sm);
  return morsm(arx, data.u, s.m_l, s.m_f, s.sm);
}

// Picks the iterate of one reduction: the selected one, or the last.
std::pair<std::size_t, double> pick_iterate(const MethodSpec& method, const SmTrace& trace,
                                            const ArxModel& loss_arx, const DataRecord& data) {
  if (method.select_iteration) {
    const auto choice = select_iteration(trace, loss_arx, data);
    return {choice.k, choice.loss};
  }
  const std::size_t k = trace.last();
  double loss = std::numeric_limits<double>::infinity();
  if (trace.f_stable[k]) loss = morsm_selection_loss(loss_arx, trace.iterates[k], data);
  return {k, loss};
}

Estimate run_reduction(const McConfig& cfg, const MethodSpec& method, const DataRecord& data,
                       const ReductionSettings& settings, ArxCache& cache) {
  if (!cfg.arx_grid.empty()) {
    auto sel = select_order(data, cfg.arx_grid, method, settings, cache);
    return {std::move(sel.estimate), sel.n, sel.k};
  }
  const std::size_t n = cfg.arx_order == 0 ? default_order(data.size()) : cfg.arx_order;
  const auto& arx = cache.get(n);
  const auto result = reduce(method, arx, data, settings);
  const auto [k, loss] = pick_iterate(method, result.trace, arx.model, data);
  (void)loss;
  return {result.trace.iterates[k], n, k};
}

Estimate run_method(const McConfig& cfg, const MethodSpec& method, const BjSystem& truth,
                    const DataRecord& data, ArxCache& cache) {
  ReductionSettings settings{truth.m_l(), truth.m_f(), SmOptions{method.iterations, cfg.stop_tol}};
  switch (method.kind) {
    case MethodKind::kMorsm:
    case MethodKind::kBjsm:
      return run_reduction(cfg, method, data, settings, cache);
    case MethodKind::kSm: {
      const auto trace = sm_iterate(data.y, data.u, truth.m_l(), truth.m_f(), settings.sm);
      return {trace.iterates.back(), 0, trace.last()};
    }
    case MethodKind::kPemTrue: {
      const auto report = pem_fit(data, BjEstimate::from_system(truth), cfg.pem);
      return {report.estimate.plant, 0, report.iterations};
    }
    case MethodKind::kPemMorsm: {
      MethodSpec start{MethodKind::kMorsm, method.iterations, method.select_iteration};
      auto init = run_reduction(cfg, start, data, settings, cache);
      const auto est = initial_noise_model(init.plant, data, truth.m_c(), truth.m_d());
      const auto report = pem_fit(data, est, cfg.pem);
      return {report.estimate.plant, init.n, report.iterations};
    }
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown method");
}

}  // namespace

std::string MethodSpec::label() const {
  std::string base;
  switch (kind) {
    case MethodKind::kMorsm:
      base = "morsm";
      break;
    case MethodKind::kBjsm:
      base = "bjsm";
      break;
    case MethodKind::kSm:
      base = "sm";
      break;
    case MethodKind::kPemTrue:
      return "pem_true";
    case MethodKind::kPemMorsm:
      base = "pem_morsm";
      break;
  }
  base += "_k" + std::to_string(iterations);
  if (select_iteration) base += "_sel";
  return base;
}

MethodSpec MethodSpec::parse(std::string_view token) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = token.find(':', start);
    parts.push_back(token.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  MethodSpec spec;
  const auto kind = parts.front();
  if (kind == "morsm") {
    spec.kind = MethodKind::kMorsm;
  } else if (kind == "bjsm") {
    spec.kind = MethodKind::kBjsm;
  } else if (kind == "sm") {
    spec.kind = MethodKind::kSm;
  } else if (kind == "pem_true" || kind == "pem") {
    spec.kind = MethodKind::kPemTrue;
  } else if (kind == "pem_morsm") {
    spec.kind = MethodKind::kPemMorsm;
  } else {
    throw Error(ErrorCode::kParse, "unknown method '" + std::string(kind) + "'");
  }
  for (std::size_t i = 1; i < parts.size(); ++i) {
    const auto p = parts[i];
    if (p.starts_with("k=")) {
      spec.iterations = parse_size(p.substr(2), "iteration count");
    } else if (p == "select") {
      spec.select_iteration = true;
    } else {
      throw Error(ErrorCode::kParse, "unknown method option '" + std::string(p) + "'");
    }
  }
  if (spec.kind == MethodKind::kPemTrue && (parts.size() > 1)) {
    throw Error(ErrorCode::kParse, "pem_true takes no options");
  }
  return spec;
}

void McConfig::validate() const {
  if (sample_sizes.empty()) throw Error(ErrorCode::kInvalidArgument, "no sample sizes");
  for (std::size_t i = 1; i < sample_sizes.size(); ++i) {
    if (sample_sizes[i] <= sample_sizes[i - 1]) {
      throw Error(ErrorCode::kInvalidArgument, "sample sizes must be strictly increasing");
    }
  }
  if (sample_sizes.front() == 0) throw Error(ErrorCode::kInvalidArgument, "sample size must be positive");
  if (runs_per_N == 0) throw Error(ErrorCode::kInvalidArgument, "runs_per_N must be >= 1");
  if (methods.empty()) throw Error(ErrorCode::kInvalidArgument, "no methods configured");
  if (len_ir == 0) throw Error(ErrorCode::kInvalidArgument, "impulse-response length must be >= 1");
  if (snr && !(*snr > 0.0)) throw Error(ErrorCode::kInvalidArgument, "snr must be positive");
  for (std::size_t n : arx_grid) {
    if (n == 0) throw Error(ErrorCode::kInvalidArgument, "ARX grid orders must be positive");
  }
  std::vector<std::string> labels;
  for (const auto& m : methods) labels.push_back(m.label());
  std::sort(labels.begin(), labels.end());
  if (std::adjacent_find(labels.begin(), labels.end()) != labels.end()) {
    throw Error(ErrorCode::kInvalidArgument, "duplicate method in configuration");
  }
}

std::uint64_t derive_seed(std::uint64_t base_seed, std::size_t N, std::size_t run) {
  return substream(substream(base_seed, static_cast<std::uint64_t>(N)), static_cast<std::uint64_t>(run));
}

std::vector<std::size_t> logspace_sizes(std::size_t lo, std::size_t hi, std::size_t count) {
  if (count == 0 || lo == 0 || hi < lo) {
    throw Error(ErrorCode::kInvalidArgument, "invalid logspace range");
  }
  if (count == 1) return {lo};
  std::vector<std::size_t> out;
  const double ratio = static_cast<double>(hi) / static_cast<double>(lo);
  for (std::size_t i = 0; i < count; ++i) {
    const double x = static_cast<double>(lo) *
                     std::pow(ratio, static_cast<double>(i) / static_cast<double>(count - 1));
    out.push_back(static_cast<std::size_t>(std::llround(x)));
  }
  return out;
}

std::vector<std::size_t> parse_grid(std::string_view spec) {
  const auto a = spec.find(':');
  const auto b = a == std::string_view::npos ? a : spec.find(':', a + 1);
  if (a == std::string_view::npos || b == std::string_view::npos) {
    throw Error(ErrorCode::kParse, "order grid must be lo:hi:step, got '" + std::string(spec) + "'");
  }
  const auto lo = parse_size(spec.substr(0, a), "grid start");
  const auto hi = parse_size(spec.substr(a + 1, b - a - 1), "grid end");
  const auto step = parse_size(spec.substr(b + 1), "grid step");
  if (lo == 0 || step == 0 || hi < lo) {
    throw Error(ErrorCode::kParse, "invalid order grid '" + std::string(spec) + "'");
  }
  std::vector<std::size_t> out;
  for (std::size_t n = lo; n <= hi; n += step) out.push_back(n);
  return out;
}

const ArxFitReport& ArxCache::get(std::size_t n) {
  auto it = fits_.find(n);
  if (it == fits_.end()) it = fits_.emplace(n, estimate_arx(data_, n, delta_)).first;
  return it->second;
}

IterationChoice select_iteration(const SmTrace& trace, const ArxModel& loss_arx,
                                 const DataRecord& data) {
  const double power = mean_power(data.y);
  IterationChoice best;
  bool any = false;
  for (std::size_t k = 0; k < trace.iterates.size(); ++k) {
    if (!trace.f_stable[k]) continue;
    double loss = std::numeric_limits<double>::infinity();
    try {
      loss = morsm_selection_loss(loss_arx, trace.iterates[k], data);
    } catch (const FilterOverflow&) {
      continue;
    }
    if (!any || improves(loss, best.loss, power)) {
      best = {k, loss};
      any = true;
    }
  }
  if (!any) throw Error(ErrorCode::kSelectionFailed, "no stable iterate to select from");
  return best;
}

OrderSelection select_order(const DataRecord& data, std::span<const std::size_t> grid,
                            const MethodSpec& method, const ReductionSettings& settings,
                            ArxCache& cache) {
  if (grid.empty()) throw Error(ErrorCode::kInvalidArgument, "empty order grid");
  if (method.kind != MethodKind::kMorsm && method.kind != MethodKind::kBjsm) {
    throw Error(ErrorCode::kInvalidArgument, "order selection applies to MORSM and BJSM");
  }
  std::vector<std::size_t> candidates(grid.begin(), grid.end());
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  OrderSelection out;
  out.candidates = candidates;
  out.losses.assign(candidates.size(), std::numeric_limits<double>::infinity());
  out.failures.assign(candidates.size(), {});

  const ArxModel* loss_arx = nullptr;
  try {
    loss_arx = &cache.get(candidates.back()).model;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::kSelectionFailed,
                "order selection failed: loss ARX (n=" + std::to_string(candidates.back()) +
                    "): " + e.what());
  }
  const double power = mean_power(data.y);

  bool have = false;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const std::size_t n = candidates[i];
    try {
      const auto result = reduce(method, cache.get(n), data, settings);
      const auto [k, loss] = pick_iterate(method, result.trace, *loss_arx, data);
      out.losses[i] = loss;
      if (!have || improves(loss, out.loss, power)) {
        out.n = n;
        out.k = k;
        out.loss = loss;
        out.estimate = result.trace.iterates[k];
        have = true;
      }
    } catch (const std::exception& e) {
      out.failures[i] = e.what();
    }
  }
  if (!have) {
    std::string msg = "order selection failed for every candidate:";
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      msg += " n=" + std::to_string(candidates[i]) + ": " + out.failures[i] + ";";
    }
    throw Error(ErrorCode::kSelectionFailed, msg);
  }
  return out;
}

std::vector<RunRecord> run_cell(const McConfig& cfg, std::size_t N, std::size_t run) {
  const std::uint64_t seed = derive_seed(cfg.base_seed, N, run);
  std::vector<RunRecord> out;
  for (const auto& m : cfg.methods) {
    RunRecord rec;
    rec.N = N;
    rec.run = run;
    rec.seed = seed;
    rec.method = m.label();
    out.push_back(std::move(rec));
  }

  BjSystem truth;
  DataRecord data;
  try {
    ExperimentInput exp = cfg.input;
    exp.seed = seed;
    if (cfg.study == Study::kFixedSystem) {
      truth = cfg.system;
      data = cfg.snr ? generate_data_at_snr(truth, exp, N, *cfg.snr) : generate_data(truth, exp, N);
    } else {
      truth = sample_random_system(substream(seed, kSystemStream), cfg.random_order);
      data = generate_data_at_snr(truth, exp, N, cfg.snr.value_or(kDefaultRandomSnr));
    }
  } catch (const std::exception& e) {
    for (auto& rec : out) {
      rec.failed = true;
      rec.error = std::string("data generation: ") + e.what();
    }
    return out;
  }

  ArxCache cache(data, cfg.arx_delta);
  for (std::size_t i = 0; i < cfg.methods.size(); ++i) {
    auto& rec = out[i];
    rec.noise_variance = data.meta.noise_variance;
    try {
      const auto est = run_method(cfg, cfg.methods[i], truth, data, cache);
      rec.n_arx = est.n;
      rec.k_iter = est.k;
      rec.theta = est.plant.theta();
      const auto err = rmse_impulse(truth, est.plant, cfg.len_ir);
      rec.rmse = err.rmse;
      rec.unstable = err.unstable;
      rec.fit = fit_from_rmse(truth, err.rmse, cfg.len_ir);
    } catch (const std::exception& e) {
      rec.failed = true;
      rec.error = e.what();
    }
    rec.data_checksum = checksum(data);
  }
  return out;
}

McResult run_study(const McConfig& cfg) {
  cfg.validate();
  const std::size_t cells = cfg.sample_sizes.size() * cfg.runs_per_N;
  std::vector<std::vector<RunRecord>> results(cells);

  std::size_t workers = cfg.workers != 0 ? cfg.workers : std::thread::hardware_concurrency();
  workers = std::clamp<std::size_t>(workers, 1, cells);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < cells; i = next.fetch_add(1)) {
      const std::size_t N = cfg.sample_sizes[i / cfg.runs_per_N];
      results[i] = run_cell(cfg, N, i % cfg.runs_per_N);
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  McResult out;
  for (auto& cell : results) {
    for (auto& rec : cell) out.runs.push_back(std::move(rec));
  }
  out.aggregate = aggregate_runs(cfg, out.runs);
  return out;
}

std::vector<AggregateRow> aggregate_runs(const McConfig& cfg, std::span<const RunRecord> runs) {
  std::optional<CrBound> bound;
  if (cfg.study == Study::kFixedSystem && !cfg.snr && cfg.system.m_f() == cfg.system.m_l()) {
    try {
      bound = cramer_rao(cfg.system, cfg.input.input_filter, cfg.input.innovation_variance,
                         cfg.input.noise_variance, cfg.system.m_f());
    } catch (const Error&) {
    }
  }

  std::vector<AggregateRow> rows;
  for (std::size_t N : cfg.sample_sizes) {
    for (const auto& m : cfg.methods) {
      AggregateRow row;
      row.N = N;
      row.method = m.label();
      double rmse_sum = 0.0, fit_sum = 0.0;
      std::size_t count = 0;
      std::vector<Eigen::VectorXd> thetas;
      for (const auto& r : runs) {
        if (r.N != N || r.method != row.method) continue;
        if (r.failed) {
          ++row.n_failed;
          continue;
        }
        if (r.unstable) ++row.n_unstable;
        if (r.unstable && cfg.exclude_unstable) continue;
        rmse_sum += r.rmse;
        fit_sum += r.fit;
        ++count;
        thetas.push_back(r.theta);
      }
      const double nan = std::numeric_limits<double>::quiet_NaN();
      row.mean_rmse = count > 0 ? rmse_sum / static_cast<double>(count) : nan;
      row.mean_fit = count > 0 ? fit_sum / static_cast<double>(count) : nan;
      if (bound && thetas.size() >= 2) {
        row.eff_ratio = efficiency_ratio(empirical_cov(thetas), *bound, N);
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

void write_aggregate_csv(std::ostream& os, std::span<const AggregateRow> rows) {
  os << "N,method,mean_rmse,mean_fit,eff_ratio,n_unstable,n_failed\n";
  for (const auto& r : rows) {
    os << r.N << ',' << r.method << ',' << format_double(r.mean_rmse) << ','
       << format_double(r.mean_fit) << ',' << format_double(r.eff_ratio) << ',' << r.n_unstable
       << ',' << r.n_failed << '\n';
  }
}

void write_runs_csv(std::ostream& os, std::span<const RunRecord> runs) {
  os << "N,run,seed,method,status,n_arx,k_iter,rmse,fit,unstable,noise_variance,data_checksum,"
        "theta,error\n";
  for (const auto& r : runs) {
    std::string theta;
    for (Eigen::Index i = 0; i < r.theta.size(); ++i) {
      if (i > 0) theta += ' ';
      theta += format_double(r.theta[i]);
    }
    std::string error = r.error;
    std::replace(error.begin(), error.end(), ',', ';');
    std::replace(error.begin(), error.end(), '\n', ' ');
    os << r.N << ',' << r.run << ',' << r.seed << ',' << r.method << ','
       << (r.failed ? "failed" : "ok") << ',' << r.n_arx << ',' << r.k_iter << ','
       << format_double(r.rmse) << ',' << format_double(r.fit) << ',' << (r.unstable ? 1 : 0)
       << ',' << format_double(r.noise_variance) << ',' << r.data_checksum << ',' << theta << ','
       << error << '\n';
  }
}

}  // namespace morsm
