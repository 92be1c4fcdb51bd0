#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "morsm/arx.hpp"
#include "morsm/config.hpp"
#include "morsm/error.hpp"
#include "morsm/io.hpp"
#include "morsm/kernels.hpp"
#include "morsm/metrics.hpp"
#include "morsm/montecarlo.hpp"
#include "morsm/pem.hpp"
#include "morsm/signalgen.hpp"
#include "morsm/steiglitz_mcbride.hpp"

namespace fs = std::filesystem;
using namespace morsm;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::ofstream open_out(const fs::path& dir, const std::string& name) {
  fs::create_directories(dir);
  std::ofstream os(dir / name);
  if (!os) throw std::runtime_error("cannot write " + (dir / name).string());
  return os;
}

std::string join(std::span<const double> xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) s += ' ';
    s += format_double(xs[i]);
  }
  return s;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string system_file;
  std::optional<std::size_t> N;
  std::uint64_t seed = 1;
  std::optional<double> snr;
  std::string out_dir = ".";
};

int cmd_simulate(const SimulateArgs& a) {
  const auto spec = parse_system_spec(read_text_file(a.system_file));
  const std::size_t N = a.N ? *a.N : spec.samples.value_or(0);
  if (N == 0) throw UsageError("sample size must be positive (use --N)");
  if (a.snr && !(*a.snr > 0.0)) throw UsageError("--snr must be positive");

  ExperimentInput exp = spec.input;
  exp.seed = a.seed;
  const auto data = a.snr ? generate_data_at_snr(spec.system, exp, N, *a.snr)
                          : generate_data(spec.system, exp, N);
  {
    auto os = open_out(a.out_dir, "data.csv");
    write_data_csv(os, data);
  }
  {
    auto os = open_out(a.out_dir, "data.meta");
    write_metadata(os, data);
  }
  std::cout << "wrote " << N << " samples to " << (fs::path(a.out_dir) / "data.csv").string()
            << " (checksum " << std::hex << checksum(data) << std::dec << ")\n";
  return kExitOk;
}

// ---------------------------------------------------------------- estimate

struct EstimateArgs {
  std::string data_file;
  std::string method = "morsm";
  std::size_t m_l = 2;
  std::size_t m_f = 2;
  std::size_t m_c = 1;
  std::size_t m_d = 1;
  std::optional<std::size_t> arx_order;
  std::string arx_grid;
  std::size_t sm_iters = 1;
  bool select = false;
  double arx_delta = kDefaultArxDelta;
  std::string out_dir = ".";
};

struct EstimateOutcome {
  PlantEstimate plant;
  std::size_t n = 0;
  std::size_t k = 0;
  double loss = std::numeric_limits<double>::quiet_NaN();
  bool converged = false;
  std::optional<SmTrace> trace;
  std::optional<bool> regularized;
  std::optional<BjEstimate> noise;
};

// Malformed grids are usage errors, not runtime failures.
std::vector<std::size_t> grid_flag(const std::string& text) {
  try {
    return parse_grid(text);
  } catch (const Error& e) {
    throw UsageError(std::string("--arx-grid: ") + e.what());
  }
}

std::size_t resolve_order(const EstimateArgs& a, std::size_t N) {
  return a.arx_order ? *a.arx_order : default_order(N);
}

EstimateOutcome estimate_reduction(const EstimateArgs& a, const DataRecord& data, bool use_bjsm) {
  const SmOptions sm{a.sm_iters, 1e-10};
  EstimateOutcome out;
  if (!a.arx_grid.empty()) {
    const auto grid = grid_flag(a.arx_grid);
    MethodSpec spec{use_bjsm ? MethodKind::kBjsm : MethodKind::kMorsm, a.sm_iters, a.select};
    ArxCache cache(data, a.arx_delta);
    const auto sel = select_order(data, grid, spec, ReductionSettings{a.m_l, a.m_f, sm}, cache);
    for (std::size_t i = 0; i < sel.candidates.size(); ++i) {
      std::cout << "candidate n=" << sel.candidates[i] << " loss=" << format_double(sel.losses[i]);
      if (!sel.failures[i].empty()) std::cout << " failed: " << sel.failures[i];
      std::cout << '\n';
    }
    // Rerun the winner to recover its trace for the report.
    const auto& arx = cache.get(sel.n);
    auto result = use_bjsm ? bjsm(arx, data, a.m_l, a.m_f, sm) : morsm::morsm(arx, data.u, a.m_l, a.m_f, sm);
    out.plant = sel.estimate;
    out.n = sel.n;
    out.k = sel.k;
    out.loss = sel.loss;
    out.converged = result.trace.converged;
    out.regularized = arx.regularized;
    out.trace = std::move(result.trace);
    return out;
  }

  const std::size_t n = resolve_order(a, data.size());
  const auto arx = estimate_arx(data, n, a.arx_delta);
  auto result = use_bjsm ? bjsm(arx, data, a.m_l, a.m_f, sm) : morsm::morsm(arx, data.u, a.m_l, a.m_f, sm);
  std::size_t k = result.headline_iteration;
  if (a.select) k = select_iteration(result.trace, arx.model, data).k;
  out.plant = result.trace.iterates[k];
  out.n = n;
  out.k = k;
  if (result.trace.f_stable[k]) out.loss = morsm_selection_loss(arx.model, out.plant, data);
  out.converged = result.trace.converged;
  out.regularized = arx.regularized;
  out.trace = std::move(result.trace);
  return out;
}

int cmd_estimate(const EstimateArgs& a) {
  if (a.m_f == 0 && a.m_l == 0) throw UsageError("plant orders must not both be zero");
  if (a.method != "morsm" && a.method != "bjsm" && a.method != "sm" && a.method != "pem") {
    throw UsageError("unknown method '" + a.method + "'");
  }
  if (!a.arx_grid.empty()) (void)grid_flag(a.arx_grid);
  std::ifstream in(a.data_file);
  if (!in) throw std::runtime_error("cannot open " + a.data_file);
  const auto data = read_data_csv(in);

  EstimateOutcome out;
  if (a.method == "morsm" || a.method == "bjsm") {
    out = estimate_reduction(a, data, a.method == "bjsm");
  } else if (a.method == "sm") {
    auto trace = sm_iterate(data.y, data.u, a.m_l, a.m_f, SmOptions{a.sm_iters, 1e-10});
    out.k = trace.last();
    out.plant = trace.iterates[out.k];
    out.converged = trace.converged;
    out.trace = std::move(trace);
  } else if (a.method == "pem") {
    // Plant from MORSM, noise model from its residual.
    EstimateArgs start = a;
    start.method = "morsm";
    const auto init = estimate_reduction(start, data, false);
    const auto est = initial_noise_model(init.plant, data, a.m_c, a.m_d);
    const auto report = pem_fit(data, est, PemOptions{});
    out.plant = report.estimate.plant;
    out.n = init.n;
    out.k = report.iterations;
    out.loss = report.loss;
    out.converged = report.converged;
    out.noise = report.estimate;
  }

  std::ostringstream rep;
  rep << "method = " << a.method << '\n';
  rep << "plant_num = " << join(out.plant.L.coeffs()) << '\n';
  rep << "plant_den = " << join(out.plant.F.coeffs()) << '\n';
  if (out.noise) {
    rep << "noise_num = " << join(out.noise->C.coeffs()) << '\n';
    rep << "noise_den = " << join(out.noise->D.coeffs()) << '\n';
  }
  rep << "arx_order = " << out.n << '\n';
  rep << "iteration = " << out.k << '\n';
  rep << "selection_loss = " << format_double(out.loss) << '\n';
  rep << "converged = " << (out.converged ? "true" : "false") << '\n';
  rep << "plant_stable = " << (is_stable(out.plant.F) ? "true" : "false") << '\n';
  if (out.regularized) rep << "arx_regularized = " << (*out.regularized ? "true" : "false") << '\n';
  rep << "samples = " << data.size() << '\n';

  {
    auto os = open_out(a.out_dir, "model.txt");
    os << rep.str();
  }
  if (out.trace) {
    auto os = open_out(a.out_dir, "trace.csv");
    write_trace_csv(os, *out.trace);
  }
  std::cout << rep.str();
  return kExitOk;
}

// -------------------------------------------------------------- montecarlo

struct MontecarloArgs {
  std::string config_file;
  std::string out_dir = ".";
  std::optional<std::size_t> workers;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> runs;
  std::optional<std::string> arx_order;
  std::optional<std::string> arx_grid;
};

int cmd_montecarlo(const MontecarloArgs& a) {
  const fs::path cfg_path(a.config_file);
  auto cfg = parse_mc_config(read_text_file(cfg_path), cfg_path.parent_path());
  if (a.workers) cfg.workers = *a.workers;
  if (a.seed) cfg.base_seed = *a.seed;
  if (a.runs) {
    if (*a.runs == 0) throw UsageError("--runs must be >= 1");
    cfg.runs_per_N = *a.runs;
  }
  if (a.arx_order) {
    try {
      cfg.arx_order = *a.arx_order == "auto" ? 0 : std::stoul(*a.arx_order);
    } catch (const std::exception&) {
      throw UsageError("--arx-order must be a positive integer or 'auto'");
    }
  }
  if (a.arx_grid) cfg.arx_grid = a.arx_grid->empty() ? std::vector<std::size_t>{} : grid_flag(*a.arx_grid);
  cfg.validate();

  const auto result = run_study(cfg);
  {
    auto os = open_out(a.out_dir, "aggregate.csv");
    write_aggregate_csv(os, result.aggregate);
  }
  {
    auto os = open_out(a.out_dir, "runs.csv");
    write_runs_csv(os, result.runs);
  }
  write_aggregate_csv(std::cout, result.aggregate);
  return kExitOk;
}

// ---------------------------------------------------------------- crbound

struct CrboundArgs {
  std::string system_file;
  std::optional<std::size_t> m;
  std::size_t K = kDefaultQuadraturePoints;
  std::string out_dir = ".";
};

int cmd_crbound(const CrboundArgs& a) {
  const auto spec = parse_system_spec(read_text_file(a.system_file));
  const std::size_t m = a.m.value_or(spec.system.m_f());
  if (a.K == 0) throw UsageError("--K must be positive");
  const auto bound = cramer_rao(spec.system, spec.input.input_filter, spec.input.innovation_variance,
                                spec.input.noise_variance, m, a.K);
  auto os = open_out(a.out_dir, "crbound.csv");
  write_crbound_csv(os, bound);
  write_crbound_csv(std::cout, bound);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Plant identification by model order reduction Steiglitz-McBride"};
  app.require_subcommand(1);
  std::string kernel;
  app.add_option("--kernels", kernel, "Force a kernel backend")->check(CLI::IsMember({"scalar", "avx2"}));

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Generate Box-Jenkins input/output data");
  s->add_option("--system", sim.system_file, "System spec file")->required();
  s->add_option("--N,--samples", sim.N, "Number of samples");
  s->add_option("--seed", sim.seed, "Random seed");
  s->add_option("--snr", sim.snr, "Calibrate the noise to this signal-to-noise ratio");
  s->add_option("--out-dir", sim.out_dir, "Output directory");

  EstimateArgs est;
  auto* e = app.add_subcommand("estimate", "Estimate a plant model from a data CSV");
  e->add_option("--data", est.data_file, "Data CSV (t,u,y)")->required();
  e->add_option("--method", est.method, "Estimator")->check(CLI::IsMember({"morsm", "bjsm", "sm", "pem"}));
  e->add_option("--nl", est.m_l, "Numerator order");
  e->add_option("--nf", est.m_f, "Denominator order");
  e->add_option("--nc", est.m_c, "Noise numerator order (pem)");
  e->add_option("--nd", est.m_d, "Noise denominator order (pem)");
  e->add_option("--arx-order", est.arx_order, "ARX order (default grows with N)");
  e->add_option("--arx-grid", est.arx_grid, "Order grid lo:hi:step for selection");
  e->add_option("--sm-iters", est.sm_iters, "Steiglitz-McBride iterations");
  e->add_flag("--select", est.select, "Choose the iteration by the selection loss");
  e->add_option("--arx-delta", est.arx_delta, "ARX regularization threshold");
  e->add_option("--out-dir", est.out_dir, "Output directory");

  MontecarloArgs mc;
  auto* m = app.add_subcommand("montecarlo", "Run a Monte Carlo study from a config file");
  m->add_option("--config", mc.config_file, "Study config")->required();
  m->add_option("--out-dir", mc.out_dir, "Output directory");
  m->add_option("--workers", mc.workers, "Worker threads (0: all cores)");
  m->add_option("--seed", mc.seed, "Override base_seed");
  m->add_option("--runs", mc.runs, "Override runs_per_N");
  m->add_option("--arx-order", mc.arx_order, "Override arx_order (integer or auto)");
  m->add_option("--arx-grid", mc.arx_grid, "Override arx_grid (lo:hi:step, empty to disable)");

  CrboundArgs cr;
  auto* c = app.add_subcommand("crbound", "Cramer-Rao bound of the plant parameters");
  c->add_option("--system", cr.system_file, "System spec file")->required();
  c->add_option("--m", cr.m, "Plant order (default: denominator order)");
  c->add_option("--K", cr.K, "Quadrature points");
  c->add_option("--out-dir", cr.out_dir, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::CallForAllHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::ParseError& ex) {
    app.exit(ex);
    return kExitUsage;
  }

  try {
    if (!kernel.empty()) {
      kernels::set_backend(kernel == "avx2" ? kernels::Backend::kAvx2 : kernels::Backend::kScalar);
    }
    if (s->parsed()) return cmd_simulate(sim);
    if (e->parsed()) return cmd_estimate(est);
    if (m->parsed()) return cmd_montecarlo(mc);
    if (c->parsed()) return cmd_crbound(cr);
  } catch (const UsageError& ex) {
    std::cerr << "usage error: " << ex.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
