#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "morsm/config.hpp"
#include "morsm/io.hpp"
#include "morsm/lti.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = -1;
  std::string out;
};

Outcome run(const std::string& args) {
  const std::string cmd = std::string("\"") + MORSM_CLI_PATH + "\" " + args + " 2>&1";
  Outcome o;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf{};
  while (std::fgets(buf.data(), buf.size(), pipe) != nullptr) o.out += buf.data();
  const int status = pclose(pipe);
  o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return o;
}

fs::path work(const std::string& name) {
  const fs::path p = fs::path(MORSM_WORK_DIR) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) { return morsm::read_text_file(p); }

morsm::DataRecord read_record(const fs::path& p) {
  std::istringstream in(slurp(p));
  return morsm::read_data_csv(in);
}

std::string checksum_of(const std::string& out) {
  const auto p = out.find("checksum ");
  if (p == std::string::npos) return {};
  return out.substr(p + 9, out.find(')', p) - p - 9);
}

std::map<std::string, std::string> model_keys(const fs::path& p) {
  std::map<std::string, std::string> kv;
  std::istringstream in(slurp(p));
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find(" = ");
    if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 3);
  }
  return kv;
}

std::vector<double> numbers(const std::string& s) {
  std::istringstream in(s);
  std::vector<double> v;
  double x;
  while (in >> x) v.push_back(x);
  return v;
}

const std::string kSystem = std::string(MORSM_CONFIG_DIR) + "/reference_system.txt";

fs::path quiet_system(const fs::path& dir) {
  const fs::path p = dir / "quiet.txt";
  std::ofstream(p) << "plant_num = 1 0.1\nplant_den = -1.2 0.6\nnoise_num = 0.7\nnoise_den = -0.9\n"
                      "input_den = -1 0.89\nnoise_variance = 0\n";
  return p;
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(run("").code == 2);
  CHECK(run("frobnicate").code == 2);
  CHECK(run("simulate --system " + kSystem + " --N 0").code == 2);
  CHECK(run("simulate --system " + kSystem).code == 2);
  CHECK(run("estimate --data x.csv --method arx").code == 2);
  CHECK(run("montecarlo --config x.cfg --bogus-flag").code == 2);
  CHECK(run("estimate --data x.csv --arx-grid 10:5").code == 2);
  CHECK(run("--help").code == 0);
}

TEST_CASE("runtime failures exit with 1") {
  const auto dir = work("missing");
  CHECK(run("montecarlo --config " + (dir / "absent.cfg").string()).code == 1);
  CHECK(run("estimate --data " + (dir / "absent.csv").string()).code == 1);
  const auto o = run("simulate --system " + (dir / "absent.txt").string() + " --N 10");
  CHECK(o.code == 1);
  CHECK(o.out.find("error:") != std::string::npos);
}

TEST_CASE("simulate is deterministic and writes the requested record") {
  const auto a = work("sim_a");
  const auto b = work("sim_b");
  const auto ra = run("simulate --system " + kSystem + " --N 200 --seed 3 --out-dir " + a.string());
  const auto rb = run("simulate --system " + kSystem + " --N 200 --seed 3 --out-dir " + b.string());
  REQUIRE(ra.code == 0);
  REQUIRE(rb.code == 0);
  CHECK_FALSE(checksum_of(ra.out).empty());
  CHECK(checksum_of(ra.out) == checksum_of(rb.out));
  CHECK(slurp(a / "data.csv") == slurp(b / "data.csv"));

  const auto rec = read_record(a / "data.csv");
  CHECK(rec.size() == 200);
  const auto meta = morsm::parse_system_spec(slurp(a / "data.meta"));
  CHECK(meta.input.seed == 3);
  CHECK(meta.samples == 200u);
  std::ostringstream hex;
  hex << std::hex << morsm::checksum(rec);
  CHECK(checksum_of(ra.out) == hex.str());

  const auto c = work("sim_c");
  REQUIRE(run("simulate --system " + kSystem + " --N 200 --seed 4 --out-dir " + c.string()).code == 0);
  CHECK(slurp(a / "data.csv") != slurp(c / "data.csv"));
}

TEST_CASE("simulate with zero noise outputs the filtered input") {
  const auto dir = work("sim_quiet");
  REQUIRE(run("simulate --system " + quiet_system(dir).string() + " --N 500 --seed 2 --out-dir " +
              dir.string()).code == 0);
  const auto rec = read_record(dir / "data.csv");
  const auto gu = morsm::filter(morsm::reference_system().plant(), rec.u.view());
  CHECK(morsm::testing::max_abs_diff(rec.y.samples(), gu) < 1e-12);
}

TEST_CASE("estimate recovers a noise-free plant") {
  const auto dir = work("est_quiet");
  REQUIRE(run("simulate --system " + quiet_system(dir).string() + " --N 2000 --seed 5 --out-dir " +
              dir.string()).code == 0);
  const auto o = run("estimate --data " + (dir / "data.csv").string() +
                     " --method morsm --arx-order 2 --out-dir " + dir.string());
  REQUIRE(o.code == 0);
  const auto kv = model_keys(dir / "model.txt");
  CHECK(kv.at("method") == "morsm");
  const auto num = numbers(kv.at("plant_num"));
  const auto den = numbers(kv.at("plant_den"));
  REQUIRE(num.size() == 2);
  REQUIRE(den.size() == 2);
  CHECK(std::abs(num[0] - 1.0) < 1e-4);
  CHECK(std::abs(num[1] - 0.1) < 1e-4);
  CHECK(std::abs(den[0] + 1.2) < 1e-4);
  CHECK(std::abs(den[1] - 0.6) < 1e-4);
  CHECK(kv.at("plant_stable") == "true");
}

TEST_CASE("estimate methods and outputs") {
  const auto dir = work("est_methods");
  REQUIRE(run("simulate --system " + kSystem + " --N 3000 --seed 11 --out-dir " + dir.string()).code == 0);
  const std::string data = " --data " + (dir / "data.csv").string() + " --out-dir " + dir.string();

  auto o = run("estimate --method bjsm --sm-iters 1 --arx-order 30" + data);
  REQUIRE(o.code == 0);
  auto kv = model_keys(dir / "model.txt");
  CHECK(kv.at("method") == "bjsm");
  CHECK(kv.at("converged") == "false");
  CHECK(slurp(dir / "trace.csv").rfind("iter,f_1,f_2,l_1,l_2,asym_cost,f_stable\n", 0) == 0);

  o = run("estimate --method sm --sm-iters 50 --arx-order 30" + data);
  REQUIRE(o.code == 0);
  CHECK(model_keys(dir / "model.txt").at("method") == "sm");

  o = run("estimate --method pem --arx-order 30" + data);
  REQUIRE(o.code == 0);
  kv = model_keys(dir / "model.txt");
  CHECK(kv.at("method") == "pem");
  CHECK(numbers(kv.at("noise_num")).size() == 1);
  CHECK(numbers(kv.at("noise_den")).size() == 1);

  o = run("estimate --method morsm --arx-grid 10:50:10" + data);
  REQUIRE(o.code == 0);
  std::size_t candidates = 0;
  for (std::size_t p = o.out.find("candidate n="); p != std::string::npos; p = o.out.find("candidate n=", p + 1)) {
    ++candidates;
  }
  CHECK(candidates == 5);
  kv = model_keys(dir / "model.txt");
  const int chosen = std::stoi(kv.at("arx_order"));
  CHECK(chosen % 10 == 0);
  CHECK(chosen >= 10);
  CHECK(chosen <= 50);
}

TEST_CASE("crbound writes a symmetric matrix and its inverse") {
  const auto dir = work("crbound");
  REQUIRE(run("crbound --system " + kSystem + " --out-dir " + dir.string()).code == 0);
  std::istringstream in(slurp(dir / "crbound.csv"));
  std::string line;
  std::getline(in, line);
  CHECK(line == "matrix,i,j,value");
  std::map<std::string, double> val;
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    std::istringstream ls(line);
    std::string m, i, j, v;
    std::getline(ls, m, ',');
    std::getline(ls, i, ',');
    std::getline(ls, j, ',');
    std::getline(ls, v);
    val[m + i + j] = std::stod(v);
  }
  CHECK(rows == 32);
  for (int i = 1; i <= 4; ++i) {
    for (int j = 1; j <= 4; ++j) {
      const auto a = "M" + std::to_string(i) + std::to_string(j);
      const auto b = "M" + std::to_string(j) + std::to_string(i);
      CHECK(std::abs(val[a] - val[b]) <= 1e-10 * std::abs(val[a]) + 1e-14);
    }
    CHECK(val["M" + std::to_string(i) + std::to_string(i)] > 0.0);
  }
}

TEST_CASE("crbound of the FIR toy") {
  const auto dir = work("crbound_fir");
  const auto sys = dir / "fir.txt";
  std::ofstream(sys) << "plant_num = 0.5\nplant_den = 0\n";
  REQUIRE(run("crbound --system " + sys.string() + " --out-dir " + dir.string()).code == 0);
  const auto text = slurp(dir / "crbound.csv");
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  std::vector<double> m;
  while (std::getline(in, line) && line.rfind("M,", 0) == 0) m.push_back(std::stod(line.substr(line.rfind(',') + 1)));
  REQUIRE(m.size() == 4);
  CHECK(std::abs(m[0] - 0.25) < 1e-9);
  CHECK(std::abs(m[1]) < 1e-9);
  CHECK(std::abs(m[2]) < 1e-9);
  CHECK(std::abs(m[3] - 1.0) < 1e-9);
}

TEST_CASE("montecarlo output does not depend on the worker count") {
  const auto dir = work("mc");
  const auto cfg = dir / "small.cfg";
  std::ofstream(cfg) << "study = fixed_system\nsystem_file = " << kSystem
                     << "\nsample_sizes = 300, 600\nruns_per_N = 6\n"
                        "methods = pem_true, morsm:k=1, bjsm:k=10\narx_order = 20\nbase_seed = 4\n";
  const auto one = dir / "w1";
  const auto eight = dir / "w8";
  const auto o1 = run("montecarlo --config " + cfg.string() + " --workers 1 --out-dir " + one.string());
  const auto o8 = run("montecarlo --config " + cfg.string() + " --workers 8 --out-dir " + eight.string());
  REQUIRE(o1.code == 0);
  REQUIRE(o8.code == 0);
  CHECK(slurp(one / "aggregate.csv") == slurp(eight / "aggregate.csv"));
  CHECK(slurp(one / "runs.csv") == slurp(eight / "runs.csv"));

  const auto other = dir / "seed";
  REQUIRE(run("montecarlo --config " + cfg.string() + " --seed 5 --out-dir " + other.string()).code == 0);
  CHECK(slurp(one / "aggregate.csv") != slurp(other / "aggregate.csv"));

  std::istringstream agg(slurp(one / "aggregate.csv"));
  std::string line;
  int rows = -1;
  while (std::getline(agg, line)) ++rows;
  CHECK(rows == 6);
}

TEST_CASE("montecarlo overrides") {
  const auto dir = work("mc_override");
  const auto out = dir / "out";
  const auto o = run("montecarlo --config " + std::string(MORSM_CONFIG_DIR) +
                     "/fig1.cfg --runs 1 --arx-order 20 --workers 2 --out-dir " + out.string());
  REQUIRE(o.code == 0);
  std::istringstream runs(slurp(out / "runs.csv"));
  std::string line;
  int rows = -1;
  while (std::getline(runs, line)) ++rows;
  CHECK(rows == 8 * 5);
  CHECK(run("montecarlo --config " + std::string(MORSM_CONFIG_DIR) + "/fig1.cfg --runs 0").code == 2);
}
