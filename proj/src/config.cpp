#include "morsm/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "morsm/error.hpp"

namespace morsm {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

[[noreturn]] void fail(const std::string& msg) { throw Error(ErrorCode::kParse, msg); }

double to_real(std::string_view s, std::string_view key) {
  s = trim(s);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    fail("invalid number for '" + std::string(key) + "': '" + std::string(s) + "'");
  }
  return v;
}

std::uint64_t to_uint(std::string_view s, std::string_view key) {
  s = trim(s);
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    fail("invalid integer for '" + std::string(key) + "': '" + std::string(s) + "'");
  }
  return v;
}

bool to_bool(std::string_view s, std::string_view key) {
  s = trim(s);
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  fail("invalid boolean for '" + std::string(key) + "': '" + std::string(s) + "'");
}

std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  auto is_sep = [](char c) { return c == ',' || std::isspace(static_cast<unsigned char>(c)); };
  while (i < s.size()) {
    while (i < s.size() && is_sep(s[i])) ++i;
    std::size_t j = i;
    while (j < s.size() && !is_sep(s[j])) ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

std::vector<std::size_t> parse_sizes(std::string_view value) {
  value = trim(value);
  if (value.starts_with("logspace(")) {
    if (!value.ends_with(")")) fail("unterminated logspace(...)");
    const auto args = split_list(value.substr(9, value.size() - 10));
    if (args.size() != 3) fail("logspace needs (lo, hi, count)");
    return logspace_sizes(to_uint(args[0], "sample_sizes"), to_uint(args[1], "sample_sizes"),
                          to_uint(args[2], "sample_sizes"));
  }
  std::vector<std::size_t> out;
  for (auto tok : split_list(value)) out.push_back(to_uint(tok, "sample_sizes"));
  return out;
}

constexpr std::string_view kSystemKeys[] = {
    "plant_num",      "plant_den", "noise_num", "noise_den",
    "input_num",      "input_den", "innovation_variance", "noise_variance",
    "seed",           "samples",
};

constexpr std::string_view kMcKeys[] = {
    "study",       "sample_sizes", "runs_per_N",   "methods",          "base_seed",
    "snr",         "len_ir",       "arx_order",    "arx_grid",         "arx_delta",
    "stop_tol",    "pem_max_iter", "pem_f_tol",    "exclude_unstable", "random_order",
    "workers",     "system_file",
};

}  // namespace

std::map<std::string, std::string> parse_key_values(std::string_view text,
                                                    std::span<const std::string_view> allowed) {
  std::map<std::string, std::string> out;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      fail("line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key(trim(view.substr(0, eq)));
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      fail("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    if (out.contains(key)) fail("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    out.emplace(key, std::string(trim(view.substr(eq + 1))));
  }
  return out;
}

std::vector<double> parse_reals(std::string_view text) {
  std::vector<double> out;
  for (auto tok : split_list(text)) out.push_back(to_real(tok, "coefficient list"));
  return out;
}

SystemSpec parse_system_spec(std::string_view text) {
  const auto kv = parse_key_values(text, kSystemKeys);
  auto get = [&](const char* key) -> std::optional<std::string> {
    auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    return it->second;
  };
  if (!get("plant_num") || !get("plant_den")) fail("system spec needs plant_num and plant_den");

  SystemSpec spec;
  spec.system = BjSystem(Polynomial::strictly_causal(parse_reals(*get("plant_num"))),
                         Polynomial::monic(parse_reals(*get("plant_den"))),
                         Polynomial::monic(parse_reals(get("noise_num").value_or(""))),
                         Polynomial::monic(parse_reals(get("noise_den").value_or(""))));
  spec.input.input_filter = RationalTf(Polynomial::monic(parse_reals(get("input_num").value_or(""))),
                                       Polynomial::monic(parse_reals(get("input_den").value_or(""))));
  if (auto v = get("innovation_variance")) spec.input.innovation_variance = to_real(*v, "innovation_variance");
  if (auto v = get("noise_variance")) spec.input.noise_variance = to_real(*v, "noise_variance");
  if (auto v = get("seed")) spec.input.seed = to_uint(*v, "seed");
  if (auto v = get("samples")) spec.samples = to_uint(*v, "samples");
  if (!(spec.input.innovation_variance > 0.0) || !(spec.input.noise_variance >= 0.0)) {
    fail("variances must be non-negative (innovation variance positive)");
  }
  return spec;
}

McConfig parse_mc_config(std::string_view text, const std::filesystem::path& base_dir) {
  const auto kv = parse_key_values(text, kMcKeys);
  McConfig cfg;
  for (const auto& [key, value] : kv) {
    if (key == "study") {
      if (value == "fixed_system") {
        cfg.study = Study::kFixedSystem;
      } else if (value == "random_systems") {
        cfg.study = Study::kRandomSystems;
      } else {
        fail("study must be fixed_system or random_systems");
      }
    } else if (key == "sample_sizes") {
      cfg.sample_sizes = parse_sizes(value);
    } else if (key == "runs_per_N") {
      cfg.runs_per_N = to_uint(value, key);
    } else if (key == "methods") {
      cfg.methods.clear();
      for (auto tok : split_list(value)) cfg.methods.push_back(MethodSpec::parse(tok));
    } else if (key == "base_seed") {
      cfg.base_seed = to_uint(value, key);
    } else if (key == "snr") {
      cfg.snr = to_real(value, key);
    } else if (key == "len_ir") {
      cfg.len_ir = to_uint(value, key);
    } else if (key == "arx_order") {
      cfg.arx_order = value == "auto" ? 0 : to_uint(value, key);
    } else if (key == "arx_grid") {
      cfg.arx_grid = parse_grid(value);
    } else if (key == "arx_delta") {
      cfg.arx_delta = to_real(value, key);
    } else if (key == "stop_tol") {
      cfg.stop_tol = to_real(value, key);
    } else if (key == "pem_max_iter") {
      cfg.pem.max_iterations = to_uint(value, key);
    } else if (key == "pem_f_tol") {
      cfg.pem.f_tol = to_real(value, key);
    } else if (key == "exclude_unstable") {
      cfg.exclude_unstable = to_bool(value, key);
    } else if (key == "random_order") {
      cfg.random_order = to_uint(value, key);
    } else if (key == "workers") {
      cfg.workers = to_uint(value, key);
    } else if (key == "system_file") {
      const auto spec = parse_system_spec(read_text_file(base_dir / value));
      cfg.system = spec.system;
      cfg.input.input_filter = spec.input.input_filter;
      cfg.input.innovation_variance = spec.input.innovation_variance;
      cfg.input.noise_variance = spec.input.noise_variance;
    }
  }
  cfg.validate();
  return cfg;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kParse, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace morsm
