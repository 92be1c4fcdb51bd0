#pragma once

// Strict `key = value` text files: one entry per line, `#` starts a
// comment, unknown or repeated keys are errors.

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "morsm/montecarlo.hpp"
#include "morsm/signalgen.hpp"

namespace morsm {

std::map<std::string, std::string> parse_key_values(std::string_view text,
                                                    std::span<const std::string_view> allowed);

/// Whitespace- or comma-separated reals; empty input gives an empty vector.
std::vector<double> parse_reals(std::string_view text);

struct SystemSpec {
  BjSystem system;
  ExperimentInput input;
  std::optional<std::size_t> samples;
};

/// Keys: plant_num (l_1..), plant_den (f_1..), noise_num (c_1..),
/// noise_den (d_1..), input_num, input_den, innovation_variance,
/// noise_variance, seed, samples.
SystemSpec parse_system_spec(std::string_view text);

/// Keys: study, sample_sizes, runs_per_N, methods, base_seed, snr, len_ir,
/// arx_order, arx_grid, arx_delta, stop_tol, pem_max_iter, pem_f_tol,
/// exclude_unstable, random_order, workers, system_file. `system_file` is
/// resolved relative to `base_dir`.
McConfig parse_mc_config(std::string_view text, const std::filesystem::path& base_dir = {});

std::string read_text_file(const std::filesystem::path& path);

}  // namespace morsm
