#include "morsm/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <string>

#include "morsm/error.hpp"

namespace morsm {
namespace {

void write_coeffs(std::ostream& os, const char* key, std::span<const double> c) {
  os << key << " =";
  for (double v : c) os << ' ' << format_double(v);
  os << '\n';
}

double parse_field(std::string_view s, std::size_t line) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw Error(ErrorCode::kParse, "data CSV line " + std::to_string(line) + ": bad number '" +
                                       std::string(s) + "'");
  }
  return v;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_data_csv(std::ostream& os, const DataRecord& data) {
  os << "t,u,y\n";
  for (std::size_t t = 0; t < data.size(); ++t) {
    os << t + 1 << ',' << format_double(data.u[t]) << ',' << format_double(data.y[t]) << '\n';
  }
}

DataRecord read_data_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw Error(ErrorCode::kParse, "empty data CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "t,u,y") throw Error(ErrorCode::kParse, "data CSV header must be 't,u,y'");
  std::vector<double> u, y;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1);
    if (c2 == std::string::npos || line.find(',', c2 + 1) != std::string::npos) {
      throw Error(ErrorCode::kParse, "data CSV line " + std::to_string(line_no) + ": expected 3 fields");
    }
    std::string_view view(line);
    u.push_back(parse_field(view.substr(c1 + 1, c2 - c1 - 1), line_no));
    y.push_back(parse_field(view.substr(c2 + 1), line_no));
  }
  if (u.empty()) throw Error(ErrorCode::kParse, "data CSV has no samples");
  DataRecord rec;
  rec.u = Signal(std::move(u));
  rec.y = Signal(std::move(y));
  return rec;
}

void write_metadata(std::ostream& os, const DataRecord& data) {
  if (data.truth) {
    write_coeffs(os, "plant_num", data.truth->L.coeffs());
    write_coeffs(os, "plant_den", data.truth->F.coeffs());
    write_coeffs(os, "noise_num", data.truth->C.coeffs());
    write_coeffs(os, "noise_den", data.truth->D.coeffs());
  }
  write_coeffs(os, "input_num", data.meta.input_filter.num.coeffs());
  write_coeffs(os, "input_den", data.meta.input_filter.den.coeffs());
  os << "innovation_variance = " << format_double(data.meta.innovation_variance) << '\n';
  os << "noise_variance = " << format_double(data.meta.noise_variance) << '\n';
  os << "seed = " << data.meta.seed << '\n';
  os << "samples = " << data.size() << '\n';
}

std::uint64_t checksum(const DataRecord& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&](double v) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) {
      h ^= (bits >> (8 * i)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  };
  for (double v : data.u.view()) mix(v);
  for (double v : data.y.view()) mix(v);
  return h;
}

}  // namespace morsm
