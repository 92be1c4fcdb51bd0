#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "morsm/signalgen.hpp"

namespace morsm {

/// Shortest round-trippable text for a double ("%.17g"); inf/nan spelled
/// "inf", "-inf", "nan".
std::string format_double(double v);

/// Header `t,u,y`, one row per sample, t = 1..N.
void write_data_csv(std::ostream& os, const DataRecord& data);

/// Reads the `t,u,y` layout back. The result carries no truth/metadata.
DataRecord read_data_csv(std::istream& is);

/// Sidecar in the system-spec key = value format plus seed and samples, so it
/// can be fed back to `simulate`.
void write_metadata(std::ostream& os, const DataRecord& data);

/// FNV-1a over the bit patterns of u and y.
std::uint64_t checksum(const DataRecord& data);

}  // namespace morsm
