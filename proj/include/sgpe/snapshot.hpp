#pragma once

#include "sgpe/hermite.hpp"

#include <iosfwd>
#include <string>

namespace sgpe {

/// Binary restart file: u64 level, f64 time, then (re, im) f64 pairs for each
/// mode |k| <= level in triangular order. All values little-endian.
struct Snapshot
{
	double time = 0.0;
	SpectralField coeffs;
};

void write_snapshot(std::ostream& os, const Snapshot& s);
Snapshot read_snapshot(std::istream& is);

void save_snapshot(const std::string& path, const Snapshot& s);
Snapshot load_snapshot(const std::string& path);

} // namespace sgpe
