#include "sgpe/snapshot.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace sgpe {

namespace {

void put_u64(std::ostream& os, std::uint64_t v)
{
	std::array<char, 8> b;
	for (int i = 0; i < 8; ++i)
		b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
	os.write(b.data(), 8);
}

std::uint64_t get_u64(std::istream& is)
{
	std::array<unsigned char, 8> b;
	if (!is.read(reinterpret_cast<char*>(b.data()), 8))
		throw std::runtime_error("snapshot: truncated file");
	std::uint64_t v = 0;
	for (int i = 0; i < 8; ++i)
		v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
	return v;
}

void put_f64(std::ostream& os, double x) { put_u64(os, std::bit_cast<std::uint64_t>(x)); }
double get_f64(std::istream& is) { return std::bit_cast<double>(get_u64(is)); }

} // namespace

void write_snapshot(std::ostream& os, const Snapshot& s)
{
	put_u64(os, static_cast<std::uint64_t>(s.coeffs.deg_max()));
	put_f64(os, s.time);
	for (cplx c : s.coeffs.coeffs())
	{
		put_f64(os, c.real());
		put_f64(os, c.imag());
	}
	if (!os)
		throw std::runtime_error("snapshot: write failed");
}

Snapshot read_snapshot(std::istream& is)
{
	std::uint64_t level = get_u64(is);
	if (level > 4096)
		throw std::runtime_error("snapshot: implausible level " + std::to_string(level));
	Snapshot s;
	s.time = get_f64(is);
	s.coeffs = SpectralField(static_cast<int>(level));
	for (auto& c : s.coeffs.coeffs())
	{
		double re = get_f64(is);
		double im = get_f64(is);
		c = {re, im};
	}
	return s;
}

void save_snapshot(const std::string& path, const Snapshot& s)
{
	std::ofstream os(path, std::ios::binary);
	if (!os)
		throw std::runtime_error("snapshot: cannot open " + path);
	write_snapshot(os, s);
}

Snapshot load_snapshot(const std::string& path)
{
	std::ifstream is(path, std::ios::binary);
	if (!is)
		throw std::runtime_error("snapshot: cannot open " + path);
	return read_snapshot(is);
}

} // namespace sgpe
