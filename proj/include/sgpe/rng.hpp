#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <utility>

namespace sgpe {

inline constexpr std::uint64_t splitmix64(std::uint64_t x)
{
	x += 0x9e3779b97f4a7c15ULL;
	x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
	x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
	return x ^ (x >> 31);
}

inline constexpr std::uint64_t mix_key(std::uint64_t a, std::uint64_t b)
{
	return splitmix64(a ^ splitmix64(b + 0x632be59bd9b4e019ULL));
}

/**
 * Counter-based random stream.
 *
 * Every draw is a pure function of (key, counter), so a stream can be
 * re-created from its seed and stream id, and independent sub-streams
 * (per trajectory, per mode, per step) are obtained by hashing indices
 * into the key instead of sharing mutable generator state.
 */
class RngStream
{
  public:
	explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0)
	    : key_(mix_key(seed, stream))
	{}

	std::uint64_t key() const { return key_; }

	/// derived stream; does not advance this one
	RngStream substream(std::uint64_t id) const
	{
		return RngStream(key_, id, tag{});
	}

	std::uint64_t next_u64() { return splitmix64(key_ + 0xd1b54a32d192ed03ULL * counter_++); }

	/// uniform in the open interval (0,1)
	double uniform()
	{
		return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
	}

	/// standard normal N(0,1) (Box-Muller, one value per call, no caching)
	double normal()
	{
		double u1 = uniform();
		double u2 = uniform();
		return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
	}

	/// complex N_C(0,1): real and imaginary parts independent N(0,1/2)
	std::complex<double> complex_normal()
	{
		double u1 = uniform();
		double u2 = uniform();
		double r = std::sqrt(-std::log(u1));
		double a = 2.0 * std::numbers::pi * u2;
		return {r * std::cos(a), r * std::sin(a)};
	}

	/// stateless complex N_C(0,1) draw addressed by (a, b), e.g. (mode, step)
	std::complex<double> complex_normal_at(std::uint64_t a, std::uint64_t b) const
	{
		RngStream s(mix_key(key_, a), b, tag{});
		return s.complex_normal();
	}

	std::uint64_t counter() const { return counter_; }

  private:
	struct tag
	{};
	RngStream(std::uint64_t key, std::uint64_t id, tag) : key_(mix_key(key, id)) {}

	std::uint64_t key_;
	std::uint64_t counter_ = 0;
};

} // namespace sgpe
