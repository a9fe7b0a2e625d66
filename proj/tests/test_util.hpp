#pragma once

#include "sgpe/hermite.hpp"
#include "sgpe/rng.hpp"

#include <cmath>
#include <functional>

namespace sgpe::testing {

inline SpectralField random_field(int deg, std::uint64_t seed, double decay = 0.0)
{
	RngStream rng(seed, 77);
	SpectralField f(deg);
	for (std::size_t i = 0; i < f.size(); ++i)
	{
		double scale = std::pow(lambda_sq(mode_at(i).degree()), -0.5 * decay);
		f[i] = scale * rng.complex_normal();
	}
	return f;
}

/// composite trapezoid on [-L, L]; spectrally accurate for Gaussian-decaying integrands
inline double trapezoid(const std::function<double(double)>& g, double L = 14.0, int n = 14001)
{
	double h = 2.0 * L / (n - 1);
	double s = 0.0;
	for (int i = 0; i < n; ++i)
	{
		double w = (i == 0 || i == n - 1) ? 0.5 : 1.0;
		s += w * g(-L + i * h);
	}
	return s * h;
}

/// Hermite function from the explicit physicists' polynomial; small n only
inline double hermite_function_explicit(int n, double x)
{
	long double hprev = 1.0L, hcur = 2.0L * x;
	long double hn = (n == 0) ? hprev : hcur;
	for (int k = 1; k < n; ++k)
	{
		long double next = 2.0L * x * hcur - 2.0L * k * hprev;
		hprev = hcur;
		hcur = next;
		hn = hcur;
	}
	long double fact = 1.0L;
	for (int k = 2; k <= n; ++k)
		fact *= k;
	long double norm = std::sqrt(std::pow(2.0L, n) * fact * std::sqrt(3.14159265358979323846L));
	return static_cast<double>(hn / norm * std::exp(-0.5L * x * x));
}

} // namespace sgpe::testing
