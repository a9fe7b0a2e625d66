#include "sgpe/gauss_field.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace sgpe {

void NoiseParams::validate() const
{
	if (!(gamma1 > 0.0) || !std::isfinite(gamma1))
		throw std::invalid_argument("gamma1 must be positive and finite");
	if (!std::isfinite(gamma2))
		throw std::invalid_argument("gamma2 must be finite");
}

SpectralField sample_mu_N(int level, RngStream& rng)
{
	if (level < 0)
		throw std::invalid_argument("sample_mu_N: negative level");
	SpectralField f(level);
	for (std::size_t i = 0; i < f.size(); ++i)
	{
		double scale = std::sqrt(2.0 / mode_at(i).eigenvalue_sq());
		f[i] = scale * rng.complex_normal();
	}
	return f;
}

OUState ou_init_stationary(const NoiseParams& params, int deg, RngStream& rng)
{
	params.validate();
	OUState s;
	s.coeffs = sample_mu_N(deg, rng);
	return s;
}

OUTransition ou_transition(int degree, double dt, const NoiseParams& params)
{
	double l2 = lambda_sq(degree);
	cplx mult = std::exp(-l2 * cplx(params.gamma1, params.gamma2) * dt);
	// 1 - exp(-x) without cancellation for small dt
	double var = (2.0 / l2) * -std::expm1(-2.0 * params.gamma1 * l2 * dt);
	return {mult, var};
}

OUState ou_step(OUState state, double dt, const NoiseParams& params, const RngStream& rng)
{
	if (!(dt > 0.0))
		throw std::invalid_argument("ou_step: dt must be positive");
	auto& c = state.coeffs;
	int d = -1;
	OUTransition tr{};
	for (std::size_t i = 0; i < c.size(); ++i)
	{
		int di = mode_at(i).degree();
		if (di != d)
		{
			d = di;
			tr = ou_transition(d, dt, params);
		}
		c[i] = tr.multiplier * c[i] + std::sqrt(tr.noise_var) * rng.complex_normal_at(i, state.step);
	}
	state.t += dt;
	++state.step;
	return state;
}

double hermite_poly_paper(int n, double x)
{
	if (n < 0 || n > 8)
		throw std::invalid_argument("hermite_poly_paper: order must be in [0, 8]");
	double prev = 1.0, cur = x;
	if (n == 0)
		return 1.0;
	double fact = 1.0;
	for (int k = 1; k < n; ++k)
	{
		double next = x * cur - k * prev;
		prev = cur;
		cur = next;
		fact *= k + 1;
	}
	return cur / std::sqrt(fact);
}

double wick_power(double z, double rho_sq, int n)
{
	switch (n)
	{
	case 0: return 1.0;
	case 1: return z;
	case 2: return z * z - rho_sq;
	case 3: return z * z * z - 3.0 * rho_sq * z;
	default: throw std::invalid_argument("wick_power: order must be in [0, 3]");
	}
}

RealGrid wick_power(const RealGrid& z, const RenormFunction& rho, int n)
{
	if (z.m != rho.rho_sq.m)
		throw std::invalid_argument("wick_power: grid does not match renormalization");
	RealGrid out(z.m);
	for (std::size_t i = 0; i < z.values.size(); ++i)
		out.values[i] = wick_power(z.values[i], rho.rho_sq.values[i], n);
	return out;
}

WickBundle wick_bundle_from_grid(const GridField& sn_z, const RenormFunction& rho)
{
	const int m = sn_z.m;
	if (m != rho.rho_sq.m)
		throw std::invalid_argument("wick_bundle: grid does not match renormalization");
	RealGrid zr(m), zi(m);
	for (std::size_t i = 0; i < sn_z.values.size(); ++i)
	{
		zr.values[i] = sn_z.values[i].real();
		zi.values[i] = sn_z.values[i].imag();
	}
	std::array<RealGrid, 4> pr, pi;
	for (int n = 0; n <= 3; ++n)
	{
		pr[n] = wick_power(zr, rho, n);
		pi[n] = wick_power(zi, rho, n);
	}
	WickBundle b;
	b.level = rho.level;
	for (int s = 0; s <= 3; ++s)
		for (int l = 0; l <= s; ++l)
		{
			int k = s - l;
			RealGrid& w = b.W(k, l);
			w = RealGrid(m);
			for (std::size_t i = 0; i < w.values.size(); ++i)
				w.values[i] = pr[k].values[i] * pi[l].values[i];
		}
	return b;
}

WickBundle wick_bundle(const OUState& state, int level, const BasisTable& bt, const RenormFunction& rho)
{
	if (rho.level != level)
		throw std::invalid_argument("wick_bundle: renormalization level mismatch");
	if (level > bt.deg_max())
		throw std::invalid_argument("wick_bundle: level exceeds basis table degree");
	// chi vanishes from degree N on, so truncating first loses nothing
	SpectralField z = apply_SN(state.coeffs.resized(level), level);
	return wick_bundle_from_grid(synthesize(z, bt), rho);
}

std::vector<double> sn_point_functional(int level, double x1, double x2)
{
	auto h1 = std::vector<double>(level + 1), h2 = std::vector<double>(level + 1);
	for (int n = 0; n <= level; ++n)
	{
		h1[n] = hermite_function(n, x1);
		h2[n] = hermite_function(n, x2);
	}
	std::vector<double> out(mode_count(level));
	for (std::size_t i = 0; i < out.size(); ++i)
	{
		MultiIndex k = mode_at(i);
		out[i] = chi_level(k.degree(), level) * h1[k.k1] * h2[k.k2];
	}
	return out;
}

double kernel_at_points(int level_n, int level_m, double x1, double x2, double y1, double y2)
{
	int top = std::min(level_n, level_m);
	if (top < 0)
		return 0.0;
	std::vector<double> a1(top + 1), a2(top + 1), b1(top + 1), b2(top + 1);
	for (int n = 0; n <= top; ++n)
	{
		a1[n] = hermite_function(n, x1);
		a2[n] = hermite_function(n, x2);
		b1[n] = hermite_function(n, y1);
		b2[n] = hermite_function(n, y2);
	}
	double total = 0.0;
	for (int d = 0; d <= top; ++d)
	{
		double w = chi_level(d, level_n) * chi_level(d, level_m) / lambda_sq(d);
		if (w == 0.0)
			continue;
		double shell = 0.0;
		for (int k2 = 0; k2 <= d; ++k2)
			shell += (a1[d - k2] * b1[d - k2]) * (a2[k2] * b2[k2]);
		total += w * shell;
	}
	return total;
}

namespace {

/// one draw of z(x) = S_N Z_R(x) at each functional; Z_R has coefficient variance 1/lambda^2
void draw_real_field(const std::vector<std::vector<double>>& funcs, const std::vector<double>& sd, RngStream& rng,
                     std::vector<double>& out)
{
	out.assign(funcs.size(), 0.0);
	for (std::size_t i = 0; i < sd.size(); ++i)
	{
		double g = sd[i] * rng.normal();
		for (std::size_t p = 0; p < funcs.size(); ++p)
			out[p] += funcs[p][i] * g;
	}
}

std::vector<double> mode_sd(int level)
{
	std::vector<double> sd(mode_count(level));
	for (std::size_t i = 0; i < sd.size(); ++i)
		sd[i] = 1.0 / mode_at(i).eigenvalue();
	return sd;
}

} // namespace

ChaosCovariance chaos_covariance_check(int level, double x1, double x2, double y1, double y2, std::size_t samples,
                                       RngStream& rng)
{
	if (samples < 2)
		throw std::invalid_argument("chaos_covariance_check: need at least two samples");
	std::vector<std::vector<double>> funcs{sn_point_functional(level, x1, x2), sn_point_functional(level, y1, y2)};
	auto sd = mode_sd(level);
	double rx = kernel_at_points(level, level, x1, x2, x1, x2);
	double ry = kernel_at_points(level, level, y1, y2, y1, y2);
	double kxy = kernel_at_points(level, level, x1, x2, y1, y2);

	std::vector<double> s22(samples), s33(samples), s23(samples), z;
	for (std::size_t s = 0; s < samples; ++s)
	{
		draw_real_field(funcs, sd, rng, z);
		s22[s] = wick_power(z[0], rx, 2) * wick_power(z[1], ry, 2);
		s33[s] = wick_power(z[0], rx, 3) * wick_power(z[1], ry, 3);
		s23[s] = wick_power(z[0], rx, 2) * wick_power(z[1], ry, 3);
	}
	ChaosCovariance out;
	out.second = stats::iid_estimate(s22);
	out.second_predicted = 2.0 * kxy * kxy;
	out.third = stats::iid_estimate(s33);
	out.third_predicted = 6.0 * kxy * kxy * kxy;
	out.mixed = stats::iid_estimate(s23);
	return out;
}

double nelson_probe(int order, int p, int level, double x1, double x2, std::size_t samples, RngStream& rng)
{
	if (order < 0 || order > 3)
		throw std::invalid_argument("nelson_probe: chaos order must be in [0, 3]");
	if (p < 2 || p % 2 != 0)
		throw std::invalid_argument("nelson_probe: p must be an even integer >= 2");
	if (order == 0)
		return 1.0;
	std::vector<std::vector<double>> funcs{sn_point_functional(level, x1, x2)};
	auto sd = mode_sd(level);
	double r2 = kernel_at_points(level, level, x1, x2, x1, x2);
	double mp = 0.0, m2 = 0.0;
	std::vector<double> z;
	for (std::size_t s = 0; s < samples; ++s)
	{
		draw_real_field(funcs, sd, rng, z);
		double f = wick_power(z[0], r2, order);
		mp += std::pow(std::abs(f), p);
		m2 += f * f;
	}
	mp /= static_cast<double>(samples);
	m2 /= static_cast<double>(samples);
	return mp / (std::pow(p - 1.0, 0.5 * order * p) * std::pow(m2, 0.5 * p));
}

std::vector<WickCenteringRow> wick_centering(int level, std::span<const std::array<double, 2>> points,
                                             std::size_t samples, RngStream& rng)
{
	std::vector<std::vector<double>> funcs;
	std::vector<double> r2;
	for (auto& x : points)
	{
		funcs.push_back(sn_point_functional(level, x[0], x[1]));
		r2.push_back(kernel_at_points(level, level, x[0], x[1], x[0], x[1]));
	}
	auto sd = mode_sd(level);
	const std::size_t np = points.size();
	// one series per (point, k, l) with 1 <= k+l <= 3
	std::vector<std::vector<double>> series(np * 9, std::vector<double>(samples));
	std::vector<double> zr, zi;
	for (std::size_t s = 0; s < samples; ++s)
	{
		draw_real_field(funcs, sd, rng, zr);
		draw_real_field(funcs, sd, rng, zi);
		for (std::size_t p = 0; p < np; ++p)
			for (int slot = 1; slot < 10; ++slot)
			{
				int tot = slot >= 6 ? 3 : slot >= 3 ? 2 : 1;
				int l = slot - tot * (tot + 1) / 2, k = tot - l;
				series[p * 9 + slot - 1][s] = wick_power(zr[p], r2[p], k) * wick_power(zi[p], r2[p], l);
			}
	}
	std::vector<WickCenteringRow> rows;
	for (std::size_t p = 0; p < np; ++p)
		for (int slot = 1; slot < 10; ++slot)
		{
			int tot = slot >= 6 ? 3 : slot >= 3 ? 2 : 1;
			int l = slot - tot * (tot + 1) / 2, k = tot - l;
			rows.push_back({points[p][0], points[p][1], k, l, stats::iid_estimate(series[p * 9 + slot - 1]), 0.0});
		}
	return rows;
}

} // namespace sgpe
