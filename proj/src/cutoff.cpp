#include "sgpe/cutoff.hpp"

#include "sgpe/rng.hpp"
#include "sgpe/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sgpe {

namespace {

double bump(double s) { return s > 0.0 ? std::exp(-1.0 / s) : 0.0; }

std::vector<double> log_of(std::span<const double> v)
{
	std::vector<double> out(v.size());
	std::transform(v.begin(), v.end(), out.begin(), [](double a) { return std::log(a); });
	return out;
}

std::vector<double> log_of(std::span<const int> v)
{
	std::vector<double> out(v.size());
	std::transform(v.begin(), v.end(), out.begin(), [](int a) { return std::log(double(a)); });
	return out;
}

/// S_d(i,j) = sum_{k1+k2=d} h_{k1}(x_i)^2 h_{k2}(x_j)^2 for d = 0..dmax
std::vector<RealGrid> shell_sums(const BasisTable& bt, int dmax)
{
	const int m = bt.nodes();
	std::vector<RealGrid> shells;
	shells.reserve(dmax + 1);
	for (int d = 0; d <= dmax; ++d)
	{
		RealGrid s(m);
		for (int k1 = 0; k1 <= d; ++k1)
		{
			auto a = bt.hrow(k1);
			auto b = bt.hrow(d - k1);
			for (int i = 0; i < m; ++i)
			{
				double ai = a[i] * a[i];
				if (ai == 0.0)
					continue;
				double* row = s.values.data() + static_cast<std::size_t>(i) * m;
				for (int j = 0; j < m; ++j)
					row[j] += ai * (b[j] * b[j]);
			}
		}
		shells.push_back(std::move(s));
	}
	return shells;
}

} // namespace

double chi(double t)
{
	if (t <= 0.5)
		return 1.0;
	if (t >= 1.0)
		return 0.0;
	double a = bump(2.0 - 2.0 * t);
	double b = bump(2.0 * t - 1.0);
	return a / (a + b);
}

SpectralField apply_SN(SpectralField f, int level)
{
	for (int d = 0; d <= f.deg_max(); ++d)
	{
		double c = chi_level(d, level);
		if (c == 1.0)
			continue;
		for (int k2 = 0; k2 <= d; ++k2)
			f.at({d - k2, k2}) *= c;
	}
	return f;
}

SpectralField apply_PiN(SpectralField f, int level)
{
	for (int d = std::max(level + 1, 0); d <= f.deg_max(); ++d)
		for (int k2 = 0; k2 <= d; ++k2)
			f.at({d - k2, k2}) = 0.0;
	return f;
}

double kernel_value(const BasisTable& bt, GridPoint x, GridPoint y, int level_n, int level_m)
{
	int dmax = std::min({bt.deg_max(), level_n, level_m});
	double sum = 0.0;
	for (int d = 0; d <= dmax; ++d)
	{
		double w = chi_level(d, level_n) * chi_level(d, level_m) / lambda_sq(d);
		if (w == 0.0)
			continue;
		double shell = 0.0;
		for (int k1 = 0; k1 <= d; ++k1)
		{
			int k2 = d - k1;
			shell += (bt.h(k1, x.i) * bt.h(k1, y.i)) * (bt.h(k2, x.j) * bt.h(k2, y.j));
		}
		sum += w * shell;
	}
	return sum;
}

RenormFunction rho_N(int level, const BasisTable& bt)
{
	if (level > bt.deg_max())
		throw std::invalid_argument("rho_N: level exceeds basis table degree");
	const int m = bt.nodes();
	RenormFunction r{level, RealGrid(m), RealGrid(m)};
	for (int i = 0; i < m; ++i)
		for (int j = 0; j < m; ++j)
		{
			double v = kernel_value(bt, {i, j}, {i, j}, level, level);
			r.rho_sq(i, j) = v;
			r.rho(i, j) = std::sqrt(v);
		}
	return r;
}

RenormFunction zero_renorm(int level, const BasisTable& bt)
{
	return {level, RealGrid(bt.nodes()), RealGrid(bt.nodes())};
}

KernelSlice kernel_KNM(GridPoint x, int level_n, int level_m, const BasisTable& bt)
{
	if (std::max(level_n, level_m) > bt.deg_max())
		throw std::invalid_argument("kernel_KNM: level exceeds basis table degree");
	const int m = bt.nodes();
	KernelSlice s{x, level_n, level_m, RealGrid(m)};
	for (int i = 0; i < m; ++i)
		for (int j = 0; j < m; ++j)
			s.values(i, j) = kernel_value(bt, x, {i, j}, level_n, level_m);
	return s;
}

std::vector<double> hermite_lp_norms_1d(int nmax, double p)
{
	const double half_width = std::sqrt(2.0 * nmax + 1.0) + 9.0;
	const double h = 0.004;
	const int npts = static_cast<int>(2.0 * half_width / h) + 1;
	std::vector<double> acc(nmax + 1, 0.0);
	for (int s = 0; s < npts; ++s)
	{
		double x = -half_width + s * h;
		double pre = 0.0, cur = std::pow(3.14159265358979323846, -0.25) * std::exp(-0.5 * x * x);
		for (int n = 0; n <= nmax; ++n)
		{
			double a = std::abs(cur);
			if (std::isinf(p))
				acc[n] = std::max(acc[n], a);
			else
				acc[n] += (p == 4.0 ? (a * a) * (a * a) : std::pow(a, p)) * h;
			double nxt = x * std::sqrt(2.0 / (n + 1)) * cur - std::sqrt(double(n) / (n + 1)) * pre;
			pre = cur;
			cur = nxt;
		}
	}
	if (!std::isinf(p))
		for (auto& v : acc)
			v = std::pow(v, 1.0 / p);
	return acc;
}

DecayFit hermite_lp_decay_probe(double p, int n_min, int n_max)
{
	if (n_max - n_min + 1 < 3 || n_min < 0)
		throw std::invalid_argument("hermite_lp_decay_probe: need at least three degrees to fit");
	auto norms1d = hermite_lp_norms_1d(n_max, p);
	DecayFit fit;
	for (int n = n_min; n <= n_max; ++n)
	{
		double best = 0.0;
		for (int k1 = 0; k1 <= n; ++k1)
			best = std::max(best, norms1d[k1] * norms1d[n - k1]);
		fit.lambdas.push_back(std::sqrt(lambda_sq(n)));
		fit.norms.push_back(best);
	}
	auto lx = log_of(fit.lambdas);
	auto ly = log_of(fit.norms);
	fit.slope = stats::least_squares(lx, ly).slope;
	return fit;
}

LevelSeries rho_growth_probe(double p, std::span<const int> levels)
{
	if (levels.size() < 2)
		throw std::invalid_argument("rho_growth_probe: need at least two levels");
	int top = *std::max_element(levels.begin(), levels.end());
	BasisTable bt(top, GridWeight::gauss2);
	auto shells = shell_sums(bt, top);
	LevelSeries out;
	for (int n : levels)
	{
		RealGrid r2(bt.nodes());
		for (int d = 0; d < n; ++d)
		{
			double c = chi_level(d, n);
			double w = c * c / lambda_sq(d);
			if (w == 0.0)
				continue;
			for (std::size_t q = 0; q < r2.values.size(); ++q)
				r2.values[q] += w * shells[d].values[q];
		}
		out.levels.push_back(n);
		out.values.push_back(lp_norm(r2, p, bt));
	}
	auto lx = log_of(std::span<const int>(out.levels));
	auto ly = log_of(out.values);
	out.slope = stats::least_squares(lx, ly).slope;
	return out;
}

LevelSeries sn_norm_probe(double p, std::span<const int> levels, int trials, std::uint64_t seed)
{
	if (trials < 1)
		throw std::invalid_argument("sn_norm_probe: trials must be positive");
	LevelSeries out;
	for (int n : levels)
	{
		BasisTable bt(n, GridWeight::gauss2);
		RngStream rng(seed, static_cast<std::uint64_t>(n));
		double worst = 0.0;
		for (int t = 0; t < trials; ++t)
		{
			SpectralField f(n);
			for (std::size_t i = 0; i < f.size(); ++i)
				f[i] = rng.complex_normal();
			double den = lp_norm(synthesize(f, bt), p, bt);
			double num = lp_norm(synthesize(apply_SN(f, n), bt), p, bt);
			worst = std::max(worst, num / den);
		}
		out.levels.push_back(n);
		out.values.push_back(worst);
	}
	if (out.levels.size() >= 2)
	{
		auto lx = log_of(std::span<const int>(out.levels));
		auto ly = log_of(out.values);
		out.slope = stats::least_squares(lx, ly).slope;
	}
	return out;
}

namespace {

KernelNormSeries finish_series(KernelNormSeries s)
{
	auto& v = s.norms;
	if (v.size() >= 3)
	{
		double first = std::abs(v[1] - v[0]);
		double last = std::abs(v[v.size() - 1] - v[v.size() - 2]);
		s.increment_ratio = first == 0.0 ? (last == 0.0 ? 0.0 : INFINITY) : last / first;
	}
	return s;
}

} // namespace

KernelNormSeries kernel_norm_probe(double r, double alpha, int n_power, std::span<const int> truncations, int x_nodes)
{
	if (truncations.empty() || !std::is_sorted(truncations.begin(), truncations.end()))
		throw std::invalid_argument("kernel_norm_probe: truncations must be increasing");
	if (n_power < 1 || r < 1.0)
		throw std::invalid_argument("kernel_norm_probe: need n >= 1 and r >= 1");
	const int tmax = truncations.back();
	BasisTable bx(tmax, GridWeight::gauss, x_nodes);
	const int m = bx.nodes();

	KernelNormSeries out;
	out.truncations.assign(truncations.begin(), truncations.end());

	if (n_power == 1)
	{
		// |K_T(x,.)|^2_{W^{alpha,2}} = sum_{|k|<=T} lambda_k^{2 alpha - 4} h_k(x)^2
		RealGrid f2(m);
		int done = -1;
		for (int t : truncations)
		{
			for (int d = done + 1; d <= t; ++d)
			{
				double w = std::pow(lambda_sq(d), alpha - 2.0);
				for (int k1 = 0; k1 <= d; ++k1)
				{
					auto a = bx.hrow(k1);
					auto b = bx.hrow(d - k1);
					for (int i = 0; i < m; ++i)
					{
						double ai = w * a[i] * a[i];
						if (ai == 0.0)
							continue;
						double* row = f2.values.data() + static_cast<std::size_t>(i) * m;
						for (int j = 0; j < m; ++j)
							row[j] += ai * (b[j] * b[j]);
					}
				}
			}
			done = t;
			RealGrid f(m);
			for (std::size_t q = 0; q < f.values.size(); ++q)
				f.values[q] = std::sqrt(std::max(f2.values[q], 0.0));
			out.norms.push_back(lp_norm(f, r, bx));
		}
		return finish_series(std::move(out));
	}

	// general power: expand y -> K_T(x,y)^n in the basis on a finer y grid
	BasisTable by(n_power * tmax, GridWeight::gauss2);
	for (int t : truncations)
	{
		RealGrid f(m);
		for (int i = 0; i < m; ++i)
			for (int j = 0; j < m; ++j)
			{
				SpectralField row(t);
				for (int d = 0; d <= t; ++d)
					for (int k2 = 0; k2 <= d; ++k2)
						row.at({d - k2, k2}) = bx.h(d - k2, i) * bx.h(k2, j) / lambda_sq(d);
				auto g = synthesize(row.resized(by.deg_max()), by);
				for (auto& v : g.values)
					v = std::pow(v.real(), n_power);
				auto c = analyze(g, by, n_power * t);
				double s = 0.0;
				for (std::size_t q = 0; q < c.size(); ++q)
					s += std::pow(lambda_sq(mode_at(q).degree()), alpha) * std::norm(c[q]);
				f(i, j) = std::sqrt(s);
			}
		out.norms.push_back(lp_norm(f, r, bx));
	}
	return finish_series(std::move(out));
}

} // namespace sgpe
