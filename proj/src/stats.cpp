#include "sgpe/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace sgpe::stats {

double mean(std::span<const double> xs)
{
	if (xs.empty())
		return 0.0;
	return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double variance(std::span<const double> xs)
{
	if (xs.size() < 2)
		return 0.0;
	double m = mean(xs);
	double s = 0.0;
	for (double x : xs)
		s += (x - m) * (x - m);
	return s / static_cast<double>(xs.size() - 1);
}

Estimate iid_estimate(std::span<const double> xs)
{
	Estimate e;
	e.mean = mean(xs);
	if (xs.size() > 1)
		e.se = std::sqrt(variance(xs) / static_cast<double>(xs.size()));
	return e;
}

Estimate batch_means(std::span<const double> xs, std::size_t batches)
{
	std::size_t n = xs.size();
	if (batches == 0)
		batches = std::clamp<std::size_t>(static_cast<std::size_t>(std::sqrt(double(n))), 10, 200);
	if (n < 2 * batches)
		return iid_estimate(xs);
	std::size_t len = n / batches;
	std::vector<double> bm(batches);
	for (std::size_t b = 0; b < batches; ++b)
		bm[b] = mean(xs.subspan(b * len, len));
	Estimate e;
	e.mean = mean(xs.first(batches * len));
	e.se = std::sqrt(variance(bm) / static_cast<double>(batches));
	return e;
}

Estimate pool(std::span<const Estimate> parts)
{
	Estimate e;
	if (parts.empty())
		return e;
	double k = static_cast<double>(parts.size());
	double v = 0.0;
	for (auto const& p : parts)
	{
		e.mean += p.mean;
		v += p.se * p.se;
	}
	e.mean /= k;
	e.se = std::sqrt(v) / k;
	return e;
}

double z_score(const Estimate& a, const Estimate& b)
{
	double s = std::sqrt(a.se * a.se + b.se * b.se);
	double d = a.mean - b.mean;
	if (s == 0.0)
		return d == 0.0 ? 0.0 : (d > 0 ? INFINITY : -INFINITY);
	return d / s;
}

double split_rhat(const std::vector<std::vector<double>>& chains)
{
	std::vector<std::span<const double>> halves;
	for (auto const& c : chains)
	{
		std::size_t h = c.size() / 2;
		if (h < 2)
			throw std::invalid_argument("split_rhat: chains too short");
		halves.emplace_back(c.data(), h);
		halves.emplace_back(c.data() + (c.size() - h), h);
	}
	std::size_t m = halves.size();
	double n = static_cast<double>(halves[0].size());
	std::vector<double> means(m), vars(m);
	for (std::size_t j = 0; j < m; ++j)
	{
		means[j] = mean(halves[j]);
		vars[j] = variance(halves[j]);
	}
	double w = mean(vars);
	double b = n * variance(means);
	if (w == 0.0)
		return b == 0.0 ? 1.0 : INFINITY;
	double var_plus = (n - 1.0) / n * w + b / n;
	return std::sqrt(var_plus / w);
}

LineFit least_squares(std::span<const double> x, std::span<const double> y)
{
	if (x.size() != y.size() || x.size() < 2)
		throw std::invalid_argument("least_squares: need at least two paired points");
	double mx = mean(x), my = mean(y);
	double sxx = 0.0, sxy = 0.0;
	for (std::size_t i = 0; i < x.size(); ++i)
	{
		sxx += (x[i] - mx) * (x[i] - mx);
		sxy += (x[i] - mx) * (y[i] - my);
	}
	if (sxx == 0.0)
		throw std::invalid_argument("least_squares: degenerate abscissae");
	LineFit f;
	f.slope = sxy / sxx;
	f.intercept = my - f.slope * mx;
	return f;
}

double quantile(std::vector<double> xs, double q)
{
	if (xs.empty())
		throw std::invalid_argument("quantile of empty sample");
	std::sort(xs.begin(), xs.end());
	double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(xs.size() - 1);
	std::size_t lo = static_cast<std::size_t>(std::floor(pos));
	std::size_t hi = std::min(lo + 1, xs.size() - 1);
	double f = pos - static_cast<double>(lo);
	if (f == 0.0)
		return xs[lo];
	return xs[lo] * (1.0 - f) + xs[hi] * f;
}

} // namespace sgpe::stats
