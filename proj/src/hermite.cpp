#include "sgpe/hermite.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace sgpe {

namespace {

constexpr double kRescale = 1e150;
const double kLogRescale = std::log(kRescale);
const double kPiQuarter = std::pow(std::numbers::pi, -0.25);

/**
 * Runs the normalized three-term recurrence without the Gaussian factor,
 * rescaling the pair when it grows large. Calls visit(n, mantissa, log_scale)
 * for each n in [0, nmax]; the Hermite function value is
 * mantissa * exp(log_scale - x^2/2).
 */
template <class Visit>
void scaled_recurrence(int nmax, double x, Visit&& visit)
{
	double prev = 0.0;
	double cur = kPiQuarter;
	double scale = 0.0;
	visit(0, cur, scale);
	for (int n = 0; n < nmax; ++n)
	{
		double next = x * std::sqrt(2.0 / (n + 1)) * cur - std::sqrt(double(n) / (n + 1)) * prev;
		prev = cur;
		cur = next;
		if (std::abs(cur) > kRescale)
		{
			cur /= kRescale;
			prev /= kRescale;
			scale += kLogRescale;
		}
		visit(n + 1, cur, scale);
	}
}

double assemble(double mantissa, double scale, double x)
{
	if (mantissa == 0.0)
		return 0.0;
	double e = scale - 0.5 * x * x + std::log(std::abs(mantissa));
	return std::copysign(std::exp(e), mantissa);
}

// value of h_m and h_{m-1} at x in a common (unnormalized) scale
void top_pair(int m, double x, double& hm, double& hm1, double& scale)
{
	double last = 0.0, before = 0.0, sc = 0.0;
	scaled_recurrence(m, x, [&](int, double v, double s) {
		before = last;
		last = v;
		sc = s;
	});
	hm = last;
	hm1 = before;
	scale = sc;
}

} // namespace

double MultiIndex::eigenvalue() const { return std::sqrt(eigenvalue_sq()); }

MultiIndex mode_at(std::size_t index)
{
	int d = 0;
	while (mode_count(d) <= index)
		++d;
	int k2 = static_cast<int>(index - mode_count(d - 1));
	return {d - k2, k2};
}

double hermite_function(int n, double x)
{
	if (n < 0)
		throw std::invalid_argument("hermite_function: negative order");
	double val = 0.0;
	scaled_recurrence(n, x, [&](int k, double v, double s) {
		if (k == n)
			val = assemble(v, s, x);
	});
	return val;
}

std::vector<double> hermite_eval_1d(int n, std::span<const double> xs)
{
	if (n < 0 || n > 512)
		throw std::invalid_argument("hermite_eval_1d: order must be in [0, 512]");
	std::vector<double> out(xs.size());
	std::transform(xs.begin(), xs.end(), out.begin(), [n](double x) { return hermite_function(n, x); });
	return out;
}

std::vector<double> hermite_second_derivative_1d(int n, std::span<const double> xs)
{
	// h_n'' = 1/2 [ sqrt(n(n-1)) h_{n-2} - (2n+1) h_n + sqrt((n+1)(n+2)) h_{n+2} ]
	std::vector<double> out(xs.size());
	for (std::size_t i = 0; i < xs.size(); ++i)
	{
		double x = xs[i];
		double v = -(2.0 * n + 1.0) * hermite_function(n, x);
		if (n >= 2)
			v += std::sqrt(double(n) * (n - 1)) * hermite_function(n - 2, x);
		v += std::sqrt((n + 1.0) * (n + 2.0)) * hermite_function(n + 2, x);
		out[i] = 0.5 * v;
	}
	return out;
}

namespace {

struct RuleWithLineWeights
{
	std::vector<double> nodes, weights, line_weights;
};

RuleWithLineWeights build_rule(int m)
{
	if (m < 1)
		throw std::invalid_argument("gauss_hermite_rule: need at least one node");
	RuleWithLineWeights r;
	r.nodes.assign(m, 0.0);
	r.weights.assign(m, 0.0);
	r.line_weights.assign(m, 0.0);

	const int half = (m + 1) / 2;
	std::vector<double> roots(half);
	double z = 0.0;
	for (int i = 0; i < half; ++i)
	{
		// initial guesses for the largest roots first (Stroud-Secrest style)
		if (i == 0)
			z = std::sqrt(2.0 * m + 1.0) - 1.85575 * std::pow(2.0 * m + 1.0, -1.0 / 6.0);
		else if (i == 1)
			z -= 1.14 * std::pow(double(m), 0.426) / z;
		else if (i == 2)
			z = 1.86 * z - 0.86 * roots[0];
		else if (i == 3)
			z = 1.91 * z - 0.91 * roots[1];
		else
			z = 2.0 * z - roots[i - 2];

		if (m % 2 == 1 && i == half - 1)
		{
			roots[i] = 0.0;
			continue;
		}
		bool converged = false;
		for (int it = 0; it < 200; ++it)
		{
			double hm, hm1, sc;
			top_pair(m, z, hm, hm1, sc);
			double deriv = std::sqrt(2.0 * m) * hm1 - z * hm;
			double dz = hm / deriv;
			z -= dz;
			if (std::abs(dz) <= 4e-16 * std::max(1.0, std::abs(z)))
			{
				converged = true;
				break;
			}
		}
		if (!converged || !std::isfinite(z))
			throw std::runtime_error("gauss_hermite_rule: Newton iteration failed for root " +
			                         std::to_string(i) + " of " + std::to_string(m));
		if (i > 0 && !(z < roots[i - 1]))
			throw std::runtime_error("gauss_hermite_rule: root " + std::to_string(i) +
			                         " coincides with a previous root (M=" + std::to_string(m) + ")");
		roots[i] = z;
	}

	for (int i = 0; i < half; ++i)
	{
		double x = roots[i];
		double hm, hm1, sc;
		top_pair(m, x, hm, hm1, sc);
		// W = 1 / (m h_{m-1}(x)^2); rule weight w = W exp(-x^2)
		double log_h = std::log(std::abs(hm1)) + sc - 0.5 * x * x;
		double log_line = -std::log(double(m)) - 2.0 * log_h;
		double line = std::exp(log_line);
		double w = std::exp(log_line - x * x);
		int hi = m - 1 - i;
		r.nodes[hi] = x;
		r.nodes[i] = -x;
		r.line_weights[hi] = r.line_weights[i] = line;
		r.weights[hi] = r.weights[i] = w;
	}
	return r;
}

} // namespace

QuadratureRule gauss_hermite_rule(int m)
{
	auto r = build_rule(m);
	return {std::move(r.nodes), std::move(r.weights)};
}

BasisTable::BasisTable(int deg_max, GridWeight weight, int nodes) : deg_max_(deg_max), weight_(weight)
{
	if (deg_max < 0)
		throw std::invalid_argument("BasisTable: negative degree");
	int min_nodes = weight == GridWeight::gauss ? 2 * deg_max + 1 : 4 * deg_max + 1;
	m_ = nodes > 0 ? nodes : min_nodes;
	if (m_ < 1)
		throw std::invalid_argument("BasisTable: need at least one node");

	auto rule = build_rule(m_);
	x_ = rule.nodes;
	w_ = rule.weights;
	lw_ = rule.line_weights;
	if (weight == GridWeight::gauss2)
	{
		for (int j = 0; j < m_; ++j)
		{
			x_[j] /= std::numbers::sqrt2;
			lw_[j] /= std::numbers::sqrt2;
		}
	}

	hvals_.assign(static_cast<std::size_t>(deg_max_ + 1) * m_, 0.0);
	whvals_.assign(hvals_.size(), 0.0);
	for (int j = 0; j < m_; ++j)
	{
		double x = x_[j];
		scaled_recurrence(deg_max_, x, [&](int n, double v, double s) {
			double hv = assemble(v, s, x);
			hvals_[static_cast<std::size_t>(n) * m_ + j] = hv;
			whvals_[static_cast<std::size_t>(n) * m_ + j] = lw_[j] * hv;
		});
	}
}

double BasisTable::integrate(std::span<const double> grid) const
{
	if (grid.size() != grid_size())
		throw std::invalid_argument("BasisTable::integrate: grid size mismatch");
	double total = 0.0;
	for (int i = 0; i < m_; ++i)
	{
		double row = 0.0;
		const double* g = grid.data() + static_cast<std::size_t>(i) * m_;
		for (int j = 0; j < m_; ++j)
			row += lw_[j] * g[j];
		total += lw_[i] * row;
	}
	return total;
}

SpectralField SpectralField::basis_vector(int deg_max, MultiIndex k, cplx value)
{
	SpectralField f(deg_max);
	f.at(k) = value;
	return f;
}

double SpectralField::norm_sq() const
{
	double s = 0.0;
	for (auto const& c : c_)
		s += std::norm(c);
	return s;
}

SpectralField SpectralField::resized(int deg) const
{
	SpectralField out(deg);
	std::size_t n = std::min(out.size(), size());
	std::copy_n(c_.begin(), n, out.c_.begin());
	return out;
}

SpectralField& SpectralField::operator+=(const SpectralField& o)
{
	if (o.deg_ != deg_)
		throw std::invalid_argument("SpectralField: degree mismatch");
	for (std::size_t i = 0; i < c_.size(); ++i)
		c_[i] += o.c_[i];
	return *this;
}

SpectralField& SpectralField::operator-=(const SpectralField& o)
{
	if (o.deg_ != deg_)
		throw std::invalid_argument("SpectralField: degree mismatch");
	for (std::size_t i = 0; i < c_.size(); ++i)
		c_[i] -= o.c_[i];
	return *this;
}

SpectralField& SpectralField::operator*=(cplx a)
{
	for (auto& c : c_)
		c *= a;
	return *this;
}

GridField synthesize(const SpectralField& f, const BasisTable& bt)
{
	const int deg = f.deg_max();
	if (deg > bt.deg_max())
		throw std::invalid_argument("synthesize: field degree exceeds basis table");
	const int m = bt.nodes();

	// t(k1, j) = sum_{k2} c(k1,k2) h_{k2}(x_j)
	std::vector<cplx> t(static_cast<std::size_t>(deg + 1) * m, cplx{});
	for (int k1 = 0; k1 <= deg; ++k1)
	{
		cplx* row = t.data() + static_cast<std::size_t>(k1) * m;
		for (int k2 = 0; k1 + k2 <= deg; ++k2)
		{
			cplx c = f.at({k1, k2});
			if (c == cplx{})
				continue;
			auto h = bt.hrow(k2);
			for (int j = 0; j < m; ++j)
				row[j] += c * h[j];
		}
	}

	GridField g(m);
	for (int k1 = 0; k1 <= deg; ++k1)
	{
		auto h = bt.hrow(k1);
		const cplx* row = t.data() + static_cast<std::size_t>(k1) * m;
		for (int i = 0; i < m; ++i)
		{
			double a = h[i];
			if (a == 0.0)
				continue;
			cplx* out = g.values.data() + static_cast<std::size_t>(i) * m;
			for (int j = 0; j < m; ++j)
				out[j] += a * row[j];
		}
	}
	return g;
}

namespace {

template <class T>
SpectralField analyze_impl(std::span<const T> values, int m, const BasisTable& bt, int deg)
{
	if (deg > bt.deg_max())
		throw std::invalid_argument("analyze: degree exceeds basis table");
	if (m != bt.nodes())
		throw std::invalid_argument("analyze: grid does not match basis table");

	// a(k1, j) = sum_i W_i h_{k1}(x_i) g(i, j)
	std::vector<T> a(static_cast<std::size_t>(deg + 1) * m, T{});
	for (int k1 = 0; k1 <= deg; ++k1)
	{
		auto wh = bt.whrow(k1);
		T* row = a.data() + static_cast<std::size_t>(k1) * m;
		for (int i = 0; i < m; ++i)
		{
			double w = wh[i];
			if (w == 0.0)
				continue;
			const T* g = values.data() + static_cast<std::size_t>(i) * m;
			for (int j = 0; j < m; ++j)
				row[j] += w * g[j];
		}
	}

	SpectralField out(deg);
	for (int k1 = 0; k1 <= deg; ++k1)
	{
		const T* row = a.data() + static_cast<std::size_t>(k1) * m;
		for (int k2 = 0; k1 + k2 <= deg; ++k2)
		{
			auto wh = bt.whrow(k2);
			T s{};
			for (int j = 0; j < m; ++j)
				s += wh[j] * row[j];
			out.at({k1, k2}) = s;
		}
	}
	return out;
}

template <class G>
double lp_norm_impl(const G& g, double p, const BasisTable& bt)
{
	if (g.m != bt.nodes())
		throw std::invalid_argument("lp_norm: grid does not match basis table");
	if (!(p >= 1.0))
		throw std::invalid_argument("lp_norm: p must be >= 1");
	if (std::isinf(p))
	{
		double mx = 0.0;
		for (auto const& v : g.values)
			mx = std::max(mx, std::abs(v));
		return mx;
	}
	std::vector<double> pw(g.values.size());
	for (std::size_t i = 0; i < pw.size(); ++i)
	{
		double a = std::abs(g.values[i]);
		pw[i] = (p == 2.0) ? a * a : (p == 4.0 ? (a * a) * (a * a) : std::pow(a, p));
	}
	double integral = bt.integrate(pw);
	return std::pow(std::max(integral, 0.0), 1.0 / p);
}

} // namespace

SpectralField analyze(const GridField& g, const BasisTable& bt, int deg)
{
	return analyze_impl<cplx>(g.values, g.m, bt, deg);
}

SpectralField analyze(const RealGrid& g, const BasisTable& bt, int deg)
{
	return analyze_impl<double>(g.values, g.m, bt, deg);
}

double lp_norm(const GridField& g, double p, const BasisTable& bt) { return lp_norm_impl(g, p, bt); }
double lp_norm(const RealGrid& g, double p, const BasisTable& bt) { return lp_norm_impl(g, p, bt); }

SpectralField apply_H_power(SpectralField f, double s)
{
	if (s == 0.0)
		return f;
	for (int d = 0; d <= f.deg_max(); ++d)
	{
		double mult = std::pow(lambda_sq(d), 0.5 * s);
		for (int k2 = 0; k2 <= d; ++k2)
			f.at({d - k2, k2}) *= mult;
	}
	return f;
}

double sobolev_norm(const SpectralField& f, double s, double p, const BasisTable& bt)
{
	return lp_norm(synthesize(apply_H_power(f, s), bt), p, bt);
}

} // namespace sgpe
