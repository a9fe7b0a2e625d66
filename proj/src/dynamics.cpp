#include "sgpe/dynamics.hpp"

#include "sgpe/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace sgpe {

void PropagatorParams::validate() const
{
	if (!(gamma1 > 0.0) || !std::isfinite(gamma1))
		throw std::invalid_argument("gamma1 must be positive and finite");
	if (!std::isfinite(gamma2))
		throw std::invalid_argument("gamma2 must be finite");
}

SpectralField apply_semigroup(SpectralField f, double t, const PropagatorParams& params)
{
	if (!(t >= 0.0))
		throw std::invalid_argument("apply_semigroup: t must be nonnegative");
	if (t == 0.0)
		return f;
	for (int d = 0; d <= f.deg_max(); ++d)
	{
		cplx mult = std::exp(-lambda_sq(d) * params.rate() * t);
		for (int k2 = 0; k2 <= d; ++k2)
			f.at({d - k2, k2}) *= mult;
	}
	return f;
}

double mehler_time_limit(const PropagatorParams& params)
{
	if (params.gamma2 == 0.0)
		return kInfNorm;
	return std::numbers::pi / (4.0 * std::abs(params.gamma2));
}

cplx mehler_kernel_1d(double x, double y, double t, const PropagatorParams& params)
{
	cplx a = 2.0 * t * params.rate();
	cplx delta = 0.5 / std::sinh(a);
	// beta - delta = (cosh - 1) / (2 sinh) = tanh(a/2) / 2
	cplx bd = 0.5 * std::tanh(0.5 * a);
	return std::sqrt(delta / std::numbers::pi) * std::exp(-bd * (x * x + y * y) - delta * (x - y) * (x - y));
}

GridField mehler_apply(const GridField& g, double t, const PropagatorParams& params, const BasisTable& bt)
{
	params.validate();
	if (!(t > 0.0) || !(t < mehler_time_limit(params)))
	{
		std::ostringstream msg;
		msg << "mehler_apply: t = " << t << " outside (0, pi/(4|gamma2|)) = (0, " << mehler_time_limit(params) << ")";
		throw std::invalid_argument(msg.str());
	}
	const int m = bt.nodes();
	if (g.m != m)
		throw std::invalid_argument("mehler_apply: grid does not match basis table");
	auto x = bt.nodes_1d();
	auto w = bt.line_weights();
	std::vector<cplx> a(static_cast<std::size_t>(m) * m);
	for (int i = 0; i < m; ++i)
		for (int j = 0; j < m; ++j)
			a[static_cast<std::size_t>(i) * m + j] = mehler_kernel_1d(x[i], x[j], t, params) * w[j];

	// tmp(i, b) = sum_a A(i, a) g(a, b); out(i, j) = sum_b A(j, b) tmp(i, b)
	GridField tmp(m), out(m);
	for (int i = 0; i < m; ++i)
		for (int k = 0; k < m; ++k)
		{
			cplx aik = a[static_cast<std::size_t>(i) * m + k];
			for (int b = 0; b < m; ++b)
				tmp(i, b) += aik * g(k, b);
		}
	for (int i = 0; i < m; ++i)
		for (int j = 0; j < m; ++j)
		{
			cplx s{};
			for (int b = 0; b < m; ++b)
				s += a[static_cast<std::size_t>(j) * m + b] * tmp(i, b);
			out(i, j) = s;
		}
	return out;
}

SmoothingSeries smoothing_probe(double s, double p, int deg, std::span<const double> times, int trials,
                                std::uint64_t seed, const PropagatorParams& params)
{
	if (times.size() < 2 || trials < 1)
		throw std::invalid_argument("smoothing_probe: need two times and one trial");
	BasisTable bt(deg, GridWeight::gauss2);
	SmoothingSeries out;
	out.times.assign(times.begin(), times.end());
	out.ratios.assign(times.size(), 0.0);
	RngStream rng(seed, 0x5300);
	for (int trial = 0; trial < trials; ++trial)
	{
		SpectralField f(deg);
		for (std::size_t i = 0; i < f.size(); ++i)
			f[i] = rng.complex_normal();
		double base = lp_norm(synthesize(f, bt), p, bt);
		for (std::size_t n = 0; n < times.size(); ++n)
		{
			double r = std::pow(times[n], 0.5 * s) * sobolev_norm(apply_semigroup(f, times[n], params), s, p, bt) / base;
			out.ratios[n] = std::max(out.ratios[n], r);
		}
	}
	std::vector<double> lx(times.size()), ly(times.size());
	for (std::size_t n = 0; n < times.size(); ++n)
	{
		lx[n] = std::log(times[n]);
		ly[n] = std::log(out.ratios[n]);
	}
	out.slope = stats::least_squares(lx, ly).slope;
	return out;
}

cplx phi1(cplx z)
{
	if (std::abs(z) < 1e-6)
		return 1.0 + z / 2.0 + z * z / 6.0;
	// e^z - 1 without cancellation
	double x = z.real(), y = z.imag(), sh = std::sin(0.5 * y);
	cplx em1(std::expm1(x) * std::cos(y) - 2.0 * sh * sh, std::exp(x) * std::sin(y));
	return em1 / z;
}

cplx exp_euler_mode(cplx u, cplx f, double lambda_sq, cplx rate, double dt)
{
	cplx z = -lambda_sq * rate * dt;
	return std::exp(z) * u - rate * dt * phi1(z) * f;
}

SpectralField nonlinearity_F(const SpectralField& u, const WickBundle& wick, int level, const BasisTable& bt,
                             NonlinearityTerms terms)
{
	if (wick.level != level)
		throw std::invalid_argument("nonlinearity_F: Wick bundle level mismatch");
	if (level > bt.deg_max())
		throw std::invalid_argument("nonlinearity_F: level exceeds basis table degree");
	const int m = bt.nodes();
	if (wick.W(0, 0).m != m)
		throw std::invalid_argument("nonlinearity_F: Wick bundle grid does not match basis table");

	GridField v = synthesize(apply_SN(u.resized(level), level), bt);
	GridField f(m);
	const cplx I{0.0, 1.0};
	const auto& zr = wick.W(1, 0).values;
	const auto& zi = wick.W(0, 1).values;
	const auto& w20 = wick.W(2, 0).values;
	const auto& w02 = wick.W(0, 2).values;
	const auto& w11 = wick.W(1, 1).values;
	const auto& w30 = wick.W(3, 0).values;
	const auto& w03 = wick.W(0, 3).values;
	const auto& w12 = wick.W(1, 2).values;
	const auto& w21 = wick.W(2, 1).values;
	for (std::size_t n = 0; n < f.values.size(); ++n)
	{
		cplx x = v.values[n];
		double vr = x.real(), vi = x.imag(), a2 = std::norm(x);
		cplx acc{};
		if (terms.f0)
			acc += a2 * x;
		if (terms.f1)
			acc += cplx(zr[n], zi[n]) * a2 + 2.0 * zr[n] * vr * x + 2.0 * zi[n] * vi * x;
		if (terms.f2)
			acc += w20[n] * cplx(3.0 * vr, vi) + w02[n] * cplx(vr, 3.0 * vi) + 2.0 * w11[n] * cplx(vi, vr);
		if (terms.f3)
			acc += w30[n] + I * w03[n] + w12[n] + I * w21[n];
		f.values[n] = acc;
	}
	return apply_SN(analyze(f, bt, level), level);
}

GalerkinSetup GalerkinSetup::make(int level, PropagatorParams params, StepOptions options, int nodes)
{
	params.validate();
	if (level < 0)
		throw std::invalid_argument("GalerkinSetup: negative level");
	GalerkinSetup s{level, params, options, BasisTable(level, GridWeight::gauss2, nodes), {}};
	bool counterterms = options.renormalize && options.noise != NoiseMode::off;
	s.rho = counterterms ? rho_N(level, s.bt) : zero_renorm(level, s.bt);
	return s;
}

namespace {

WickBundle bundle_for(const OUState& z, const GalerkinSetup& setup)
{
	return wick_bundle(z, setup.level, setup.bt, setup.rho);
}

[[noreturn]] void report_nonfinite(const ShiftedState& s, double dt, std::size_t bad)
{
	std::ostringstream msg;
	MultiIndex k = mode_at(bad);
	double zmax = 0.0;
	for (cplx c : s.z.coeffs.coeffs())
		zmax = std::max(zmax, std::abs(c));
	msg << "nonfinite state after step at t = " << s.t << " (dt = " << dt << ", step " << s.z.step
	    << "): mode (" << k.k1 << "," << k.k2 << ") = " << s.u[bad] << ", max |Z_k| = " << zmax;
	throw NonfiniteStateError(msg.str());
}

} // namespace

ShiftedState make_shifted_state(const SpectralField& u0, const OUState& z0, const GalerkinSetup& setup)
{
	ShiftedState s;
	s.u = u0.resized(setup.level);
	s.z = z0;
	s.z.coeffs = z0.coeffs.resized(setup.level);
	s.t = z0.t;
	s.wick = bundle_for(s.z, setup);
	return s;
}

ShiftedState make_shifted_state(const SpectralField& u0, const GalerkinSetup& setup, RngStream& rng)
{
	OUState z;
	if (setup.options.noise == NoiseMode::off)
		z.coeffs = SpectralField(setup.level);
	else
		z = ou_init_stationary(setup.noise_params(), setup.level, rng);
	return make_shifted_state(u0, z, setup);
}

ShiftedState step_shifted(ShiftedState state, double dt, const GalerkinSetup& setup, const RngStream& rng)
{
	if (!(dt > 0.0))
		throw std::invalid_argument("step_shifted: dt must be positive");
	if (state.u.deg_max() != setup.level)
		throw std::invalid_argument("step_shifted: state level mismatch");
	const cplx rate = setup.params.rate();
	SpectralField f = setup.options.terms.any()
	                      ? nonlinearity_F(state.u, state.wick, setup.level, setup.bt, setup.options.terms)
	                      : SpectralField(setup.level);
	for (int d = 0; d <= setup.level; ++d)
	{
		double l2 = lambda_sq(d);
		cplx z = -l2 * rate * dt;
		cplx e = std::exp(z);
		cplx g = rate * dt * phi1(z);
		for (int k2 = 0; k2 <= d; ++k2)
		{
			std::size_t i = mode_index({d - k2, k2});
			state.u[i] = e * state.u[i] - g * f[i];
		}
	}
	state.t += dt;
	for (std::size_t i = 0; i < state.u.size(); ++i)
		if (!std::isfinite(state.u[i].real()) || !std::isfinite(state.u[i].imag()))
			report_nonfinite(state, dt, i);

	switch (setup.options.noise)
	{
	case NoiseMode::ou:
		state.z = ou_step(std::move(state.z), dt, setup.noise_params(), rng);
		state.wick = bundle_for(state.z, setup);
		break;
	case NoiseMode::frozen:
	case NoiseMode::off:
		state.z.t += dt;
		++state.z.step;
		break;
	}
	return state;
}

SpectralField step_galerkin_X(ShiftedState& state, double dt, const GalerkinSetup& setup, const RngStream& rng)
{
	state = step_shifted(std::move(state), dt, setup, rng);
	return state.u + state.z.coeffs;
}

SpectralField galerkin_drift(const SpectralField& x, const GalerkinSetup& setup)
{
	GridField zero(setup.bt.nodes());
	WickBundle w = wick_bundle_from_grid(zero, setup.rho);
	w.level = setup.level;
	SpectralField f = nonlinearity_F(x, w, setup.level, setup.bt);
	SpectralField out = x.resized(setup.level);
	for (std::size_t i = 0; i < out.size(); ++i)
		out[i] = setup.params.rate() * (-mode_at(i).eigenvalue_sq() * out[i] - f[i]);
	return out;
}

// L^q decay -------------------------------------------------------------------

double lq_kappa(const PropagatorParams& params)
{
	return params.gamma2 == 0.0 ? kInfNorm : params.gamma1 / std::abs(params.gamma2);
}

double lq_q_limit(const PropagatorParams& params)
{
	double k = lq_kappa(params);
	if (std::isinf(k))
		return kInfNorm;
	return 2.0 + 2.0 * (k * k + k * std::sqrt(1.0 + k * k));
}

bool lq_admissible(double q, const PropagatorParams& params)
{
	return params.gamma2 == 0.0 || q < lq_q_limit(params);
}

double lq_delta(double q, const PropagatorParams& params)
{
	if (params.gamma2 == 0.0)
		return 1.0;
	double k = lq_kappa(params);
	return 1.0 - (q - 2.0) / (2.0 * (k * k + k * std::sqrt(1.0 + k * k)));
}

void check_lq_admissible(double q, const PropagatorParams& params)
{
	if (lq_admissible(q, params))
		return;
	std::ostringstream msg;
	msg << "q = " << q << " violates q < 2 + 2(κ²+κ√(1+κ²)) = " << lq_q_limit(params)
	    << " with κ = γ1/|γ2| = " << lq_kappa(params);
	throw PreconditionError(msg.str());
}

LqDecayReport lq_decay_run(const SpectralField& u0, const LqDecayConfig& cfg, const GalerkinSetup& setup)
{
	check_lq_admissible(cfg.q, setup.params);
	if (!(cfg.dt > 0.0) || !(cfg.T > 0.0) || cfg.ensemble < 1 || cfg.record_every < 1)
		throw std::invalid_argument("lq_decay_run: need dt > 0, T > 0, ensemble >= 1, record_every >= 1");
	const long steps = std::lround(cfg.T / cfg.dt);

	struct Path
	{
		std::vector<double> lq;
		bool blown = false;
	};
	auto paths = parallel_map(static_cast<std::size_t>(cfg.ensemble), [&](std::size_t p) {
		RngStream init(cfg.seed, 2 * p), noise(cfg.seed, 2 * p + 1);
		ShiftedState s = make_shifted_state(u0, setup, init);
		Path out;
		out.lq.push_back(std::pow(lp_norm(synthesize(s.u, setup.bt), cfg.q, setup.bt), cfg.q));
		try
		{
			for (long n = 1; n <= steps; ++n)
			{
				s = step_shifted(std::move(s), cfg.dt, setup, noise);
				if (n % cfg.record_every == 0)
					out.lq.push_back(std::pow(lp_norm(synthesize(s.u, setup.bt), cfg.q, setup.bt), cfg.q));
			}
		}
		catch (const NonfiniteStateError&)
		{
			out.blown = true;
		}
		return out;
	});

	LqDecayReport rep;
	rep.delta = lq_delta(cfg.q, setup.params);
	for (long n = 0; n <= steps; n += cfg.record_every)
		rep.times.push_back(n * cfg.dt);
	std::vector<double> tail_sups;
	for (auto& p : paths)
	{
		rep.blown_up.push_back(p.blown);
		double sup = p.blown ? kInfNorm : 0.0;
		for (std::size_t n = 0; n < p.lq.size(); ++n)
			if (rep.times[n] >= 0.5 * cfg.T)
				sup = std::max(sup, p.lq[n]);
		tail_sups.push_back(sup);
		rep.series.push_back(std::move(p.lq));
	}
	rep.c_hat = stats::quantile(tail_sups, 0.99);
	std::size_t pass = 0;
	for (std::size_t p = 0; p < rep.series.size(); ++p)
	{
		bool ok = !rep.blown_up[p];
		const auto& s = rep.series[p];
		for (std::size_t n = 0; ok && n < s.size(); ++n)
			ok = s[n] <= std::exp(-setup.params.gamma1 * rep.times[n] * rep.delta / 4.0) * s[0] + rep.c_hat;
		rep.within_envelope.push_back(ok);
		pass += ok;
	}
	rep.fraction = static_cast<double>(pass) / static_cast<double>(rep.series.size());
	return rep;
}

// Coupled stationary runs -----------------------------------------------------

RunRow measure(const SpectralField& u, double t, double q, double m, const GalerkinSetup& setup)
{
	RunRow r{};
	r.t = t;
	r.lq_q = std::pow(lp_norm(synthesize(u, setup.bt), q, setup.bt), q);
	double h1 = 0.0, hm = 0.0;
	for (std::size_t i = 0; i < u.size(); ++i)
	{
		double l2 = mode_at(i).eigenvalue_sq();
		h1 += l2 * std::norm(u[i]);
		hm += std::pow(l2, 1.0 / m) * std::norm(u[i]);
	}
	r.h1_sq = h1;
	r.h_inv_m_moment = std::pow(hm, m);
	r.l4_4 = std::pow(lp_norm(synthesize(apply_SN(u, setup.level), setup.bt), 4.0, setup.bt), 4.0);
	return r;
}

RunStats coupled_stationary_run(const CoupledConfig& cfg, const GalerkinSetup& setup)
{
	if (!(cfg.dt > 0.0) || !(cfg.T > cfg.burn_in) || cfg.burn_in < 0.0 || cfg.record_every < 1 || !(cfg.m > 0.0))
		throw std::invalid_argument("coupled_stationary_run: need dt > 0, 0 <= burn_in < T, m > 0");
	RngStream init(cfg.seed, 0), noise(cfg.seed, 1);
	ShiftedState s = make_shifted_state(SpectralField(setup.level), setup, init);
	const long steps = std::lround(cfg.T / cfg.dt);
	const long burn = std::lround(cfg.burn_in / cfg.dt);
	RunStats out;
	for (long n = 1; n <= steps; ++n)
	{
		try
		{
			s = step_shifted(std::move(s), cfg.dt, setup, noise);
		}
		catch (const NonfiniteStateError&)
		{
			out.blown_up = true;
		}
		if (!out.blown_up && std::sqrt(s.u.norm_sq()) > cfg.blowup_threshold)
			out.blown_up = true;
		if (out.blown_up)
		{
			RunRow r{};
			r.t = s.t;
			r.flags = 1;
			out.rows.push_back(r);
			break;
		}
		if (n > burn && (n - burn) % cfg.record_every == 0)
			out.rows.push_back(measure(s.u, s.t, cfg.q, cfg.m, setup));
	}
	if (!out.blown_up && out.rows.size() >= 20)
	{
		auto column = [&](auto member) {
			std::vector<double> v;
			v.reserve(out.rows.size());
			for (auto& r : out.rows)
				v.push_back(r.*member);
			return stats::batch_means(v);
		};
		out.h_inv_m_moment = column(&RunRow::h_inv_m_moment);
		out.h1_sq = column(&RunRow::h1_sq);
		out.l4_4 = column(&RunRow::l4_4);
	}
	out.final_u = s.u;
	out.final_z = s.z;
	return out;
}

} // namespace sgpe
