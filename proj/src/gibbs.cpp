#include "sgpe/gibbs.hpp"

#include "sgpe/gauss_field.hpp"
#include "sgpe/parallel.hpp"

#include <cmath>
#include <stdexcept>

namespace sgpe {

GibbsTarget::GibbsTarget(int level, GibbsOptions options, int nodes)
    : level_(level), opts_(options), bt_(level, GridWeight::gauss2, nodes)
{
	if (level < 0)
		throw std::invalid_argument("GibbsTarget: negative level");
	rho_ = opts_.counterterm ? rho_N(level, bt_) : zero_renorm(level, bt_);
}

GridField GibbsTarget::field(const SpectralField& y) const
{
	if (y.deg_max() != level_)
		throw std::invalid_argument("GibbsTarget: field is not in E_N");
	return synthesize(opts_.sn_inside ? apply_SN(y, level_) : y, bt_);
}

double hamiltonian_tilde(const SpectralField& y, const GibbsTarget& target)
{
	double quad = 0.0;
	for (std::size_t i = 0; i < y.size(); ++i)
		quad += mode_at(i).eigenvalue_sq() * std::norm(y[i]);
	quad *= 0.5;
	if (!target.options().quartic)
		return quad;
	GridField v = target.field(y);
	const auto& r2 = target.rho().rho_sq.values;
	RealGrid integrand(v.m);
	for (std::size_t n = 0; n < v.values.size(); ++n)
	{
		double a = std::norm(v.values[n]);
		integrand.values[n] = 0.25 * a * a - 2.0 * r2[n] * a + 2.0 * r2[n] * r2[n];
	}
	return quad + target.bt().integrate(integrand.values);
}

SpectralField grad_hamiltonian(const SpectralField& y, const GibbsTarget& target)
{
	SpectralField g = y;
	for (std::size_t i = 0; i < g.size(); ++i)
		g[i] *= mode_at(i).eigenvalue_sq();
	if (!target.options().quartic)
		return g;
	GridField v = target.field(y);
	const auto& r2 = target.rho().rho_sq.values;
	for (std::size_t n = 0; n < v.values.size(); ++n)
		v.values[n] *= std::norm(v.values[n]) - 4.0 * r2[n];
	SpectralField q = analyze(v, target.bt(), target.level());
	if (target.options().sn_inside)
		q = apply_SN(std::move(q), target.level());
	return g += q;
}

ChainState make_chain(const SpectralField& y0, const GibbsTarget& target, double eps)
{
	ChainState c;
	c.y = y0;
	c.energy = hamiltonian_tilde(y0, target);
	c.grad = grad_hamiltonian(y0, target);
	c.eps = eps;
	return c;
}

namespace {

cplx real_pair_normal(RngStream& rng)
{
	double a = rng.normal();
	return {a, rng.normal()};
}

/// log q(to | from) up to a constant for the preconditioned Langevin proposal
double log_proposal(const SpectralField& to, const SpectralField& from, const SpectralField& grad_from, double eps)
{
	double s = 0.0;
	for (std::size_t i = 0; i < to.size(); ++i)
	{
		double c = 1.0 / mode_at(i).eigenvalue_sq();
		cplx mean = from[i] - 0.5 * eps * eps * c * grad_from[i];
		s += std::norm(to[i] - mean) / c;
	}
	return -s / (2.0 * eps * eps);
}

/// accept with probability min(1, exp(log_ratio)); returns that probability
double metropolis(double log_ratio, RngStream& rng, bool& accept)
{
	double a = std::isfinite(log_ratio) ? std::min(1.0, std::exp(log_ratio)) : 0.0;
	accept = rng.uniform() < a;
	return a;
}

} // namespace

ChainState mala_step(ChainState chain, const GibbsTarget& target, RngStream& rng)
{
	if (!(chain.eps > 0.0))
		throw std::invalid_argument("mala_step: step size must be positive");
	const double eps = chain.eps;
	SpectralField prop(chain.y.deg_max());
	for (std::size_t i = 0; i < prop.size(); ++i)
	{
		double c = 1.0 / mode_at(i).eigenvalue_sq();
		prop[i] = chain.y[i] - 0.5 * eps * eps * c * chain.grad[i] + eps * std::sqrt(c) * real_pair_normal(rng);
	}
	double e1 = hamiltonian_tilde(prop, target);
	SpectralField g1 = grad_hamiltonian(prop, target);
	double log_ratio = chain.energy - e1 + log_proposal(chain.y, prop, g1, eps) -
	                   log_proposal(prop, chain.y, chain.grad, eps);
	bool accept = false;
	chain.last_accept = metropolis(log_ratio, rng, accept);
	++chain.proposed;
	if (accept)
	{
		chain.y = std::move(prop);
		chain.energy = e1;
		chain.grad = std::move(g1);
		++chain.accepted;
	}
	return chain;
}

ChainState hmc_step(ChainState chain, const GibbsTarget& target, int leapfrog, RngStream& rng)
{
	if (!(chain.eps > 0.0) || leapfrog < 1)
		throw std::invalid_argument("hmc_step: need eps > 0 and at least one leapfrog step");
	const double eps = chain.eps;
	const std::size_t n = chain.y.size();
	SpectralField p(chain.y.deg_max());
	double k0 = 0.0;
	for (std::size_t i = 0; i < n; ++i)
	{
		double l = mode_at(i).eigenvalue();
		p[i] = l * real_pair_normal(rng);
		k0 += 0.5 * std::norm(p[i]) / (l * l);
	}
	SpectralField y = chain.y, g = chain.grad;
	for (int s = 0; s < leapfrog; ++s)
	{
		for (std::size_t i = 0; i < n; ++i)
		{
			p[i] -= 0.5 * eps * g[i];
			y[i] += eps * p[i] / mode_at(i).eigenvalue_sq();
		}
		g = grad_hamiltonian(y, target);
		for (std::size_t i = 0; i < n; ++i)
			p[i] -= 0.5 * eps * g[i];
	}
	double k1 = 0.0;
	for (std::size_t i = 0; i < n; ++i)
		k1 += 0.5 * std::norm(p[i]) / mode_at(i).eigenvalue_sq();
	double e1 = hamiltonian_tilde(y, target);
	bool accept = false;
	chain.last_accept = metropolis(chain.energy + k0 - e1 - k1, rng, accept);
	++chain.proposed;
	if (accept)
	{
		chain.y = std::move(y);
		chain.energy = e1;
		chain.grad = std::move(g);
		++chain.accepted;
	}
	return chain;
}

DualAveraging::DualAveraging(double eps0, double target) : mu_(std::log(10.0 * eps0)), target_(target)
{
	if (!(eps0 > 0.0))
		throw std::invalid_argument("DualAveraging: initial step must be positive");
	log_eps_bar_ = std::log(eps0);
}

double DualAveraging::update(double accept_prob)
{
	constexpr double gamma = 0.05, t0 = 10.0, kappa = 0.75;
	++t_;
	double t = static_cast<double>(t_);
	hbar_ = (1.0 - 1.0 / (t + t0)) * hbar_ + (target_ - accept_prob) / (t + t0);
	double log_eps = mu_ - std::sqrt(t) / gamma * hbar_;
	double eta = std::pow(t, -kappa);
	log_eps_bar_ = eta * log_eps + (1.0 - eta) * log_eps_bar_;
	return std::exp(log_eps);
}

std::vector<Observable> standard_observables(int level)
{
	std::vector<Observable> obs;
	obs.push_back({"one", [](const SpectralField&, const GibbsTarget&) { return 1.0; }});
	obs.push_back({"c00_sq", [](const SpectralField& y, const GibbsTarget&) { return std::norm(y.at({0, 0})); }});
	if (level >= 1)
	{
		obs.push_back({"c10_sq", [](const SpectralField& y, const GibbsTarget&) { return std::norm(y.at({1, 0})); }});
		obs.push_back({"c01_sq", [](const SpectralField& y, const GibbsTarget&) { return std::norm(y.at({0, 1})); }});
	}
	obs.push_back({"quartic", [](const SpectralField& y, const GibbsTarget& t) {
		               GridField v = t.field(y);
		               RealGrid a(v.m);
		               for (std::size_t n = 0; n < v.values.size(); ++n)
			               a.values[n] = std::norm(v.values[n]) * std::norm(v.values[n]);
		               return t.bt().integrate(a.values);
	               }});
	obs.push_back({"h1", [](const SpectralField& y, const GibbsTarget&) {
		               double s = 0.0;
		               for (std::size_t i = 0; i < y.size(); ++i)
			               s += mode_at(i).eigenvalue_sq() * std::norm(y[i]);
		               return s;
	               }});
	return obs;
}

ChainRun run_chains(const GibbsTarget& target, const ChainConfig& cfg, const std::vector<Observable>& obs,
                    std::size_t keep_trace)
{
	if (cfg.chains < 1 || cfg.samples < 4 || cfg.burn_in < 0 || cfg.thin < 1)
		throw std::invalid_argument("run_chains: need chains >= 1, samples >= 4, burn_in >= 0, thin >= 1");
	struct One
	{
		std::vector<std::vector<double>> values;
		SpectralField last;
		double acceptance = 0.0, eps = 0.0;
		std::vector<SpectralField> trace;
	};
	auto runs = parallel_map(static_cast<std::size_t>(cfg.chains), [&](std::size_t c) {
		RngStream rng(cfg.seed, 0x6c00 + c);
		// dispersed start: a draw from the Gaussian reference
		ChainState st = make_chain(sample_mu_N(target.level(), rng), target, cfg.eps0);
		auto step = [&](ChainState s) {
			return cfg.sampler == Sampler::mala ? mala_step(std::move(s), target, rng)
			                                    : hmc_step(std::move(s), target, cfg.leapfrog, rng);
		};
		DualAveraging da(cfg.eps0);
		for (long n = 0; n < cfg.burn_in; ++n)
		{
			st = step(std::move(st));
			st.eps = da.update(st.last_accept);
		}
		if (cfg.burn_in > 0)
			st.eps = da.final_eps();
		st.proposed = st.accepted = 0;
		One out;
		out.values.assign(obs.size(), std::vector<double>(cfg.samples));
		for (long n = 0; n < cfg.samples; ++n)
		{
			for (int k = 0; k < cfg.thin; ++k)
				st = step(std::move(st));
			for (std::size_t o = 0; o < obs.size(); ++o)
				out.values[o][n] = obs[o].eval(st.y, target);
			if (c == 0 && out.trace.size() < keep_trace)
				out.trace.push_back(st.y);
		}
		out.last = st.y;
		out.acceptance = st.acceptance();
		out.eps = st.eps;
		return out;
	});
	ChainRun r;
	r.values.assign(obs.size(), {});
	for (auto& one : runs)
	{
		for (std::size_t o = 0; o < obs.size(); ++o)
			r.values[o].push_back(std::move(one.values[o]));
		r.final_states.push_back(std::move(one.last));
		r.acceptance.push_back(one.acceptance);
		r.eps.push_back(one.eps);
		if (!one.trace.empty())
			r.trace = std::move(one.trace);
	}
	return r;
}

StepOptions dynamics_options_for(const GibbsOptions& options)
{
	if (!options.sn_inside)
		throw std::invalid_argument("the Galerkin dynamics place S_N inside the nonlinearity; sn_inside must be on");
	StepOptions s;
	s.noise = NoiseMode::ou;
	s.renormalize = options.counterterm;
	if (!options.quartic)
		s.terms = {false, false, false, false};
	return s;
}

FdReport fluctuation_dissipation_compare(const PropagatorParams& params, int level, const GibbsOptions& options,
                                         const FdConfig& cfg, const std::vector<Observable>& obs)
{
	params.validate();
	if (cfg.dyn_paths < 1 || !(cfg.dt > 0.0) || !(cfg.T > cfg.burn_in) || cfg.record_every < 1)
		throw std::invalid_argument("fluctuation_dissipation_compare: bad dynamics budget");
	GibbsTarget target(level, options);
	ChainRun chains = run_chains(target, cfg.chain, obs);
	GalerkinSetup setup = GalerkinSetup::make(level, params, dynamics_options_for(options), target.bt().nodes());

	struct Path
	{
		std::vector<std::vector<double>> values;
		bool blown = false;
	};
	const long steps = std::lround(cfg.T / cfg.dt);
	const long burn = std::lround(cfg.burn_in / cfg.dt);
	auto paths = parallel_map(static_cast<std::size_t>(cfg.dyn_paths), [&](std::size_t p) {
		RngStream init(cfg.chain.seed ^ 0xd1a5e5ULL, 2 * p), noise(cfg.chain.seed ^ 0xd1a5e5ULL, 2 * p + 1);
		ShiftedState s = make_shifted_state(SpectralField(level), setup, init);
		Path out;
		out.values.assign(obs.size(), {});
		try
		{
			for (long n = 1; n <= steps; ++n)
			{
				SpectralField x = step_galerkin_X(s, cfg.dt, setup, noise);
				if (n > burn && (n - burn) % cfg.record_every == 0)
					for (std::size_t o = 0; o < obs.size(); ++o)
						out.values[o].push_back(obs[o].eval(x, target));
			}
		}
		catch (const NonfiniteStateError&)
		{
			out.blown = true;
		}
		return out;
	});

	FdReport rep;
	rep.acceptance = chains.acceptance;
	for (auto& p : paths)
		rep.dyn_blown_up = rep.dyn_blown_up || p.blown;
	for (std::size_t o = 0; o < obs.size(); ++o)
	{
		FdRow row;
		row.observable = obs[o].name;
		std::vector<stats::Estimate> mc, dy;
		for (auto& c : chains.values[o])
			mc.push_back(stats::batch_means(c));
		for (auto& p : paths)
			dy.push_back(stats::batch_means(p.values[o]));
		row.mcmc = stats::pool(mc);
		row.dyn = stats::pool(dy);
		row.z = stats::z_score(row.mcmc, row.dyn);
		row.rhat = cfg.chain.chains > 1 ? stats::split_rhat(chains.values[o]) : 1.0;
		rep.max_rhat = std::max(rep.max_rhat, row.rhat);
		rep.max_abs_z = std::max(rep.max_abs_z, std::abs(row.z));
		rep.rows.push_back(std::move(row));
	}
	rep.inconclusive = rep.max_rhat > cfg.rhat_limit || rep.dyn_blown_up;
	return rep;
}

} // namespace sgpe
