#include "sgpe/gibbs.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace sgpe;
using sgpe::testing::random_field;

namespace {

double grid_integral_rho4(const GibbsTarget& t)
{
	RealGrid g(t.bt().nodes());
	for (std::size_t n = 0; n < g.values.size(); ++n)
		g.values[n] = t.rho().rho_sq.values[n] * t.rho().rho_sq.values[n];
	return t.bt().integrate(g.values);
}

double dot_real(const SpectralField& a, const SpectralField& b)
{
	double s = 0.0;
	for (std::size_t i = 0; i < a.size(); ++i)
		s += a[i].real() * b[i].real() + a[i].imag() * b[i].imag();
	return s;
}

} // namespace

TEST_SUITE("gibbs")
{
	TEST_CASE("hamiltonian: constant term, eigen mode, Gaussian quartic integral")
	{
		GibbsTarget t(4);
		CHECK(hamiltonian_tilde(SpectralField(4), t) == doctest::Approx(2.0 * grid_integral_rho4(t)).epsilon(1e-14));
		CHECK(hamiltonian_tilde(SpectralField(4), t) > 0.0);

		GibbsTarget gauss(4, {false, true, true});
		cplx c{0.3, -1.2};
		CHECK(hamiltonian_tilde(SpectralField::basis_vector(4, {0, 0}, c), gauss) ==
		      doctest::Approx(std::norm(c)).epsilon(1e-15));

		// int h_00^4 = int pi^-2 exp(-2|x|^2) dx = 1/(2 pi)
		double oracle = testing::trapezoid([](double x) {
			double h = testing::hermite_function_explicit(0, x);
			return h * h * h * h;
		});
		CHECK(oracle * oracle == doctest::Approx(1.0 / (2.0 * std::numbers::pi)).epsilon(1e-12));
		for (int level : {0, 2, 5})
		{
			GibbsTarget q(level, {true, false, level == 0 ? false : true});
			double h = hamiltonian_tilde(SpectralField::basis_vector(level, {0, 0}), q);
			CHECK(h - 1.0 == doctest::Approx(0.25 * oracle * oracle).epsilon(1e-12));
			CHECK(h - 1.0 == doctest::Approx(1.0 / (8.0 * std::numbers::pi)).epsilon(1e-12));
		}
	}

	TEST_CASE("gradient: finite differences, zero field, quadratic part")
	{
		for (GibbsOptions o : {GibbsOptions{}, GibbsOptions{true, false, true}, GibbsOptions{true, true, false}})
		{
			GibbsTarget t(5, o);
			auto y = random_field(5, 3, 1.0);
			auto g = grad_hamiltonian(y, t);
			const double h = 1e-5;
			for (int k = 0; k < 20; ++k)
			{
				auto d = random_field(5, 100 + k);
				double fd = (hamiltonian_tilde(y + h * d, t) - hamiltonian_tilde(y - h * d, t)) / (2 * h);
				double an = dot_real(g, d);
				CHECK(std::abs(fd - an) <= 1e-6 * std::max(1.0, std::abs(an)));
			}
			auto g0 = grad_hamiltonian(SpectralField(5), t);
			CHECK(std::sqrt(g0.norm_sq()) < 1e-14);
		}
		GibbsTarget lin(5, {false, false, true});
		auto y = random_field(5, 8);
		auto g = grad_hamiltonian(y, lin);
		for (std::size_t i = 0; i < y.size(); ++i)
			CHECK(g[i] == mode_at(i).eigenvalue_sq() * y[i]);
	}

	TEST_CASE("gauge invariance of the renormalized quartic")
	{
		GibbsTarget t(6);
		auto y = random_field(6, 12, 1.0);
		double h0 = hamiltonian_tilde(y, t);
		for (double th : {0.3, 1.7, 3.1, -2.2})
		{
			auto r = std::polar(1.0, th) * y;
			CHECK(hamiltonian_tilde(r, t) == doctest::Approx(h0).epsilon(1e-13));
		}
	}

	TEST_CASE("gradient equals the Galerkin drift divided by -(g1 + i g2)")
	{
		const int level = 6;
		GibbsTarget t(level);
		for (PropagatorParams p : {PropagatorParams{1.0, 0.0}, PropagatorParams{0.2, 1.0}})
		{
			auto setup = GalerkinSetup::make(level, p);
			auto y = random_field(level, 31, 1.0);
			auto drift = galerkin_drift(y, setup);
			auto g = grad_hamiltonian(y, t);
			for (std::size_t i = 0; i < y.size(); ++i)
				CHECK(std::abs(drift[i] / -p.rate() - g[i]) < 1e-10);
		}
	}

	TEST_CASE("MALA on the Gaussian reference recovers mode variances 2/lambda^2")
	{
		const int level = 2;
		GibbsTarget t(level, {false, false, true});
		RngStream rng(7);
		ChainState c = make_chain(SpectralField(level), t, 1.2);
		const long n = 100000;
		std::vector<std::vector<double>> p(mode_count(level), std::vector<double>(n));
		for (long s = 0; s < n; ++s)
		{
			c = mala_step(std::move(c), t, rng);
			for (std::size_t i = 0; i < c.y.size(); ++i)
				p[i][s] = std::norm(c.y[i]);
		}
		CHECK(c.acceptance() > 0.3);
		for (std::size_t i = 0; i < p.size(); ++i)
		{
			auto e = stats::batch_means(p[i]);
			CHECK(std::abs(e.mean - 2.0 / mode_at(i).eigenvalue_sq()) <= 5.0 * e.se);
		}
	}

	TEST_CASE("HMC on the Gaussian reference recovers mode variances")
	{
		const int level = 2;
		GibbsTarget t(level, {false, false, true});
		RngStream rng(8);
		ChainState c = make_chain(SpectralField(level), t, 0.3);
		const long n = 20000;
		std::vector<std::vector<double>> p(mode_count(level), std::vector<double>(n));
		for (long s = 0; s < n; ++s)
		{
			c = hmc_step(std::move(c), t, 5, rng);
			for (std::size_t i = 0; i < c.y.size(); ++i)
				p[i][s] = std::norm(c.y[i]);
		}
		CHECK(c.acceptance() > 0.8);
		for (std::size_t i = 0; i < p.size(); ++i)
		{
			auto e = stats::batch_means(p[i]);
			CHECK(std::abs(e.mean - 2.0 / mode_at(i).eigenvalue_sq()) <= 5.0 * e.se);
		}
	}

	TEST_CASE("MALA: tiny steps are always accepted, stored energy stays exact")
	{
		GibbsTarget t(3);
		RngStream rng(3);
		ChainState c = make_chain(random_field(3, 4, 1.0), t, 1e-6);
		for (int s = 0; s < 2000; ++s)
			c = mala_step(std::move(c), t, rng);
		CHECK(c.acceptance() >= 0.999);

		c = make_chain(random_field(3, 5, 1.0), t, 0.8);
		for (int s = 0; s < 500; ++s)
		{
			std::size_t before = c.accepted;
			c = mala_step(std::move(c), t, rng);
			if (c.accepted > before)
				CHECK(std::abs(c.energy - hamiltonian_tilde(c.y, t)) <= 1e-9 * std::max(1.0, std::abs(c.energy)));
		}
		ChainState bad = c;
		bad.eps = 0.0;
		CHECK_THROWS(mala_step(bad, t, rng));
	}

	TEST_CASE("dual averaging settles near the target acceptance")
	{
		GibbsTarget t(4);
		RngStream rng(19);
		ChainState c = make_chain(SpectralField(4), t, 0.05);
		DualAveraging da(0.05);
		for (int s = 0; s < 3000; ++s)
		{
			c = mala_step(std::move(c), t, rng);
			c.eps = da.update(c.last_accept);
		}
		c.eps = da.final_eps();
		c.proposed = c.accepted = 0;
		for (int s = 0; s < 5000; ++s)
			c = mala_step(std::move(c), t, rng);
		CHECK(c.acceptance() == doctest::Approx(0.574).epsilon(0.15));
	}

	TEST_CASE("ergodic average of the Hamiltonian is stable across halves")
	{
		GibbsTarget t(3);
		ChainConfig cfg;
		cfg.chains = 1;
		cfg.burn_in = 2000;
		cfg.samples = 40000;
		cfg.seed = 2;
		std::vector<Observable> obs{{"H", [](const SpectralField& y, const GibbsTarget& g) {
			                             return hamiltonian_tilde(y, g);
		                             }}};
		auto run = run_chains(t, cfg, obs);
		const auto& h = run.values[0][0];
		std::span<const double> all(h);
		auto a = stats::batch_means(all.first(h.size() / 2)), b = stats::batch_means(all.last(h.size() / 2));
		CHECK(std::abs(stats::z_score(a, b)) <= 5.0);
	}

	TEST_CASE("two-bin flow balance for a one-mode target")
	{
		GibbsTarget t(0, {true, true, false});
		RngStream rng(23);
		ChainState c = make_chain(SpectralField(0), t, 1.0);
		for (int s = 0; s < 1000; ++s)
			c = mala_step(std::move(c), t, rng);
		const double cut = 0.4;
		const long n = 200000;
		std::vector<double> flow(n);
		bool in_a = std::norm(c.y[0]) < cut;
		long ab = 0, ba = 0;
		for (long s = 0; s < n; ++s)
		{
			c = mala_step(std::move(c), t, rng);
			bool now_a = std::norm(c.y[0]) < cut;
			flow[s] = (in_a && !now_a) ? 1.0 : (!in_a && now_a) ? -1.0 : 0.0;
			ab += in_a && !now_a;
			ba += !in_a && now_a;
			in_a = now_a;
		}
		CHECK(ab > 1000);
		auto e = stats::batch_means(flow);
		CHECK(std::abs(e.mean) <= 4.0 * e.se + 1.0 / n);
	}

	TEST_CASE("fd-compare on the Gaussian control and the constant observable")
	{
		FdConfig cfg;
		cfg.chain.chains = 4;
		cfg.chain.burn_in = 1000;
		cfg.chain.samples = 10000;
		cfg.chain.seed = 4;
		cfg.dt = 0.05;
		cfg.T = 400.0;
		cfg.burn_in = 5.0;
		cfg.record_every = 2;
		cfg.dyn_paths = 2;
		auto obs = standard_observables(2);
		auto rep = fluctuation_dissipation_compare({1.0, 0.0}, 2, {false, false, true}, cfg, obs);
		CHECK_FALSE(rep.inconclusive);
		CHECK(rep.max_rhat < 1.1);
		for (auto& r : rep.rows)
		{
			if (r.observable == "one")
			{
				CHECK(r.mcmc.mean == 1.0);
				CHECK(r.dyn.mean == 1.0);
				CHECK(r.z == 0.0);
			}
			CHECK(std::abs(r.z) <= 4.0);
		}
		CHECK_THROWS(dynamics_options_for({true, true, false}));
	}
}
