#include "sgpe/dynamics.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace sgpe;
using sgpe::testing::random_field;

namespace {

double max_abs_diff(const SpectralField& a, const SpectralField& b)
{
	double m = 0.0;
	for (std::size_t i = 0; i < a.size(); ++i)
		m = std::max(m, std::abs(a[i] - b[i]));
	return m;
}

double max_abs(const SpectralField& a)
{
	double m = 0.0;
	for (cplx c : a.coeffs())
		m = std::max(m, std::abs(c));
	return m;
}

/// deterministic smooth OU state, frozen in time
OUState smooth_z(int level, std::uint64_t seed, double amp)
{
	OUState z;
	z.coeffs = random_field(level, seed, 2.0);
	z.coeffs *= amp;
	return z;
}

/// integrate a frozen-Z shifted trajectory to time T with step dt
SpectralField frozen_path(const SpectralField& u0, const OUState& z, double T, double dt, const GalerkinSetup& setup)
{
	ShiftedState s = make_shifted_state(u0, z, setup);
	RngStream rng(0);
	long n = std::lround(T / dt);
	for (long i = 0; i < n; ++i)
		s = step_shifted(std::move(s), dt, setup, rng);
	return s.u;
}

} // namespace

TEST_SUITE("dynamics")
{
	TEST_CASE("apply_semigroup: identity at t=0, eigen decay, spectral-gap contraction")
	{
		PropagatorParams p{1.0, 0.0};
		auto f = random_field(6, 1);
		auto same = apply_semigroup(f, 0.0, p);
		CHECK(max_abs_diff(same, f) == 0.0);

		auto e0 = SpectralField::basis_vector(3, {0, 0});
		auto g = apply_semigroup(e0, 0.5, p);
		CHECK(std::abs(g.at({0, 0}) - std::exp(-1.0)) < 1e-15);
		for (std::size_t i = 1; i < g.size(); ++i)
			CHECK(g[i] == cplx{});

		for (PropagatorParams q : {PropagatorParams{1.0, 0.0}, PropagatorParams{0.3, 2.0}})
			for (double t : {0.01, 0.4, 3.0})
			{
				auto h = apply_semigroup(f, t, q);
				CHECK(std::sqrt(h.norm_sq()) <= std::exp(-2.0 * q.gamma1 * t) * std::sqrt(f.norm_sq()) * (1 + 1e-14));
			}
		CHECK_THROWS(apply_semigroup(f, -1.0, p));
	}

	TEST_CASE("Mehler kernel agrees with the spectral multiplier")
	{
		BasisTable bt(8, GridWeight::gauss, 129);
		double worst = 0.0;
		for (PropagatorParams p : {PropagatorParams{1.0, 0.0}, PropagatorParams{1.0, 0.5}})
			for (double t : {0.05, 0.2})
				for (std::size_t i = 0; i < mode_count(8); ++i)
				{
					auto e = SpectralField::basis_vector(8, mode_at(i));
					auto viaK = mehler_apply(synthesize(e, bt), t, p, bt);
					auto exact = synthesize(apply_semigroup(e, t, p), bt);
					double num = 0.0, den = 0.0;
					for (std::size_t n = 0; n < exact.values.size(); ++n)
					{
						num = std::max(num, std::abs(viaK.values[n] - exact.values[n]));
						den = std::max(den, std::abs(exact.values[n]));
					}
					worst = std::max(worst, num / den);
				}
		CHECK(worst < 1e-7);
	}

	TEST_CASE("Mehler kernel: domain and positivity")
	{
		PropagatorParams p{1.0, 0.5};
		CHECK(mehler_time_limit(p) == doctest::Approx(std::numbers::pi / 2));
		CHECK(std::isinf(mehler_time_limit({1.0, 0.0})));
		BasisTable bt(2, GridWeight::gauss, 9);
		GridField g(9);
		CHECK_THROWS_AS(mehler_apply(g, 1.6, p, bt), std::invalid_argument);
		CHECK_THROWS_AS(mehler_apply(g, 0.0, p, bt), std::invalid_argument);
		CHECK_NOTHROW(mehler_apply(g, 1.5, p, bt));

		double mn = 1.0;
		for (double t : {0.01, 0.1, 1.0, 5.0})
			for (double x = -6; x <= 6; x += 0.25)
				for (double y = -6; y <= 6; y += 0.25)
				{
					cplx k = mehler_kernel_1d(x, y, t, {1.0, 0.0});
					CHECK(k.imag() == 0.0);
					mn = std::min(mn, k.real());
				}
		CHECK(mn >= 0.0);
	}

	TEST_CASE("smoothing probe: no upward trend as t -> 0")
	{
		std::vector<double> times{1e-3, 3e-3, 1e-2, 3e-2, 1e-1};
		for (double s : {1.0, 2.0})
		{
			auto r = smoothing_probe(s, 4.0, 8, times, 4, 3, {1.0, 0.0});
			CHECK(r.slope >= -0.05);
			for (double v : r.ratios)
				CHECK(std::isfinite(v));
		}
	}

	TEST_CASE("phi1: series branch and closed form meet")
	{
		CHECK(phi1(0.0) == 1.0);
		for (cplx z : {cplx(9.9e-7, 0), cplx(1.01e-6, 0), cplx(-3e-7, 5e-7), cplx(0, 1.2e-6)})
			CHECK(std::abs(phi1(z) - (1.0 + z / 2.0 + z * z / 6.0)) < 1e-15);
		for (cplx z : {cplx(-2.0, 0.0), cplx(-0.5, 3.0), cplx(1e-3, -1e-3)})
			CHECK(std::abs(phi1(z) - (std::exp(z) - 1.0) / z) < 1e-12);
		CHECK(std::abs(phi1(-1e4) - 1e-4) < 1e-15);
	}

	TEST_CASE("nonlinearity: F0 only, F3 only, expansion of the shifted cubic")
	{
		const int level = 6;
		BasisTable bt(level, GridWeight::gauss2);
		auto u = random_field(level, 3, 1.0);
		auto v = synthesize(apply_SN(u, level), bt);

		// zero Z and zero rho: only F0 survives
		auto zero = wick_bundle_from_grid(GridField(bt.nodes()), zero_renorm(level, bt));
		GridField cubic(bt.nodes());
		for (std::size_t n = 0; n < v.values.size(); ++n)
			cubic.values[n] = std::norm(v.values[n]) * v.values[n];
		auto f0 = apply_SN(analyze(cubic, bt, level), level);
		CHECK(max_abs_diff(nonlinearity_F(u, zero, level, bt), f0) < 1e-13 * max_abs(f0));

		// deterministic smooth z, rho = 0: F = S_N(|v + z|^2 (v + z))
		auto z = smooth_z(level, 8, 0.7);
		auto zg = synthesize(apply_SN(z.coeffs, level), bt);
		auto b0 = wick_bundle(z, level, bt, zero_renorm(level, bt));
		GridField full(bt.nodes()), only3(bt.nodes());
		for (std::size_t n = 0; n < v.values.size(); ++n)
		{
			cplx x = v.values[n] + zg.values[n];
			full.values[n] = std::norm(x) * x;
			only3.values[n] = std::norm(zg.values[n]) * zg.values[n];
		}
		auto direct = apply_SN(analyze(full, bt, level), level);
		auto ours = nonlinearity_F(u, b0, level, bt);
		CHECK(max_abs_diff(ours, direct) < 1e-10);

		auto f3 = nonlinearity_F(SpectralField(level), b0, level, bt);
		CHECK(max_abs_diff(f3, apply_SN(analyze(only3, bt, level), level)) < 1e-12);
		NonlinearityTerms t3{false, false, false, true};
		CHECK(max_abs_diff(nonlinearity_F(u, b0, level, bt, t3), f3) < 1e-14);

		// with renormalization the sum is (|x|^2 - 4 rho^2) x
		auto rho = rho_N(level, bt);
		auto br = wick_bundle(z, level, bt, rho);
		GridField ren(bt.nodes());
		for (std::size_t n = 0; n < v.values.size(); ++n)
		{
			cplx x = v.values[n] + zg.values[n];
			ren.values[n] = (std::norm(x) - 4.0 * rho.rho_sq.values[n]) * x;
		}
		CHECK(max_abs_diff(nonlinearity_F(u, br, level, bt), apply_SN(analyze(ren, bt, level), level)) < 1e-10);
	}

	TEST_CASE("step_shifted: linear flow is exact when F is off")
	{
		const int level = 8;
		StepOptions opt;
		opt.terms = {false, false, false, false};
		auto setup = GalerkinSetup::make(level, {1.0, 0.7}, opt);
		RngStream init(4);
		auto u0 = random_field(level, 5);
		ShiftedState s = make_shifted_state(u0, setup, init);
		auto one = step_shifted(s, 0.01, setup, RngStream(9));
		CHECK(max_abs_diff(one.u, apply_semigroup(u0, 0.01, setup.params)) == 0.0);
		for (int n = 0; n < 50; ++n)
			s = step_shifted(std::move(s), 0.01, setup, RngStream(9));
		CHECK(max_abs_diff(s.u, apply_semigroup(u0, 0.5, setup.params)) < 1e-12);
		CHECK(s.t == doctest::Approx(0.5));
		CHECK(s.z.step == 50);
	}

	TEST_CASE("exponential Euler on the single-mode ODE is first order")
	{
		const cplx a{1.0, 0.5};
		auto rhs = [&](cplx u) { return -2.0 * a * u - a * std::norm(u) * u; };
		auto reference = [&](cplx u, double T) {
			const int n = 200000;
			double h = T / n;
			for (int i = 0; i < n; ++i)
			{
				cplx k1 = rhs(u), k2 = rhs(u + 0.5 * h * k1), k3 = rhs(u + 0.5 * h * k2), k4 = rhs(u + h * k3);
				u += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
			}
			return u;
		};
		const cplx u0{1.2, -0.4};
		const double T = 1.0;
		cplx ref = reference(u0, T);
		std::vector<double> err;
		for (double dt : {1e-2, 5e-3, 2.5e-3, 1.25e-3})
		{
			cplx u = u0;
			long n = std::lround(T / dt);
			for (long i = 0; i < n; ++i)
				u = exp_euler_mode(u, std::norm(u) * u, 2.0, a, dt);
			err.push_back(std::abs(u - ref));
		}
		for (std::size_t i = 1; i < err.size(); ++i)
		{
			double order = std::log2(err[i - 1] / err[i]);
			CHECK(order > 0.9);
			CHECK(order < 1.1);
		}
	}

	TEST_CASE("frozen-Z trajectory: self-convergence of order one in dt")
	{
		const int level = 6;
		StepOptions opt;
		opt.noise = NoiseMode::frozen;
		auto setup = GalerkinSetup::make(level, {1.0, 0.5}, opt);
		auto z = smooth_z(level, 12, 1.0);
		auto u0 = random_field(level, 13, 1.0);
		double T = 0.2;
		auto a = frozen_path(u0, z, T, 1e-2, setup);
		auto b = frozen_path(u0, z, T, 5e-3, setup);
		auto c = frozen_path(u0, z, T, 2.5e-3, setup);
		double e1 = std::sqrt((a - b).norm_sq()), e2 = std::sqrt((b - c).norm_sq());
		MESSAGE("observed order " << std::log2(e1 / e2));
		CHECK(std::log2(e1 / e2) >= 1.0);
	}

	TEST_CASE("deterministic dissipation: L2 and L4 decrease along the defocusing flow")
	{
		const int level = 8;
		StepOptions opt;
		opt.noise = NoiseMode::off;
		auto setup = GalerkinSetup::make(level, {1.0, 0.0}, opt);
		auto u0 = random_field(level, 21, 1.0);
		u0 *= 1.5;
		RngStream rng(1);
		ShiftedState s = make_shifted_state(u0, setup, rng);
		double l2 = std::sqrt(s.u.norm_sq());
		double l4 = std::pow(lp_norm(synthesize(s.u, setup.bt), 4.0, setup.bt), 4.0);
		for (int n = 0; n < 400; ++n)
		{
			s = step_shifted(std::move(s), 2e-3, setup, rng);
			double nl2 = std::sqrt(s.u.norm_sq());
			double nl4 = std::pow(lp_norm(synthesize(s.u, setup.bt), 4.0, setup.bt), 4.0);
			CHECK(nl2 <= l2 + 1e-10);
			CHECK(nl4 <= l4 + 1e-10);
			l2 = nl2;
			l4 = nl4;
		}
	}

	TEST_CASE("step_galerkin_X: decomposition, determinism, OU relaxation in the linear case")
	{
		const int level = 3;
		StepOptions lin;
		lin.terms = {false, false, false, false};
		auto setup = GalerkinSetup::make(level, {1.0, 0.0}, lin);
		OUState z0;
		z0.coeffs = SpectralField(level);

		const std::size_t paths = 4000;
		std::vector<std::vector<double>> p(mode_count(level), std::vector<double>(paths));
		for (std::size_t k = 0; k < paths; ++k)
		{
			ShiftedState s = make_shifted_state(SpectralField(level), z0, setup);
			RngStream noise(77, k);
			SpectralField x;
			for (int n = 0; n < 10; ++n)
			{
				x = step_galerkin_X(s, 0.5, setup, noise);
				CHECK(max_abs_diff(x - s.z.coeffs, s.u) == 0.0);
			}
			for (std::size_t i = 0; i < x.size(); ++i)
				p[i][k] = std::norm(x[i]);
		}
		for (std::size_t i = 0; i < p.size(); ++i)
		{
			auto e = stats::iid_estimate(p[i]);
			CHECK(std::abs(e.mean - 2.0 / mode_at(i).eigenvalue_sq()) <= 5.0 * e.se);
		}

		auto full = GalerkinSetup::make(level, {1.0, 0.3});
		auto run = [&] {
			RngStream init(5);
			ShiftedState s = make_shifted_state(random_field(level, 2), full, init);
			SpectralField x;
			for (int n = 0; n < 20; ++n)
				x = step_galerkin_X(s, 0.01, full, RngStream(6));
			return x;
		};
		CHECK(max_abs_diff(run(), run()) == 0.0);
	}

	TEST_CASE("nonfinite states abort with a diagnostic")
	{
		auto setup = GalerkinSetup::make(2, {1.0, 0.0});
		RngStream rng(1);
		auto u0 = SpectralField::basis_vector(2, {0, 0}, 1e200);
		ShiftedState s = make_shifted_state(u0, setup, rng);
		CHECK_THROWS_AS(step_shifted(s, 0.1, setup, rng), NonfiniteStateError);
	}

	TEST_CASE("L^q admissibility gate")
	{
		PropagatorParams diss{1.0, 0.0}, mixed{1.0, 1.0};
		CHECK(lq_delta(4.0, diss) == 1.0);
		CHECK(lq_delta(20.0, diss) == 1.0);
		CHECK(lq_admissible(100.0, diss));
		CHECK(lq_q_limit(mixed) == doctest::Approx(2.0 + 2.0 * (1.0 + std::sqrt(2.0))));
		CHECK(lq_q_limit(mixed) == doctest::Approx(6.828).epsilon(1e-4));
		CHECK(lq_admissible(4.0, mixed));
		CHECK_FALSE(lq_admissible(8.0, mixed));
		CHECK(lq_delta(4.0, mixed) == doctest::Approx(1.0 - 2.0 / (2.0 * (1.0 + std::sqrt(2.0)))));
		CHECK(lq_admissible(4.0, {1.0, -1.0}));
		CHECK_FALSE(lq_admissible(8.0, {1.0, -1.0}));
		try
		{
			check_lq_admissible(8.0, mixed);
			FAIL("expected a precondition error");
		}
		catch (const PreconditionError& e)
		{
			CHECK(std::string(e.what()).find("q < 2 + 2(κ²+κ√(1+κ²))") != std::string::npos);
		}
		auto setup = GalerkinSetup::make(2, mixed);
		LqDecayConfig cfg;
		cfg.q = 8.0;
		CHECK_THROWS_AS(lq_decay_run(SpectralField(2), cfg, setup), PreconditionError);
	}

	TEST_CASE("lq_decay_run and coupled_stationary_run: shapes and finiteness")
	{
		auto setup = GalerkinSetup::make(4, {1.0, 0.0});
		LqDecayConfig cfg;
		cfg.q = 4.0;
		cfg.T = 0.2;
		cfg.dt = 0.01;
		cfg.ensemble = 4;
		cfg.record_every = 2;
		cfg.seed = 3;
		auto u0 = random_field(4, 1, 1.0);
		auto rep = lq_decay_run(u0, cfg, setup);
		CHECK(rep.times.size() == 11);
		CHECK(rep.series.size() == 4);
		for (auto& s : rep.series)
		{
			CHECK(s.size() == rep.times.size());
			for (double v : s)
				CHECK((std::isfinite(v) && v >= 0.0));
		}
		auto again = lq_decay_run(u0, cfg, setup);
		CHECK(again.series == rep.series);
		CHECK(rep.fraction >= 0.0);

		CoupledConfig cc;
		cc.T = 0.6;
		cc.dt = 0.01;
		cc.burn_in = 0.1;
		cc.seed = 5;
		auto rs = coupled_stationary_run(cc, setup);
		CHECK_FALSE(rs.blown_up);
		CHECK(rs.rows.size() == 50);
		for (auto& r : rs.rows)
		{
			CHECK(r.flags == 0);
			CHECK(r.h1_sq >= 0.0);
			CHECK(r.h_inv_m_moment == doctest::Approx(r.h1_sq).epsilon(1e-12));
			CHECK(r.l4_4 >= 0.0);
		}
		CHECK(std::isfinite(rs.h_inv_m_moment.mean));
	}
}
