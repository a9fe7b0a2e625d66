#include "sgpe/hermite.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace sgpe;
using sgpe::testing::random_field;

TEST_SUITE("hermite")
{
	TEST_CASE("hermite functions: ground state, parity and explicit polynomial")
	{
		std::vector<double> zero{0.0};
		CHECK(hermite_eval_1d(0, zero)[0] == doctest::Approx(std::pow(std::numbers::pi, -0.25)).epsilon(1e-15));
		CHECK(hermite_eval_1d(1, zero)[0] == 0.0);

		for (int n : {0, 1, 2, 5, 9, 14})
			for (double x : {-3.3, -0.7, 0.0, 0.4, 1.9, 4.5})
				CHECK(hermite_function(n, x) ==
				      doctest::Approx(sgpe::testing::hermite_function_explicit(n, x)).epsilon(1e-12).scale(1e-3));
	}

	TEST_CASE("hermite functions: far tail underflows to zero, high orders stay finite")
	{
		CHECK(hermite_function(3, 60.0) == 0.0);
		for (double x : {0.0, 5.0, 31.0, 32.5, 45.0})
		{
			double v = hermite_function(512, x);
			CHECK(std::isfinite(v));
			CHECK(std::abs(v) < 1.0);
		}
		CHECK_THROWS(hermite_eval_1d(513, std::vector<double>{0.0}));
	}

	TEST_CASE("Gauss-Hermite rule: small cases and moments")
	{
		auto r1 = gauss_hermite_rule(1);
		REQUIRE(r1.nodes.size() == 1);
		CHECK(r1.nodes[0] == 0.0);
		CHECK(r1.weights[0] == doctest::Approx(std::sqrt(std::numbers::pi)).epsilon(1e-15));

		auto r2 = gauss_hermite_rule(2);
		CHECK(std::abs(r2.weights[0] + r2.weights[1] - std::sqrt(std::numbers::pi)) < 1e-14);

		auto r5 = gauss_hermite_rule(5);
		double m4 = 0.0;
		for (int j = 0; j < 5; ++j)
			m4 += r5.weights[j] * std::pow(r5.nodes[j], 4);
		CHECK(std::abs(m4 - 3.0 * std::sqrt(std::numbers::pi) / 4.0) < 1e-13);

		for (int m : {7, 40, 129, 257, 600})
		{
			auto r = gauss_hermite_rule(m);
			double s = 0.0;
			for (int j = 0; j < m; ++j)
			{
				CHECK(r.weights[j] >= 0.0);
				CHECK(r.nodes[j] == doctest::Approx(-r.nodes[m - 1 - j]).epsilon(1e-14).scale(1e-14));
				if (j > 0)
					CHECK(r.nodes[j] > r.nodes[j - 1]);
				s += r.weights[j];
			}
			CHECK(s == doctest::Approx(std::sqrt(std::numbers::pi)).epsilon(1e-13));
		}
	}

	TEST_CASE("Gauss-Hermite rule: exact up to degree 2M-1")
	{
		// int x^(2k) e^{-x^2} = Gamma(k + 1/2)
		int m = 8;
		auto r = gauss_hermite_rule(m);
		for (int k = 0; 2 * k <= 2 * m - 1; ++k)
		{
			double q = 0.0;
			for (int j = 0; j < m; ++j)
				q += r.weights[j] * std::pow(r.nodes[j], 2 * k);
			CHECK(q == doctest::Approx(std::tgamma(k + 0.5)).epsilon(1e-13));
		}
	}

	TEST_CASE("quadrature normalization of h_5")
	{
		BasisTable bt(5);
		double s = 0.0;
		auto lw = bt.line_weights();
		for (int j = 0; j < bt.nodes(); ++j)
			s += lw[j] * bt.h(5, j) * bt.h(5, j);
		CHECK(std::abs(s - 1.0) < 1e-12);
	}

	TEST_CASE("Gram matrix is the identity up to degree 64")
	{
		BasisTable bt(64);
		double worst = 0.0;
		for (int a = 0; a <= 64; ++a)
			for (int b = 0; b <= a; ++b)
			{
				double s = 0.0;
				auto ha = bt.whrow(a);
				auto hb = bt.hrow(b);
				for (int j = 0; j < bt.nodes(); ++j)
					s += ha[j] * hb[j];
				worst = std::max(worst, std::abs(s - (a == b ? 1.0 : 0.0)));
			}
		CHECK(worst < 1e-10);
	}

	TEST_CASE("basis table with degree 512 has finite values")
	{
		BasisTable bt(512, GridWeight::gauss, 600);
		bool finite = true;
		for (int n = 0; n <= 512; n += 7)
			for (double v : bt.hrow(n))
				finite = finite && std::isfinite(v);
		CHECK(finite);
	}

	TEST_CASE("synthesize: ground state and zero field")
	{
		BasisTable bt(6);
		auto g = synthesize(SpectralField::basis_vector(6, {0, 0}), bt);
		auto x = bt.nodes_1d();
		double worst = 0.0;
		for (int i = 0; i < bt.nodes(); ++i)
			for (int j = 0; j < bt.nodes(); ++j)
			{
				double ex = std::exp(-0.5 * (x[i] * x[i] + x[j] * x[j])) / std::sqrt(std::numbers::pi);
				worst = std::max(worst, std::abs(g(i, j) - ex));
			}
		CHECK(worst < 1e-14);

		auto z = synthesize(SpectralField(6), bt);
		for (auto v : z.values)
			CHECK(v == cplx{});
	}

	TEST_CASE("synthesize / analyze round trip and Parseval")
	{
		for (int deg : {0, 3, 12, 30})
		{
			BasisTable bt(deg);
			auto f = random_field(deg, 11 + deg);
			auto g = synthesize(f, bt);
			auto back = analyze(g, bt, deg);
			double err = 0.0;
			for (std::size_t i = 0; i < f.size(); ++i)
				err = std::max(err, std::abs(back[i] - f[i]));
			CHECK(err < 1e-10);
			double l2 = lp_norm(g, 2.0, bt);
			CHECK(std::abs(l2 * l2 - f.norm_sq()) <= 1e-8 * f.norm_sq());
		}
	}

	TEST_CASE("analyze: basis vector, linearity, and a product against brute-force quadrature")
	{
		BasisTable bt(6);
		auto e12 = analyze(synthesize(SpectralField::basis_vector(6, {1, 2}), bt), bt, 6);
		for (std::size_t i = 0; i < e12.size(); ++i)
			CHECK(std::abs(e12[i] - (mode_at(i) == MultiIndex{1, 2} ? 1.0 : 0.0)) < 1e-10);

		auto two = analyze(synthesize(SpectralField::basis_vector(6, {0, 0}, 2.0), bt), bt, 6);
		CHECK(std::abs(two.at({0, 0}) - 2.0) < 1e-12);

		// h_(1,0)^2 analyzed at degree 4; the product of three Hermite functions is exact on the gauss2 grid
		BasisTable bq(4, GridWeight::gauss2);
		auto h10 = synthesize(SpectralField::basis_vector(4, {1, 0}), bq);
		GridField sq(bq.nodes());
		for (std::size_t i = 0; i < sq.values.size(); ++i)
			sq.values[i] = h10.values[i] * h10.values[i];
		auto c = analyze(sq, bq, 4);
		for (std::size_t idx = 0; idx < c.size(); ++idx)
		{
			auto k = mode_at(idx);
			double a = sgpe::testing::trapezoid([&](double x) {
				double h1 = hermite_function(1, x);
				return h1 * h1 * hermite_function(k.k1, x);
			});
			double b = sgpe::testing::trapezoid([&](double x) {
				double h0 = hermite_function(0, x);
				return h0 * h0 * hermite_function(k.k2, x);
			});
			CHECK(std::abs(c[idx] - a * b) < 1e-9);
		}
	}

	TEST_CASE("eigen relation through the second-derivative identity")
	{
		BasisTable bt(18, GridWeight::gauss, 60);
		auto x = bt.nodes_1d();
		std::vector<double> xs(x.begin(), x.end());
		for (int n = 0; n <= 16; ++n)
		{
			auto d2 = hermite_second_derivative_1d(n, xs);
			for (int m = 0; m <= 18; ++m)
			{
				double s = 0.0;
				for (int j = 0; j < bt.nodes(); ++j)
					s += bt.whrow(m)[j] * (-d2[j] + x[j] * x[j] * bt.h(n, j));
				CHECK(std::abs(s - (m == n ? 2.0 * n + 1.0 : 0.0)) < 1e-8);
			}
		}
		// 2D: (-Delta + |x|^2) h_k = (2|k|+2) h_k, checked on a few modes
		for (MultiIndex k : {MultiIndex{0, 0}, MultiIndex{3, 1}, MultiIndex{7, 9}})
		{
			auto d1 = hermite_second_derivative_1d(k.k1, xs);
			auto d2 = hermite_second_derivative_1d(k.k2, xs);
			GridField g(bt.nodes());
			for (int i = 0; i < bt.nodes(); ++i)
				for (int j = 0; j < bt.nodes(); ++j)
					g(i, j) = -d1[i] * bt.h(k.k2, j) - bt.h(k.k1, i) * d2[j] +
					          (x[i] * x[i] + x[j] * x[j]) * bt.h2(k, i, j);
			auto c = analyze(g, bt, 16);
			for (std::size_t idx = 0; idx < c.size(); ++idx)
				CHECK(std::abs(c[idx] - (mode_at(idx) == k ? k.eigenvalue_sq() : 0.0)) < 1e-8);
		}
	}

	TEST_CASE("H powers and Sobolev norms")
	{
		BasisTable bt(6);
		auto e00 = SpectralField::basis_vector(6, {0, 0});
		for (double s : {-1.0, 0.5, 1.0, 2.0})
			CHECK(sobolev_norm(e00, s, 2.0, bt) == doctest::Approx(std::pow(2.0, s / 2)).epsilon(1e-12));

		auto e31 = SpectralField::basis_vector(6, {3, 1});
		CHECK(sobolev_norm(e31, -1.0, 2.0, bt) == doctest::Approx(std::pow(10.0, -0.5)).epsilon(1e-12));

		auto f = random_field(6, 3);
		CHECK(sobolev_norm(f, 0.0, 2.0, bt) == doctest::Approx(std::sqrt(f.norm_sq())).epsilon(1e-10));

		auto id = apply_H_power(f, 0.0);
		for (std::size_t i = 0; i < f.size(); ++i)
			CHECK(id[i] == f[i]);
		CHECK(std::abs(apply_H_power(e00, 2.0).at({0, 0}) - 2.0) < 1e-14);
		auto rt = apply_H_power(apply_H_power(f, 1.0), -1.0);
		for (std::size_t i = 0; i < f.size(); ++i)
			CHECK(std::abs(rt[i] - f[i]) <= 1e-15 * std::abs(f[i]) + 1e-300);

		double prev = 0.0;
		for (double s = -2.0; s <= 2.0; s += 0.25)
		{
			double v = sobolev_norm(f, s, 2.0, bt);
			CHECK(v >= prev);
			prev = v;
		}
	}

	TEST_CASE("L^p norms on band-limited fields match a dense oracle")
	{
		// |h_(2,1)|_{L^4} = |h_2|_4 |h_1|_4 in 1D, exact on the gauss2 grid
		BasisTable bq(3, GridWeight::gauss2);
		auto g = synthesize(SpectralField::basis_vector(3, {2, 1}), bq);
		auto n4 = [](int n) {
			return std::pow(sgpe::testing::trapezoid([n](double x) { return std::pow(hermite_function(n, x), 4); }), 0.25);
		};
		CHECK(lp_norm(g, 4.0, bq) == doctest::Approx(n4(2) * n4(1)).epsilon(1e-12));

		// other exponents are approximate: smooth for even p, algebraic convergence at the zeros for odd p
		BasisTable bd(3, GridWeight::gauss, 80);
		auto gd = synthesize(SpectralField::basis_vector(3, {2, 1}), bd);
		auto np = [](int n, double p) {
			return std::pow(sgpe::testing::trapezoid([n, p](double x) { return std::pow(std::abs(hermite_function(n, x)), p); }),
			                1.0 / p);
		};
		CHECK(lp_norm(gd, 6.0, bd) == doctest::Approx(np(2, 6.0) * np(1, 6.0)).epsilon(1e-6));
		CHECK(lp_norm(gd, 3.0, bd) == doctest::Approx(np(2, 3.0) * np(1, 3.0)).epsilon(1e-3));
	}

	TEST_CASE("mode indexing is a bijection")
	{
		for (std::size_t i = 0; i < mode_count(20); ++i)
			CHECK(mode_index(mode_at(i)) == i);
		CHECK(mode_count(3) == 10);
	}
}
