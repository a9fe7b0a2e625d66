#pragma once

#include "sgpe/cutoff.hpp"
#include "sgpe/hermite.hpp"
#include "sgpe/rng.hpp"
#include "sgpe/stats.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace sgpe {

struct NoiseParams
{
	double gamma1 = 1.0; ///< dissipation, > 0
	double gamma2 = 0.0; ///< dispersion
	std::uint64_t seed = 0;

	void validate() const;
};

/// Ornstein-Uhlenbeck field dZ = (g1 + i g2) H Z dt + sqrt(2 g1) dW on modes |k| <= deg.
struct OUState
{
	SpectralField coeffs;
	double t = 0.0;
	std::uint64_t step = 0;
};

/// Gaussian measure mu_N: c_k = (sqrt 2 / lambda_k) g_k with g_k ~ N_C(0,1), |k| <= N
SpectralField sample_mu_N(int level, RngStream& rng);

OUState ou_init_stationary(const NoiseParams& params, int deg, RngStream& rng);

/// exact one-step law of a single mode: c -> multiplier * c + eta, E|eta|^2 = noise_var
struct OUTransition
{
	cplx multiplier;
	double noise_var;
};

OUTransition ou_transition(int degree, double dt, const NoiseParams& params);

/**
 * Distributionally exact transition over dt. The innovation of mode i at step
 * s is drawn from rng.complex_normal_at(i, s), so a path is a pure function of
 * the stream key and the initial state.
 */
OUState ou_step(OUState state, double dt, const NoiseParams& params, const RngStream& rng);

/// H_n = He_n / sqrt(n!) (probabilists' He_n), generating function exp(-t^2/2 + t x)
double hermite_poly_paper(int n, double x);

/// :z^n: with space-dependent renormalization; explicit forms, safe where rho = 0
double wick_power(double z, double rho_sq, int n);
RealGrid wick_power(const RealGrid& z, const RenormFunction& rho, int n);

/// Wick products :Z_R^k Z_I^l: of S_N Z for 0 <= k + l <= 3 on one grid.
struct WickBundle
{
	int level = 0;
	std::array<RealGrid, 10> fields;

	static constexpr int slot(int k, int l) { return (k + l) * (k + l + 1) / 2 + l; }
	const RealGrid& W(int k, int l) const { return fields[slot(k, l)]; }
	RealGrid& W(int k, int l) { return fields[slot(k, l)]; }
};

/// bundle from grid values of S_N Z (real part Z_R, imaginary part Z_I)
WickBundle wick_bundle_from_grid(const GridField& sn_z, const RenormFunction& rho);

/// bundle from OU coefficients: applies S_N, synthesizes, renormalizes
WickBundle wick_bundle(const OUState& state, int level, const BasisTable& bt, const RenormFunction& rho);

/// values chi_N(k) h_k(x) at an arbitrary point, in mode order (|k| < N only nonzero)
std::vector<double> sn_point_functional(int level, double x1, double x2);

/// K_{N,M}(x, y) at arbitrary points
double kernel_at_points(int level_n, int level_m, double x1, double x2, double y1, double y2);

struct ChaosCovariance
{
	stats::Estimate second;  ///< E[:z^2:(x) :z^2:(y)]
	double second_predicted; ///< 2 K_N(x,y)^2
	stats::Estimate third;   ///< E[:z^3:(x) :z^3:(y)]
	double third_predicted;  ///< 6 K_N(x,y)^3
	stats::Estimate mixed;   ///< E[:z^2:(x) :z^3:(y)], predicted 0
};

/// Monte-Carlo chaos covariances of the real field z = S_N Z_R at two points
ChaosCovariance chaos_covariance_check(int level, double x1, double x2, double y1, double y2, std::size_t samples,
                                       RngStream& rng);

/// E|F|^p / ((p-1)^{np/2} (E F^2)^{p/2}) for F = :z^n:(x), z = S_N Z_R
double nelson_probe(int order, int p, int level, double x1, double x2, std::size_t samples, RngStream& rng);

struct WickCenteringRow
{
	double x1, x2;
	int k, l;
	stats::Estimate value;
	double predicted;
};

/// sample means of :Z_R^k Z_I^l:(x), 1 <= k+l <= 3, at each probe point
std::vector<WickCenteringRow> wick_centering(int level, std::span<const std::array<double, 2>> points,
                                             std::size_t samples, RngStream& rng);

} // namespace sgpe
