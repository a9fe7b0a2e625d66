#pragma once

#include "sgpe/hermite.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace sgpe {

/// Smooth plateau cutoff: 1 on [0,1/2], 0 on [1,inf), C-infinity and nonincreasing in between.
double chi(double t);

/// chi(lambda_k^2 / lambda_N^2) for a mode of total degree `degree`; lambda_N = lambda_(N,0)
inline double chi_level(int degree, int level)
{
	return chi((degree + 1.0) / (level + 1.0));
}

/// smooth projector S_N: c_k -> chi((|k|+1)/(N+1)) c_k
SpectralField apply_SN(SpectralField f, int level);
/// sharp projector Pi_N: keeps |k| <= N
SpectralField apply_PiN(SpectralField f, int level);

struct GridPoint
{
	int i = 0;
	int j = 0;
};

/**
 * K_{N,M}(x, y) = sum_k chi_N(k) chi_M(k) h_k(x) h_k(y) / lambda_k^2 by direct
 * summation, degree shells ascending. rho_N(x)^2 is this value at (x, x, N, N),
 * so the diagonal of the kernel and the squared renormalization agree bitwise.
 */
double kernel_value(const BasisTable& bt, GridPoint x, GridPoint y, int level_n, int level_m);

/// Space-dependent renormalization rho_N on the nodes of one basis table.
struct RenormFunction
{
	int level = 0;
	RealGrid rho;
	RealGrid rho_sq;
};

RenormFunction rho_N(int level, const BasisTable& bt);

/// identically zero renormalization (disables all counterterms)
RenormFunction zero_renorm(int level, const BasisTable& bt);

struct KernelSlice
{
	GridPoint x;
	int level_n = 0;
	int level_m = 0;
	RealGrid values;
};

KernelSlice kernel_KNM(GridPoint x, int level_n, int level_m, const BasisTable& bt);

// Empirical probes of the norm estimates ----------------------------------

/// L^p norms (p may be kInfNorm) of 1D Hermite functions h_0..h_nmax on a dense grid
std::vector<double> hermite_lp_norms_1d(int nmax, double p);

struct DecayFit
{
	std::vector<double> lambdas;
	std::vector<double> norms;
	double slope = 0.0;
};

/**
 * Fits log|h_k|_{L^p(R^2)} against log lambda_k along the extremal family: for
 * each degree n in [n_min, n_max] the largest norm over the shell |k| = n.
 */
DecayFit hermite_lp_decay_probe(double p, int n_min, int n_max);

struct LevelSeries
{
	std::vector<int> levels;
	std::vector<double> values;
	double slope = 0.0; ///< least-squares slope of log value against log level
};

/// |rho_N^2|_{L^p} for each level, on a shared gauss2 grid of the largest level
LevelSeries rho_growth_probe(double p, std::span<const int> levels);

/// max over random band-limited f in E_N of |S_N f|_{L^p} / |f|_{L^p}
LevelSeries sn_norm_probe(double p, std::span<const int> levels, int trials, std::uint64_t seed);

struct KernelNormSeries
{
	std::vector<int> truncations;
	std::vector<double> norms;
	/// |s_last - s_(last-1)| / |s_2 - s_1|
	double increment_ratio = 0.0;
};

/**
 * |K_T^n|_{L^r_x W^{alpha,2}_y} for the sharply truncated kernel
 * K_T = sum_{|k|<=T} h_k(x) h_k(y) / lambda_k^2. The x integral uses a
 * gauss grid of the largest truncation (or x_nodes per axis when given).
 */
KernelNormSeries kernel_norm_probe(double r, double alpha, int n_power, std::span<const int> truncations,
                                   int x_nodes = 0);

} // namespace sgpe
