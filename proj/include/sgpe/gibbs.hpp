#pragma once

#include "sgpe/cutoff.hpp"
#include "sgpe/dynamics.hpp"
#include "sgpe/hermite.hpp"
#include "sgpe/rng.hpp"
#include "sgpe/stats.hpp"

#include <functional>
#include <string>
#include <vector>

namespace sgpe {

struct GibbsOptions
{
	bool quartic = true;     ///< include the renormalized quartic integral
	bool counterterm = true; ///< rho_N terms inside the integral
	bool sn_inside = true;   ///< integrand evaluated at S_N y (false: at y itself)
};

/**
 * Unnormalized density exp(-H(y)) on E_N, with
 *   H(y) = 1/2 sum lambda_k^2 |c_k|^2 + int (|v|^4/4 - 2 rho^2 |v|^2 + 2 rho^4),  v = S_N y.
 * Complex coefficients are pairs of real coordinates; the quadratic part alone
 * is the Gaussian mu_N.
 */
class GibbsTarget
{
  public:
	explicit GibbsTarget(int level, GibbsOptions options = {}, int nodes = 0);

	int level() const { return level_; }
	const GibbsOptions& options() const { return opts_; }
	const BasisTable& bt() const { return bt_; }
	const RenormFunction& rho() const { return rho_; }

	/// v on the grid (S_N y or y, per options)
	GridField field(const SpectralField& y) const;

  private:
	int level_;
	GibbsOptions opts_;
	BasisTable bt_;
	RenormFunction rho_;
};

double hamiltonian_tilde(const SpectralField& y, const GibbsTarget& target);

/// d/dRe c_k + i d/dIm c_k of hamiltonian_tilde
SpectralField grad_hamiltonian(const SpectralField& y, const GibbsTarget& target);

struct ChainState
{
	SpectralField y;
	double energy = 0.0; ///< hamiltonian_tilde(y)
	SpectralField grad;
	double eps = 0.1;
	std::size_t proposed = 0;
	std::size_t accepted = 0;
	double last_accept = 0.0; ///< acceptance probability of the latest proposal

	double acceptance() const { return proposed ? double(accepted) / double(proposed) : 0.0; }
};

ChainState make_chain(const SpectralField& y0, const GibbsTarget& target, double eps);

/// Langevin proposal preconditioned by diag(1/lambda^2), Metropolis-Hastings corrected
ChainState mala_step(ChainState chain, const GibbsTarget& target, RngStream& rng);

/// leapfrog HMC with mass diag(lambda^2) and `leapfrog` steps of size eps
ChainState hmc_step(ChainState chain, const GibbsTarget& target, int leapfrog, RngStream& rng);

/// Nesterov dual averaging of log eps toward a target acceptance rate
class DualAveraging
{
  public:
	explicit DualAveraging(double eps0, double target = 0.574);
	/// feeds one acceptance probability, returns the next step size
	double update(double accept_prob);
	double final_eps() const { return std::exp(log_eps_bar_); }

  private:
	double mu_, target_, hbar_ = 0.0, log_eps_bar_ = 0.0;
	long t_ = 0;
};

enum class Sampler
{
	mala,
	hmc,
};

struct Observable
{
	std::string name;
	std::function<double(const SpectralField&, const GibbsTarget&)> eval;
};

/// one, |c_00|^2, |c_10|^2, |c_01|^2, quartic = int |v|^4, h1 = sum lambda^2 |c|^2
std::vector<Observable> standard_observables(int level);

struct ChainConfig
{
	Sampler sampler = Sampler::mala;
	int chains = 4;
	long burn_in = 2000;
	long samples = 10000;
	int thin = 1;
	double eps0 = 0.5;
	int leapfrog = 8;
	std::uint64_t seed = 0;
};

struct ChainRun
{
	/// values[obs][chain][sample]
	std::vector<std::vector<std::vector<double>>> values;
	std::vector<SpectralField> final_states;
	std::vector<double> acceptance;
	std::vector<double> eps;
	/// thinned states of chain 0, for snapshot output
	std::vector<SpectralField> trace;
};

/// independent chains from y = 0 (parallel over chains, each deterministic per seed)
ChainRun run_chains(const GibbsTarget& target, const ChainConfig& cfg, const std::vector<Observable>& obs,
                    std::size_t keep_trace = 0);

struct FdConfig
{
	ChainConfig chain;
	double dt = 2e-3;
	double T = 200.0;
	double burn_in = 10.0;
	int record_every = 5;
	int dyn_paths = 4;
	double rhat_limit = 1.1;
};

struct FdRow
{
	std::string observable;
	stats::Estimate mcmc;
	stats::Estimate dyn;
	double z = 0.0;
	double rhat = 1.0;
};

struct FdReport
{
	std::vector<FdRow> rows;
	double max_rhat = 1.0;
	bool inconclusive = false;
	bool dyn_blown_up = false;
	double max_abs_z = 0.0;
	std::vector<double> acceptance;
};

/// step options of the Galerkin dynamics whose invariant law is the given target
StepOptions dynamics_options_for(const GibbsOptions& options);

/**
 * MCMC averages under the target against long-time averages of X = u + Z from
 * the Galerkin dynamics with the same N, chi and rho_N.
 */
FdReport fluctuation_dissipation_compare(const PropagatorParams& params, int level, const GibbsOptions& options,
                                         const FdConfig& cfg, const std::vector<Observable>& obs);

} // namespace sgpe
