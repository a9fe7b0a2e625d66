#pragma once

#include "sgpe/cutoff.hpp"
#include "sgpe/gauss_field.hpp"
#include "sgpe/hermite.hpp"
#include "sgpe/rng.hpp"
#include "sgpe/stats.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace sgpe {

struct PropagatorParams
{
	double gamma1 = 1.0;
	double gamma2 = 0.0;

	void validate() const;
	cplx rate() const { return {gamma1, gamma2}; }
};

/// c_k -> exp(-lambda_k^2 (g1 + i g2) t) c_k
SpectralField apply_semigroup(SpectralField f, double t, const PropagatorParams& params);

/// largest t for which the Mehler kernel has Re(delta) > 0 (infinite when gamma2 = 0)
double mehler_time_limit(const PropagatorParams& params);

/// 1D factor of the Mehler kernel; the 2D kernel is the product over both axes
cplx mehler_kernel_1d(double x, double y, double t, const PropagatorParams& params);

/// e^{t(g1+ig2)H} applied by quadrature of the Mehler kernel over the grid of bt
GridField mehler_apply(const GridField& g, double t, const PropagatorParams& params, const BasisTable& bt);

struct SmoothingSeries
{
	std::vector<double> times;
	std::vector<double> ratios; ///< max over trials of t^{s/2} |e^{tL} f|_{W^{s,p}} / |f|_{L^p}
	double slope = 0.0;         ///< log ratio against log t
};

SmoothingSeries smoothing_probe(double s, double p, int deg, std::span<const double> times, int trials,
                                std::uint64_t seed, const PropagatorParams& params);

/// phi1(z) = (e^z - 1) / z, with phi1(0) = 1
cplx phi1(cplx z);

/// exponential Euler update of one mode of u' = -lambda^2 a u - a F, a = g1 + i g2, F frozen over the step
cplx exp_euler_mode(cplx u, cplx f, double lambda_sq, cplx rate, double dt);

struct NonlinearityTerms
{
	bool f0 = true, f1 = true, f2 = true, f3 = true;

	bool any() const { return f0 || f1 || f2 || f3; }
};

/// S_N(F0 + F1 + F2 + F3) with v = S_N u and the Wick products of the bundle
SpectralField nonlinearity_F(const SpectralField& u, const WickBundle& wick, int level, const BasisTable& bt,
                             NonlinearityTerms terms = {});

enum class NoiseMode
{
	ou,     ///< Z evolves as the stationary OU process
	frozen, ///< Z keeps its initial value
	off,    ///< Z = 0 and rho = 0: deterministic Galerkin flow
};

struct StepOptions
{
	NoiseMode noise = NoiseMode::ou;
	NonlinearityTerms terms;
	bool renormalize = true; ///< rho_N in the Wick products (rho = 0 otherwise)
};

/// Everything a Galerkin trajectory at level N needs; immutable once built.
struct GalerkinSetup
{
	int level = 0;
	PropagatorParams params;
	StepOptions options;
	BasisTable bt;
	RenormFunction rho;

	/// quartic-exact grid of degree `level` (nodes = 0 picks 4N+1)
	static GalerkinSetup make(int level, PropagatorParams params, StepOptions options = {}, int nodes = 0);

	NoiseParams noise_params() const { return {params.gamma1, params.gamma2, 0}; }
};

struct ShiftedState
{
	SpectralField u;
	OUState z;
	double t = 0.0;
	WickBundle wick;
};

class NonfiniteStateError : public std::runtime_error
{
  public:
	using std::runtime_error::runtime_error;
};

/// pairs u0 with z0 (both resized to the level) and builds the Wick bundle
ShiftedState make_shifted_state(const SpectralField& u0, const OUState& z0, const GalerkinSetup& setup);

/// u0 with Z drawn from its stationary law (or zero when noise is off)
ShiftedState make_shifted_state(const SpectralField& u0, const GalerkinSetup& setup, RngStream& rng);

/**
 * One exponential-Euler step of the shifted equation, then the exact OU
 * step for Z (innovations from rng, addressed by mode and step) and a Wick
 * refresh. Throws NonfiniteStateError with a state summary if u blows up to
 * inf/nan.
 */
ShiftedState step_shifted(ShiftedState state, double dt, const GalerkinSetup& setup, const RngStream& rng);

/// advances the pair and returns X = u + Z
SpectralField step_galerkin_X(ShiftedState& state, double dt, const GalerkinSetup& setup, const RngStream& rng);

/// (g1+ig2)(H X - S_N((|S_N X|^2 - 4 rho^2) S_N X)), the Galerkin drift without splitting
SpectralField galerkin_drift(const SpectralField& x, const GalerkinSetup& setup);

// L^q decay ----------------------------------------------------------------

class PreconditionError : public std::invalid_argument
{
  public:
	using std::invalid_argument::invalid_argument;
};

/// kappa = g1 / |g2| (infinite for g2 = 0)
double lq_kappa(const PropagatorParams& params);
/// 2 + 2(kappa^2 + kappa sqrt(1 + kappa^2)); infinite for g2 = 0
double lq_q_limit(const PropagatorParams& params);
bool lq_admissible(double q, const PropagatorParams& params);
/// decay rate factor delta; 1 when g2 = 0
double lq_delta(double q, const PropagatorParams& params);
/// throws PreconditionError naming the kappa condition
void check_lq_admissible(double q, const PropagatorParams& params);

struct LqDecayConfig
{
	double q = 4.0;
	double T = 1.0;
	double dt = 1e-3;
	int ensemble = 1;
	int record_every = 1;
	std::uint64_t seed = 0;
};

struct LqDecayReport
{
	double delta = 1.0;
	double c_hat = 0.0;
	std::vector<double> times;
	std::vector<std::vector<double>> series; ///< per path, |u|_{L^q}^q at each recorded time
	std::vector<bool> within_envelope;
	std::vector<bool> blown_up;
	double fraction = 0.0;
};

/**
 * Ensemble of shifted trajectories started at u0 with stationary Z. C-hat is
 * the 99th percentile over paths of the sup of |u|^q_{L^q} over [T/2, T]; a
 * path passes when |u(t)|^q <= exp(-g1 t delta / 4)|u0|^q + C-hat at every
 * recorded time.
 */
LqDecayReport lq_decay_run(const SpectralField& u0, const LqDecayConfig& cfg, const GalerkinSetup& setup);

// Coupled stationary runs ----------------------------------------------------

struct RunRow
{
	double t;
	double lq_q;           ///< |u|_{L^q}^q
	double h1_sq;          ///< |(-H)^{1/2} u|_{L^2}^2
	double h_inv_m_moment; ///< |(-H)^{1/(2m)} u|_{L^2}^{2m}
	double l4_4;           ///< |S_N u|_{L^4}^4
	int flags;             ///< 1 when the run blew up
};

struct CoupledConfig
{
	double q = 4.0;
	double m = 1.0;
	double T = 1.0;
	double dt = 1e-3;
	double burn_in = 0.0;
	int record_every = 1;
	double blowup_threshold = 1e6;
	std::uint64_t seed = 0;
};

struct RunStats
{
	std::vector<RunRow> rows;
	bool blown_up = false;
	stats::Estimate h_inv_m_moment;
	stats::Estimate h1_sq;
	stats::Estimate l4_4;
	/// state at the end of the run (or at the blow-up)
	SpectralField final_u;
	OUState final_z;
};

RunRow measure(const SpectralField& u, double t, double q, double m, const GalerkinSetup& setup);

/// u = 0 and stationary Z at t = 0; rows after burn_in only
RunStats coupled_stationary_run(const CoupledConfig& cfg, const GalerkinSetup& setup);

} // namespace sgpe
