#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace sgpe {

/// Exit codes of the experiment runner.
enum ExitCode : int
{
	exit_ok = 0,
	exit_config = 2,  ///< invalid configuration or violated precondition
	exit_flagged = 3, ///< ran, but a runtime flag was raised (blow-up, failed check, inconclusive)
};

class ConfigError : public std::runtime_error
{
  public:
	using std::runtime_error::runtime_error;
};

/**
 * Flat key=value experiment description. Lines starting with '#' and blank
 * lines are ignored; a trailing '# ...' after a value is a comment too.
 * Lists are comma separated.
 */
struct ExperimentConfig
{
	std::string subcommand;
	std::string mode; ///< simulate: lq-decay | coupled-stationary; gibbs: sample | fd-compare

	int level = 8;    ///< N
	int deg_max = -1; ///< defaults to N
	int nodes = 0;    ///< quadrature nodes per axis, 0 = default for the grid
	double gamma1 = 1.0;
	double gamma2 = 0.0;
	double q = 4.0;
	double m = 1.0;
	double dt = 1e-3;
	double T = 1.0;
	double burn_in = 0.0;
	int ensemble = 8;
	int chains = 4;
	std::uint64_t seed = 0;
	std::string out = "out";
	bool gibbs_sn_inside = true;

	// probe and sampler settings
	double p = 4.0;
	std::vector<int> levels{4, 8, 16};
	int trials = 8;
	long samples = 10000;
	double r = 2.0;
	double alpha = 0.0;
	int n_power = 1;
	std::vector<int> truncations{16, 32, 64, 128};
	std::vector<int> decay_window{8, 128};
	std::vector<double> times{0.05, 0.2};
	int record_every = 1;
	double amplitude = 1.0;
	std::string sampler = "mala";
	int leapfrog = 8;
	int thin = 1;
	long chain_burn_in = 2000;
	double eps0 = 0.5;
	int dyn_paths = 4;
	bool quartic = true;
	bool counterterm = true;
	double blowup_threshold = 1e6;

	/// key/value pairs exactly as read (after overrides), for the manifest
	std::map<std::string, std::string> echo;
};

ExperimentConfig parse_config(std::istream& in);
ExperimentConfig parse_config_text(const std::string& text);

/// sets one key (used by the parser and by command-line overrides)
void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value);

/// checks every precondition of the selected subcommand; throws ConfigError
void validate_config(const ExperimentConfig& cfg);

/// git blob hash: sha1("blob <size>\0" + bytes), lowercase hex
std::string git_blob_hash(const std::string& bytes);

struct RunResult
{
	int exit_code = exit_ok;
	std::string message;
	std::vector<std::string> artifacts;
};

/**
 * Runs the configured subcommand, writing artifacts and manifest.json into
 * cfg.out. config_text is the raw configuration used for the manifest hash.
 * Never throws for configuration problems: they become exit_config.
 */
RunResult run_experiment(const ExperimentConfig& cfg, const std::string& config_text, std::ostream& log);

} // namespace sgpe
