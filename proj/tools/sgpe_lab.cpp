// sgpe_lab: experiment runner for the Hermite-Galerkin SGPE lab.
//
//   sgpe_lab --config run.cfg [--seed N] [--out DIR] [--threads K]
//
// Exit codes: 0 success, 2 invalid configuration, 3 run flagged.

#include "sgpe/experiments.hpp"
#include "sgpe/parallel.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

int main(int argc, char** argv)
{
	CLI::App app{"Hermite-spectral stochastic Gross-Pitaevskii lab"};
	std::string config_path, out;
	std::uint64_t seed = 0;
	int threads = -1;
	app.add_option("--config", config_path, "flat key=value configuration file")->required();
	auto* seed_opt = app.add_option("--seed", seed, "override the configured seed");
	auto* out_opt = app.add_option("--out", out, "output directory");
	app.add_option("--threads", threads, "worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
	try
	{
		app.parse(argc, argv);
	}
	catch (const CLI::ParseError& e)
	{
		int rc = app.exit(e);
		return rc == 0 ? 0 : sgpe::exit_config;
	}

	if (threads < 0)
		if (const char* env = std::getenv("SGPE_THREADS"))
			threads = std::atoi(env);
	sgpe::set_thread_count(threads < 0 ? 0u : static_cast<unsigned>(threads));

	std::ifstream in(config_path, std::ios::binary);
	if (!in)
	{
		std::cerr << "cannot read config " << config_path << '\n';
		return sgpe::exit_config;
	}
	std::stringstream buf;
	buf << in.rdbuf();
	const std::string text = buf.str();

	sgpe::ExperimentConfig cfg;
	try
	{
		cfg = sgpe::parse_config_text(text);
		if (*seed_opt)
			sgpe::set_config_value(cfg, "seed", std::to_string(seed));
		if (*out_opt)
			sgpe::set_config_value(cfg, "out", out);
	}
	catch (const sgpe::ConfigError& e)
	{
		std::cerr << "config error: " << e.what() << '\n';
		return sgpe::exit_config;
	}

	auto res = sgpe::run_experiment(cfg, text, std::cout);
	if (res.exit_code != sgpe::exit_ok)
		std::cerr << res.message << '\n';
	return res.exit_code;
}
