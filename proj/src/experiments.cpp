#include "sgpe/experiments.hpp"

#include "sgpe/cutoff.hpp"
#include "sgpe/dynamics.hpp"
#include "sgpe/gauss_field.hpp"
#include "sgpe/gibbs.hpp"
#include "sgpe/hermite.hpp"
#include "sgpe/parallel.hpp"
#include "sgpe/snapshot.hpp"

#include <json.hpp>
#include <openssl/sha.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>

namespace sgpe {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

// Config parsing ----------------------------------------------------------------

namespace {

std::string trim(const std::string& s)
{
	auto b = s.find_first_not_of(" \t\r");
	if (b == std::string::npos)
		return {};
	auto e = s.find_last_not_of(" \t\r");
	return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& v)
{
	std::istringstream is(v);
	T x{};
	is >> x;
	if (!is || !(is >> std::ws).eof())
		throw ConfigError("key '" + key + "': cannot parse '" + v + "' as a number");
	return x;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v)
{
	if (v.empty() || v[0] == '-')
		throw ConfigError("key '" + key + "': expected an unsigned integer, got '" + v + "'");
	std::size_t used = 0;
	std::uint64_t x = 0;
	try
	{
		x = std::stoull(v, &used, 0);
	}
	catch (const std::exception&)
	{
		used = 0;
	}
	if (used != v.size())
		throw ConfigError("key '" + key + "': expected an unsigned integer, got '" + v + "'");
	return x;
}

bool parse_bool(const std::string& key, const std::string& v)
{
	if (v == "true" || v == "1" || v == "on" || v == "yes")
		return true;
	if (v == "false" || v == "0" || v == "off" || v == "no")
		return false;
	throw ConfigError("key '" + key + "': expected a boolean, got '" + v + "'");
}

template <class T>
std::vector<T> parse_list(const std::string& key, const std::string& v)
{
	std::vector<T> out;
	std::stringstream ss(v);
	std::string item;
	while (std::getline(ss, item, ','))
		out.push_back(parse_number<T>(key, trim(item)));
	if (out.empty())
		throw ConfigError("key '" + key + "': empty list");
	return out;
}

} // namespace

void set_config_value(ExperimentConfig& c, const std::string& key, const std::string& value)
{
	using Setter = std::function<void(const std::string&)>;
	auto num = [&](auto& field) -> Setter {
		return [&field, key](const std::string& v) { field = parse_number<std::decay_t<decltype(field)>>(key, v); };
	};
	auto flag = [&](bool& field) -> Setter { return [&field, key](const std::string& v) { field = parse_bool(key, v); }; };
	auto text = [&](std::string& field) -> Setter { return [&field](const std::string& v) { field = v; }; };
	const std::map<std::string, Setter> setters{
	    {"subcommand", text(c.subcommand)},
	    {"mode", text(c.mode)},
	    {"N", num(c.level)},
	    {"deg_max", num(c.deg_max)},
	    {"M", num(c.nodes)},
	    {"gamma1", num(c.gamma1)},
	    {"gamma2", num(c.gamma2)},
	    {"q", num(c.q)},
	    {"m", num(c.m)},
	    {"dt", num(c.dt)},
	    {"T", num(c.T)},
	    {"burn_in", num(c.burn_in)},
	    {"ensemble", num(c.ensemble)},
	    {"chains", num(c.chains)},
	    {"seed", [&](const std::string& v) { c.seed = parse_u64(key, v); }},
	    {"out", text(c.out)},
	    {"gibbs_sn_inside", flag(c.gibbs_sn_inside)},
	    {"p", num(c.p)},
	    {"levels", [&](const std::string& v) { c.levels = parse_list<int>(key, v); }},
	    {"trials", num(c.trials)},
	    {"samples", num(c.samples)},
	    {"r", num(c.r)},
	    {"alpha", num(c.alpha)},
	    {"n_power", num(c.n_power)},
	    {"truncations", [&](const std::string& v) { c.truncations = parse_list<int>(key, v); }},
	    {"decay_window", [&](const std::string& v) { c.decay_window = parse_list<int>(key, v); }},
	    {"times", [&](const std::string& v) { c.times = parse_list<double>(key, v); }},
	    {"record_every", num(c.record_every)},
	    {"amplitude", num(c.amplitude)},
	    {"sampler", text(c.sampler)},
	    {"leapfrog", num(c.leapfrog)},
	    {"thin", num(c.thin)},
	    {"chain_burn_in", num(c.chain_burn_in)},
	    {"eps0", num(c.eps0)},
	    {"dyn_paths", num(c.dyn_paths)},
	    {"quartic", flag(c.quartic)},
	    {"counterterm", flag(c.counterterm)},
	    {"blowup_threshold", num(c.blowup_threshold)},
	};
	auto it = setters.find(key);
	if (it == setters.end())
		throw ConfigError("unknown key '" + key + "'");
	it->second(value);
	c.echo[key] = value;
}

ExperimentConfig parse_config(std::istream& in)
{
	ExperimentConfig c;
	std::string line;
	int lineno = 0;
	while (std::getline(in, line))
	{
		++lineno;
		auto hash = line.find('#');
		if (hash != std::string::npos)
			line.erase(hash);
		line = trim(line);
		if (line.empty())
			continue;
		auto eq = line.find('=');
		if (eq == std::string::npos)
			throw ConfigError("line " + std::to_string(lineno) + ": expected key=value");
		std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
		if (key.empty())
			throw ConfigError("line " + std::to_string(lineno) + ": empty key");
		set_config_value(c, key, value);
	}
	return c;
}

ExperimentConfig parse_config_text(const std::string& text)
{
	std::istringstream is(text);
	return parse_config(is);
}

namespace {

void require(bool ok, const std::string& msg)
{
	if (!ok)
		throw ConfigError(msg);
}

bool increasing(const std::vector<int>& v)
{
	for (std::size_t i = 1; i < v.size(); ++i)
		if (v[i] <= v[i - 1])
			return false;
	return true;
}

int effective_deg(const ExperimentConfig& c) { return c.deg_max < 0 ? c.level : c.deg_max; }

} // namespace

void validate_config(const ExperimentConfig& c)
{
	static const std::vector<std::string> subs{"basis-check", "cutoff-probe", "wick-verify",
	                                           "semigroup-check", "simulate", "gibbs"};
	require(std::find(subs.begin(), subs.end(), c.subcommand) != subs.end(),
	        "subcommand must be one of basis-check, cutoff-probe, wick-verify, semigroup-check, simulate, gibbs (got '" +
	            c.subcommand + "')");
	require(c.gamma1 > 0.0 && std::isfinite(c.gamma1), "gamma1 must be positive");
	require(std::isfinite(c.gamma2), "gamma2 must be finite");
	require(c.level >= 0 && c.level <= 512, "N must be in [0, 512]");
	const int deg = effective_deg(c);
	require(deg >= 0 && deg <= 512, "deg_max must be in [0, 512]");
	require(c.nodes == 0 || c.nodes >= 2 * deg + 1, "M must be at least 2*deg_max+1 = " + std::to_string(2 * deg + 1));
	require(!c.out.empty(), "out must not be empty");

	if (c.subcommand == "cutoff-probe")
	{
		require(c.p >= 1.0, "p must be >= 1");
		require(c.levels.size() >= 2 && c.levels.front() >= 1 && increasing(c.levels),
		        "levels must be increasing positive integers (at least two)");
		require(c.truncations.size() >= 3 && c.truncations.front() >= 1 && increasing(c.truncations),
		        "truncations must be increasing positive integers (at least three)");
		require(c.decay_window.size() == 2 && c.decay_window[0] >= 0 && c.decay_window[1] - c.decay_window[0] >= 2,
		        "decay_window must be two degrees at least 2 apart");
		require(c.r >= 1.0 && c.n_power >= 1 && c.trials >= 1, "need r >= 1, n_power >= 1, trials >= 1");
		require(c.alpha >= 0.0, "alpha must be nonnegative");
	}
	else if (c.subcommand == "wick-verify")
	{
		require(c.level >= 1, "wick-verify needs N >= 1");
		require(c.samples >= 10000, "wick-verify needs samples >= 10000");
		require(c.p >= 2.0 && std::fmod(c.p, 2.0) == 0.0, "p must be an even integer");
	}
	else if (c.subcommand == "semigroup-check")
	{
		require(!c.times.empty(), "times must be nonempty");
		PropagatorParams pp{c.gamma1, c.gamma2};
		for (double t : c.times)
		{
			std::ostringstream msg;
			msg << "time " << t << " outside the Mehler domain (0, pi/(4|gamma2|))";
			require(t > 0.0 && t < mehler_time_limit(pp), msg.str());
		}
		require(c.p >= 1.0, "p must be >= 1");
	}
	else if (c.subcommand == "simulate")
	{
		require(c.mode == "lq-decay" || c.mode == "coupled-stationary",
		        "simulate mode must be lq-decay or coupled-stationary");
		require(c.dt > 0.0 && c.T > 0.0 && c.burn_in >= 0.0 && c.burn_in < c.T, "need dt > 0 and 0 <= burn_in < T");
		require(c.record_every >= 1, "record_every must be >= 1");
		require(c.q >= 2.0, "q must be >= 2");
		if (c.mode == "lq-decay")
		{
			require(c.ensemble >= 1, "ensemble must be >= 1");
			PropagatorParams pp{c.gamma1, c.gamma2};
			try
			{
				check_lq_admissible(c.q, pp);
			}
			catch (const PreconditionError& e)
			{
				throw ConfigError(e.what());
			}
		}
		else
		{
			require(c.m > 0.0, "m must be positive");
			require(c.blowup_threshold > 0.0, "blowup_threshold must be positive");
		}
	}
	else if (c.subcommand == "gibbs")
	{
		require(c.mode == "sample" || c.mode == "fd-compare", "gibbs mode must be sample or fd-compare");
		require(c.sampler == "mala" || c.sampler == "hmc", "sampler must be mala or hmc");
		require(c.chains >= 1 && c.samples >= 4 && c.thin >= 1 && c.chain_burn_in >= 0 && c.eps0 > 0.0 &&
		            c.leapfrog >= 1,
		        "need chains >= 1, samples >= 4, thin >= 1, chain_burn_in >= 0, eps0 > 0, leapfrog >= 1");
		if (c.mode == "fd-compare")
		{
			require(c.chains >= 2, "fd-compare needs at least two chains for split-Rhat");
			require(c.gibbs_sn_inside, "fd-compare needs gibbs_sn_inside = true (the dynamics apply S_N)");
			require(c.dt > 0.0 && c.T > 0.0 && c.burn_in >= 0.0 && c.burn_in < c.T, "need dt > 0 and 0 <= burn_in < T");
			require(c.dyn_paths >= 1 && c.record_every >= 1, "need dyn_paths >= 1 and record_every >= 1");
		}
	}
}

std::string git_blob_hash(const std::string& bytes)
{
	std::string payload = "blob " + std::to_string(bytes.size()) + std::string(1, '\0') + bytes;
	unsigned char md[SHA_DIGEST_LENGTH];
	SHA1(reinterpret_cast<const unsigned char*>(payload.data()), payload.size(), md);
	std::ostringstream os;
	for (unsigned char b : md)
		os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(b);
	return os.str();
}

// Artifact helpers ---------------------------------------------------------------

namespace {

std::string fmt(double x)
{
	std::ostringstream os;
	os << std::setprecision(17) << x;
	return os.str();
}

std::string fmt(int x) { return std::to_string(x); }
std::string fmt(std::size_t x) { return std::to_string(x); }
std::string fmt(const std::string& s) { return s; }
std::string fmt(const char* s) { return s; }

class Csv
{
  public:
	Csv(const fs::path& path, const std::vector<std::string>& header) : os_(path)
	{
		if (!os_)
			throw std::runtime_error("cannot write " + path.string());
		row_vec(header);
	}

	template <class... Ts>
	void row(const Ts&... xs)
	{
		row_vec({fmt(xs)...});
	}

  private:
	void row_vec(const std::vector<std::string>& cells)
	{
		for (std::size_t i = 0; i < cells.size(); ++i)
			os_ << (i ? "," : "") << cells[i];
		os_ << '\n';
	}
	std::ofstream os_;
};

struct Context
{
	const ExperimentConfig& cfg;
	fs::path dir;
	std::ostream& log;
	RunResult& result;

	fs::path artifact(const std::string& name)
	{
		result.artifacts.push_back(name);
		return dir / name;
	}

	void write_json(const std::string& name, const json& j)
	{
		std::ofstream os(artifact(name));
		os << j.dump(2) << '\n';
	}

	void flag(const std::string& why)
	{
		result.exit_code = exit_flagged;
		if (!result.message.empty())
			result.message += "; ";
		result.message += why;
		log << "FLAG: " << why << '\n';
	}
};

double jnum(double x) { return std::isfinite(x) ? x : std::nan(""); }

// basis-check ---------------------------------------------------------------------

void run_basis_check(Context& ctx)
{
	const int deg = effective_deg(ctx.cfg);
	BasisTable bt(deg, GridWeight::gauss, ctx.cfg.nodes);
	double gram = 0.0;
	for (std::size_t l = 0; l < mode_count(deg); ++l)
	{
		auto col = analyze(synthesize(SpectralField::basis_vector(deg, mode_at(l)), bt), bt, deg);
		for (std::size_t k = 0; k < col.size(); ++k)
			gram = std::max(gram, std::abs(col[k] - (k == l ? 1.0 : 0.0)));
	}
	RngStream rng(ctx.cfg.seed, 0xba5e);
	SpectralField f(deg);
	for (std::size_t i = 0; i < f.size(); ++i)
		f[i] = rng.complex_normal();
	GridField g = synthesize(f, bt);
	RealGrid mod(g.m);
	for (std::size_t n = 0; n < g.values.size(); ++n)
		mod.values[n] = std::norm(g.values[n]);
	double parseval = std::abs(bt.integrate(mod.values) - f.norm_sq()) / f.norm_sq();
	double roundtrip = std::sqrt((analyze(g, bt, deg) - f).norm_sq() / f.norm_sq());

	Csv csv(ctx.artifact("basis_check.csv"), {"metric", "value"});
	csv.row("deg_max", deg);
	csv.row("nodes", bt.nodes());
	csv.row("gram_max_deviation", gram);
	csv.row("parseval_rel_error", parseval);
	csv.row("roundtrip_rel_error", roundtrip);
	ctx.log << "basis-check deg_max=" << deg << " gram=" << gram << " parseval=" << parseval << '\n';
	if (!(gram < 1e-10))
		ctx.flag("Gram deviation " + fmt(gram) + " >= 1e-10");
	if (!(parseval < 1e-8))
		ctx.flag("Parseval error " + fmt(parseval) + " >= 1e-8");
}

// cutoff-probe ----------------------------------------------------------------------

void run_cutoff_probe(Context& ctx)
{
	const auto& c = ctx.cfg;
	Csv csv(ctx.artifact("cutoff_probe.csv"), {"probe", "x", "value"});
	json summary;

	auto decay = hermite_lp_decay_probe(c.p, c.decay_window[0], c.decay_window[1]);
	for (std::size_t i = 0; i < decay.lambdas.size(); ++i)
		csv.row("hermite_lp_norm", decay.lambdas[i], decay.norms[i]);
	summary["hermite_decay_slope"] = jnum(decay.slope);

	auto sn = sn_norm_probe(c.p, c.levels, c.trials, c.seed);
	for (std::size_t i = 0; i < sn.levels.size(); ++i)
		csv.row("sn_norm_ratio", sn.levels[i], sn.values[i]);
	summary["sn_norm_slope"] = jnum(sn.slope);

	auto rho = rho_growth_probe(c.p, c.levels);
	for (std::size_t i = 0; i < rho.levels.size(); ++i)
		csv.row("rho_sq_lp_norm", rho.levels[i], rho.values[i]);
	summary["rho_growth_slope"] = jnum(rho.slope);

	auto kern = kernel_norm_probe(c.r, c.alpha, c.n_power, c.truncations);
	for (std::size_t i = 0; i < kern.truncations.size(); ++i)
		csv.row("kernel_norm", kern.truncations[i], kern.norms[i]);
	summary["kernel_increment_ratio"] = jnum(kern.increment_ratio);
	summary["kernel_alpha_threshold"] = 1.0 - 2.0 / c.r;
	ctx.write_json("cutoff_probe.json", summary);
	ctx.log << "cutoff-probe " << summary.dump() << '\n';
}

// wick-verify -------------------------------------------------------------------------

void run_wick_verify(Context& ctx)
{
	const auto& c = ctx.cfg;
	const std::vector<std::array<double, 2>> pts{{0.0, 0.0}, {0.5, -0.3}, {1.2, 0.7}, {-2.0, 1.0}, {0.0, 2.5}};
	RngStream rng(c.seed, 0x3c);
	auto rows = wick_centering(c.level, pts, static_cast<std::size_t>(c.samples), rng);
	Csv cen(ctx.artifact("wick_centering.csv"), {"node_x1", "node_x2", "k", "l", "mean", "se", "predicted"});
	std::size_t bad = 0;
	for (auto& r : rows)
	{
		cen.row(r.x1, r.x2, r.k, r.l, r.value.mean, r.value.se, r.predicted);
		bad += std::abs(r.value.mean - r.predicted) > 4.0 * r.value.se;
	}
	if (bad)
		ctx.flag(std::to_string(bad) + " Wick centering rows beyond 4 SE");

	Csv cov(ctx.artifact("chaos_covariance.csv"),
	        {"x1", "x2", "y1", "y2", "observable", "empirical", "se", "predicted"});
	const std::array<std::pair<int, int>, 3> pairs{{{1, 1}, {1, 2}, {0, 1}}};
	for (std::size_t pi = 0; pi < pairs.size(); ++pi)
	{
		const auto& x = pts[pairs[pi].first];
		const auto& y = pts[pairs[pi].second];
		RngStream r(c.seed, 0xc0 + pi);
		auto cc = chaos_covariance_check(c.level, x[0], x[1], y[0], y[1], static_cast<std::size_t>(c.samples), r);
		cov.row(x[0], x[1], y[0], y[1], "z2z2", cc.second.mean, cc.second.se, cc.second_predicted);
		cov.row(x[0], x[1], y[0], y[1], "z3z3", cc.third.mean, cc.third.se, cc.third_predicted);
		cov.row(x[0], x[1], y[0], y[1], "z2z3", cc.mixed.mean, cc.mixed.se, 0.0);
		if (std::abs(cc.second.mean - cc.second_predicted) > 5.0 * cc.second.se ||
		    std::abs(cc.third.mean - cc.third_predicted) > 5.0 * cc.third.se)
			ctx.flag("chaos covariance beyond 5 SE");
		if (std::abs(cc.mixed.mean) > 4.0 * cc.mixed.se)
			ctx.flag("mixed-order covariance beyond 4 SE");
	}

	Csv nel(ctx.artifact("nelson.csv"), {"order", "p", "x1", "x2", "ratio"});
	for (int n = 0; n <= 3; ++n)
	{
		RngStream r(c.seed, 0xe1 + n);
		double ratio = nelson_probe(n, static_cast<int>(c.p), c.level, pts[1][0], pts[1][1],
		                            static_cast<std::size_t>(c.samples), r);
		nel.row(n, static_cast<int>(c.p), pts[1][0], pts[1][1], ratio);
		if (ratio > 1.05)
			ctx.flag("Nelson ratio " + fmt(ratio) + " > 1.05 at order " + std::to_string(n));
	}
	ctx.log << "wick-verify N=" << c.level << " samples=" << c.samples << '\n';
}

// semigroup-check -------------------------------------------------------------------

void run_semigroup_check(Context& ctx)
{
	const auto& c = ctx.cfg;
	const int deg = effective_deg(c);
	PropagatorParams pp{c.gamma1, c.gamma2};
	BasisTable bt(deg, GridWeight::gauss, c.nodes > 0 ? c.nodes : 16 * deg + 1);
	Csv csv(ctx.artifact("semigroup.csv"), {"k1", "k2", "t", "rel_error"});
	double worst = 0.0;
	for (double t : c.times)
		for (std::size_t i = 0; i < mode_count(deg); ++i)
		{
			auto e = SpectralField::basis_vector(deg, mode_at(i));
			auto viaK = mehler_apply(synthesize(e, bt), t, pp, bt);
			auto exact = synthesize(apply_semigroup(e, t, pp), bt);
			double num = 0.0, den = 0.0;
			for (std::size_t n = 0; n < exact.values.size(); ++n)
			{
				num = std::max(num, std::abs(viaK.values[n] - exact.values[n]));
				den = std::max(den, std::abs(exact.values[n]));
			}
			csv.row(mode_at(i).k1, mode_at(i).k2, t, num / den);
			worst = std::max(worst, num / den);
		}

	// integrator with the nonlinearity off against the exact linear flow
	StepOptions lin;
	lin.terms = {false, false, false, false};
	lin.noise = NoiseMode::off;
	auto setup = GalerkinSetup::make(deg, pp, lin);
	RngStream rng(c.seed, 0x5e);
	SpectralField u0(deg);
	for (std::size_t i = 0; i < u0.size(); ++i)
		u0[i] = rng.complex_normal();
	ShiftedState s = make_shifted_state(u0, setup, rng);
	const int steps = 100;
	const double dt = c.times.back() / steps;
	for (int n = 0; n < steps; ++n)
		s = step_shifted(std::move(s), dt, setup, rng);
	double linear = std::sqrt((s.u - apply_semigroup(u0, steps * dt, pp)).norm_sq() / u0.norm_sq());

	std::vector<double> ts{1e-3, 3e-3, 1e-2, 3e-2, 1e-1};
	Csv sm(ctx.artifact("smoothing.csv"), {"s", "t", "ratio"});
	json slopes;
	for (double sv : {1.0, 2.0})
	{
		auto r = smoothing_probe(sv, c.p, std::max(deg, 1), ts, c.trials, c.seed, pp);
		for (std::size_t i = 0; i < ts.size(); ++i)
			sm.row(sv, ts[i], r.ratios[i]);
		slopes.push_back(r.slope);
	}
	json summary{{"max_mehler_rel_error", worst}, {"linear_step_rel_error", linear}, {"smoothing_slopes", slopes}};
	ctx.write_json("semigroup.json", summary);
	ctx.log << "semigroup-check " << summary.dump() << '\n';
	if (!(worst <= 1e-7))
		ctx.flag("Mehler/multiplier disagreement " + fmt(worst) + " > 1e-7");
	if (!(linear <= 1e-12))
		ctx.flag("linear integrator error " + fmt(linear) + " > 1e-12");
}

// simulate ---------------------------------------------------------------------------

StepOptions options_from(const ExperimentConfig& c)
{
	StepOptions o;
	o.renormalize = c.counterterm;
	if (!c.quartic)
		o.terms = {false, false, false, false};
	return o;
}

SpectralField initial_datum(const ExperimentConfig& c, int level)
{
	RngStream rng(c.seed, 0x00d0);
	SpectralField u(level);
	for (std::size_t i = 0; i < u.size(); ++i)
		u[i] = rng.complex_normal() / mode_at(i).eigenvalue_sq();
	double n = std::sqrt(u.norm_sq());
	if (n > 0.0)
		u *= c.amplitude / n;
	return u;
}

void run_lq_decay(Context& ctx)
{
	const auto& c = ctx.cfg;
	auto setup = GalerkinSetup::make(c.level, {c.gamma1, c.gamma2}, options_from(c), c.nodes);
	LqDecayConfig lc;
	lc.q = c.q;
	lc.T = c.T;
	lc.dt = c.dt;
	lc.ensemble = c.ensemble;
	lc.record_every = c.record_every;
	lc.seed = c.seed;
	auto rep = lq_decay_run(initial_datum(c, c.level), lc, setup);
	Csv csv(ctx.artifact("lq_decay.csv"), {"path", "t", "lq_q"});
	for (std::size_t p = 0; p < rep.series.size(); ++p)
		for (std::size_t n = 0; n < rep.series[p].size(); ++n)
			csv.row(p, rep.times[n], rep.series[p][n]);
	std::size_t blown = std::count(rep.blown_up.begin(), rep.blown_up.end(), true);
	json summary{{"q", c.q},
	             {"kappa", jnum(lq_kappa(setup.params))},
	             {"delta", rep.delta},
	             {"c_hat", jnum(rep.c_hat)},
	             {"fraction_within_envelope", rep.fraction},
	             {"paths", rep.series.size()},
	             {"blown_up", blown}};
	ctx.write_json("lq_decay.json", summary);
	ctx.log << "lq-decay " << summary.dump() << '\n';
	if (blown)
		ctx.flag(std::to_string(blown) + " paths blew up");
}

void run_coupled(Context& ctx)
{
	const auto& c = ctx.cfg;
	auto setup = GalerkinSetup::make(c.level, {c.gamma1, c.gamma2}, options_from(c), c.nodes);
	CoupledConfig cc;
	cc.q = c.q;
	cc.m = c.m;
	cc.T = c.T;
	cc.dt = c.dt;
	cc.burn_in = c.burn_in;
	cc.record_every = c.record_every;
	cc.blowup_threshold = c.blowup_threshold;
	cc.seed = c.seed;
	auto rs = coupled_stationary_run(cc, setup);
	Csv csv(ctx.artifact("timeseries.csv"), {"t", "lq_q", "h1_sq", "h_inv_m_moment", "l4_4", "flags"});
	for (auto& r : rs.rows)
		csv.row(r.t, r.lq_q, r.h1_sq, r.h_inv_m_moment, r.l4_4, r.flags);
	save_snapshot(ctx.artifact("final_u.snap").string(), {rs.final_z.t, rs.final_u});
	save_snapshot(ctx.artifact("final_z.snap").string(), {rs.final_z.t, rs.final_z.coeffs});
	json summary{{"blown_up", rs.blown_up},
	             {"rows", rs.rows.size()},
	             {"h_inv_m_moment", {{"mean", rs.h_inv_m_moment.mean}, {"se", rs.h_inv_m_moment.se}}},
	             {"h1_sq", {{"mean", rs.h1_sq.mean}, {"se", rs.h1_sq.se}}},
	             {"l4_4", {{"mean", rs.l4_4.mean}, {"se", rs.l4_4.se}}}};
	ctx.write_json("coupled_stationary.json", summary);
	ctx.log << "coupled-stationary " << summary.dump() << '\n';
	if (rs.blown_up)
		ctx.flag("run blew up at t = " + fmt(rs.rows.empty() ? 0.0 : rs.rows.back().t));
}

// gibbs ------------------------------------------------------------------------------

ChainConfig chain_config(const ExperimentConfig& c)
{
	ChainConfig cc;
	cc.sampler = c.sampler == "hmc" ? Sampler::hmc : Sampler::mala;
	cc.chains = c.chains;
	cc.burn_in = c.chain_burn_in;
	cc.samples = c.samples;
	cc.thin = c.thin;
	cc.eps0 = c.eps0;
	cc.leapfrog = c.leapfrog;
	cc.seed = c.seed;
	return cc;
}

void run_gibbs_sample(Context& ctx)
{
	const auto& c = ctx.cfg;
	GibbsTarget target(c.level, {c.quartic, c.counterterm, c.gibbs_sn_inside}, c.nodes);
	auto obs = standard_observables(c.level);
	auto run = run_chains(target, chain_config(c), obs, static_cast<std::size_t>(c.samples));
	Csv csv(ctx.artifact("chain_summary.csv"), {"chain", "observable", "mean", "se", "acceptance", "eps"});
	json rh;
	for (std::size_t o = 0; o < obs.size(); ++o)
	{
		for (std::size_t ch = 0; ch < run.values[o].size(); ++ch)
		{
			auto e = stats::batch_means(run.values[o][ch]);
			csv.row(ch, obs[o].name, e.mean, e.se, run.acceptance[ch], run.eps[ch]);
		}
		rh[obs[o].name] = c.chains > 1 ? stats::split_rhat(run.values[o]) : 1.0;
	}
	{
		std::ofstream os(ctx.artifact("samples.snap"), std::ios::binary);
		for (std::size_t i = 0; i < run.trace.size(); ++i)
			write_snapshot(os, {static_cast<double>(i), run.trace[i]});
	}
	ctx.write_json("gibbs_sample.json", {{"split_rhat", rh}, {"acceptance", run.acceptance}, {"eps", run.eps}});
	ctx.log << "gibbs sample: " << run.trace.size() << " thinned states of chain 0\n";
}

void run_fd_compare(Context& ctx)
{
	const auto& c = ctx.cfg;
	FdConfig fc;
	fc.chain = chain_config(c);
	fc.dt = c.dt;
	fc.T = c.T;
	fc.burn_in = c.burn_in;
	fc.record_every = c.record_every;
	fc.dyn_paths = c.dyn_paths;
	GibbsOptions go{c.quartic, c.counterterm, c.gibbs_sn_inside};
	auto rep = fluctuation_dissipation_compare({c.gamma1, c.gamma2}, c.level, go, fc, standard_observables(c.level));
	Csv csv(ctx.artifact("fd_compare.csv"), {"observable", "mcmc_mean", "mcmc_se", "dyn_mean", "dyn_se", "z", "rhat"});
	json rows = json::array();
	for (auto& r : rep.rows)
	{
		csv.row(r.observable, r.mcmc.mean, r.mcmc.se, r.dyn.mean, r.dyn.se, r.z, r.rhat);
		rows.push_back({{"observable", r.observable},
		                {"mcmc_mean", r.mcmc.mean},
		                {"mcmc_se", r.mcmc.se},
		                {"dyn_mean", jnum(r.dyn.mean)},
		                {"dyn_se", jnum(r.dyn.se)},
		                {"z", jnum(r.z)},
		                {"split_rhat", jnum(r.rhat)}});
	}
	json j{{"rows", rows},
	       {"max_split_rhat", jnum(rep.max_rhat)},
	       {"max_abs_z", jnum(rep.max_abs_z)},
	       {"inconclusive", rep.inconclusive},
	       {"dynamics_blown_up", rep.dyn_blown_up},
	       {"acceptance", rep.acceptance}};
	ctx.write_json("fd_compare.json", j);
	ctx.log << "fd-compare max|z|=" << rep.max_abs_z << " max Rhat=" << rep.max_rhat << '\n';
	if (rep.inconclusive)
		ctx.flag("inconclusive: split-Rhat " + fmt(rep.max_rhat) + (rep.dyn_blown_up ? " (dynamics blew up)" : ""));
}

void write_manifest(const ExperimentConfig& c, const std::string& config_text, const fs::path& dir,
                    const RunResult& res, double wall)
{
	json cfg = json::object();
	for (auto& [k, v] : c.echo)
		cfg[k] = v;
	json m{{"subcommand", c.subcommand},
	       {"mode", c.mode},
	       {"config", cfg},
	       {"config_hash", git_blob_hash(config_text)},
	       {"seed", c.seed},
	       {"threads", thread_count()},
	       {"artifacts", res.artifacts},
	       {"exit_code", res.exit_code},
	       {"message", res.message},
	       {"wall_time_s", wall}};
	std::ofstream os(dir / "manifest.json");
	os << m.dump(2) << '\n';
}

} // namespace

RunResult run_experiment(const ExperimentConfig& cfg, const std::string& config_text, std::ostream& log)
{
	RunResult res;
	auto t0 = std::chrono::steady_clock::now();
	try
	{
		validate_config(cfg);
	}
	catch (const ConfigError& e)
	{
		res.exit_code = exit_config;
		res.message = e.what();
		log << "config error: " << e.what() << '\n';
		return res;
	}
	fs::path dir(cfg.out);
	std::error_code ec;
	fs::create_directories(dir, ec);
	if (ec)
	{
		res.exit_code = exit_config;
		res.message = "cannot create output directory " + dir.string() + ": " + ec.message();
		log << res.message << '\n';
		return res;
	}
	Context ctx{cfg, dir, log, res};
	try
	{
		if (cfg.subcommand == "basis-check")
			run_basis_check(ctx);
		else if (cfg.subcommand == "cutoff-probe")
			run_cutoff_probe(ctx);
		else if (cfg.subcommand == "wick-verify")
			run_wick_verify(ctx);
		else if (cfg.subcommand == "semigroup-check")
			run_semigroup_check(ctx);
		else if (cfg.subcommand == "simulate")
			cfg.mode == "lq-decay" ? run_lq_decay(ctx) : run_coupled(ctx);
		else
			cfg.mode == "sample" ? run_gibbs_sample(ctx) : run_fd_compare(ctx);
	}
	catch (const std::invalid_argument& e)
	{
		res.exit_code = exit_config;
		res.message = e.what();
		log << "precondition error: " << e.what() << '\n';
	}
	catch (const std::exception& e)
	{
		res.exit_code = exit_flagged;
		res.message = e.what();
		log << "runtime error: " << e.what() << '\n';
	}
	double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
	write_manifest(cfg, config_text, dir, res, wall);
	return res;
}

} // namespace sgpe
