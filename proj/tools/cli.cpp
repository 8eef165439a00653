#include "cli.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>

#include "jm/errors.hpp"
#include "jm/estimators.hpp"
#include "jm/poisson.hpp"
#include "jm/regularity.hpp"

namespace jm::cli {

using nlohmann::json;

namespace {

struct Options {
  std::string preset, config, out;
  int d = 1;
  std::int64_t n = 10000;
  std::uint64_t seed = 1;
  int workers = 0;
  int jet_order = 2;
  double M = 8.0, t = 1.0;
  double xi_min = 1.0, xi_max = 30.0;
  int xi_steps = 30;
  double xi = 10.0;
  std::string beta = "1";
  std::string phi = "cos";
  double y_min = -4.0, y_max = 4.0;
  int y_steps = 33;
  double a_max = 1e6;
  std::string functional = "compact";
  std::vector<double> s{0.5, 1.0, 2.0};
  std::vector<double> p{1.0, 2.0};
  const CLI::App* active = nullptr;
  bool has(const std::string& flag) const {
    const CLI::Option* opt = active ? active->get_option_no_throw(flag) : nullptr;
    return opt && opt->count() > 0;
  }
};

struct Result {
  std::string data;
  bool pass = true;
  std::string summary;
  json config;
};

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// name, params..., estimate, se, n, seed
class Csv {
 public:
  Csv(std::vector<std::string> params, const json& config) : params_(std::move(params)) {
    os_ << "# config " << config.dump() << "\n";
    os_ << "name";
    for (const auto& p : params_) os_ << "," << p;
    os_ << ",estimate,se,n,seed\n";
  }
  void row(const std::string& name, const std::vector<std::string>& params, double estimate, std::optional<double> se,
           std::int64_t n, std::uint64_t seed) {
    os_ << name;
    for (const auto& p : params) os_ << "," << p;
    os_ << "," << num(estimate) << "," << (se ? num(*se) : "") << "," << n << "," << seed << "\n";
  }
  void row(const std::string& name, const std::vector<std::string>& params, const McEstimate& e) {
    row(name, params, e.mean, e.standard_error, e.n_paths, e.seed);
  }
  std::string str() const { return os_.str(); }

 private:
  std::vector<std::string> params_;
  std::ostringstream os_;
};

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

// JSON config first, then command-line flags on top of it.
ModelConfig resolve_config(const Options& o) {
  json doc = json::object();
  if (!o.config.empty()) doc = read_json_file(o.config);
  else if (o.preset.empty()) throw ConfigError("either --preset or --config is required");
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  if (!o.preset.empty()) doc["coefficients"] = o.preset;
  if (o.has("--d")) doc["d"] = o.d;
  if (o.has("--t")) doc["t"] = o.t;
  if (o.has("--M")) doc["M"] = o.M;
  if (o.has("--jet-order")) doc["jet_order"] = o.jet_order;
  if (o.has("--seed")) doc["seed"] = o.seed;
  return load_config(doc);
}

RunOptions run_options(const Options& o, const ModelConfig& cfg) {
  return {o.n, cfg.sim.seed, resolve_workers(o.workers)};
}

std::vector<int> parse_beta(const std::string& s) {
  std::vector<int> beta;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      beta.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("--beta: expected a comma separated list of integers, got '" + s + "'");
    }
  }
  if (beta.empty()) throw ConfigError("--beta must not be empty");
  return beta;
}

std::string join(const std::vector<int>& v, char sep) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? std::string(1, sep) : "") + std::to_string(v[i]);
  return s;
}

std::vector<double> linear_grid(double lo, double hi, int steps, const char* what) {
  if (steps < 1) throw ConfigError(std::string(what) + " steps must be >= 1");
  if (steps > 1 && !(hi > lo)) throw ConfigError(std::string(what) + " range must be increasing");
  std::vector<double> g;
  for (int i = 0; i < steps; ++i) g.push_back(steps == 1 ? lo : lo + (hi - lo) * i / (steps - 1));
  return g;
}

std::string z_line(const char* what, const IbpReport& r) {
  std::ostringstream os;
  os << what << ": direct " << num(r.direct.mean) << " weighted " << num(r.weighted.mean) << " z " << num(r.z)
     << (r.pass() ? " (pass)" : " (FAIL)");
  return os.str();
}

Result cmd_simulate(const Options& o) {
  const ModelConfig cfg = resolve_config(o);
  const Experiment ex(cfg, run_options(o, cfg));
  const int d = cfg.d;
  const Stats s = ex.reduce(
      [&](std::uint64_t i, double* out) {
        const PathDraws dr = ex.draws(i);
        const auto f = regularize(dr, ex.variance());
        for (int r = 0; r < d; ++r) {
          out[r] = dr.x_end[static_cast<std::size_t>(r)];
          out[d + r] = f[static_cast<std::size_t>(r)];
        }
        out[2 * d] = dr.jumps();
        out[2 * d + 1] = dr.active_jumps();
        return true;
      },
      2 * d + 2);
  Result res;
  res.config = to_json(cfg);
  Csv csv({"component"}, res.config);
  for (int r = 0; r < d; ++r) csv.row("x_end", {std::to_string(r + 1)}, to_estimate(s, r, ex.run().seed));
  for (int r = 0; r < d; ++r) csv.row("f_m", {std::to_string(r + 1)}, to_estimate(s, d + r, ex.run().seed));
  csv.row("jumps", {""}, to_estimate(s, 2 * d, ex.run().seed));
  csv.row("active_jumps", {""}, to_estimate(s, 2 * d + 1, ex.run().seed));
  csv.row("variance", {""}, ex.variance(), std::nullopt, s.count(), ex.run().seed);
  res.data = csv.str();
  res.summary = "simulate: " + std::to_string(s.count()) + " paths, mean X_t[1] = " + num(s.mean(0));
  return res;
}

void write_report(Csv& csv, const IbpReport& r) {
  csv.row("direct", {}, r.direct);
  csv.row("weighted", {}, r.weighted);
  csv.row("mean_abs_weight", {}, r.mean_abs_weight, std::nullopt, r.direct.n_paths, r.direct.seed);
  csv.row("z", {}, r.z, std::nullopt, r.direct.n_paths, r.direct.seed);
}

Result cmd_duality(const Options& o) {
  const ModelConfig cfg = resolve_config(o);
  const IbpReport r = duality_check(Experiment(cfg, run_options(o, cfg)));
  Result res;
  res.config = to_json(cfg);
  Csv csv({}, res.config);
  write_report(csv, r);
  res.data = csv.str();
  res.pass = r.pass();
  res.summary = z_line("duality-check", r);
  return res;
}

Result cmd_ibp(const Options& o, std::ostream& err) {
  ModelConfig cfg = resolve_config(o);
  const std::vector<int> beta = parse_beta(o.beta);
  const int need = static_cast<int>(beta.size()) + 1;
  if (cfg.sim.jet_order < need) {
    err << "ibp-check: raising jet order from " << cfg.sim.jet_order << " to " << need << "\n";
    cfg.sim.jet_order = need;
  }
  const TestFunction phi = TestFunction::parse(o.phi);
  const IbpReport r = ibp_check(Experiment(cfg, run_options(o, cfg)), phi, beta);
  Result res;
  res.config = to_json(cfg);
  Csv csv({"beta", "phi"}, res.config);
  const std::vector<std::string> params{join(beta, ';'), phi.name()};
  csv.row("direct", params, r.direct);
  csv.row("weighted", params, r.weighted);
  csv.row("mean_abs_weight", params, r.mean_abs_weight, std::nullopt, r.direct.n_paths, r.direct.seed);
  csv.row("z", params, r.z, std::nullopt, r.direct.n_paths, r.direct.seed);
  res.data = csv.str();
  res.pass = r.pass();
  res.summary = z_line("ibp-check", r);
  return res;
}

Result cmd_fourier(const Options& o, std::ostream& err) {
  const ModelConfig cfg = resolve_config(o);
  const Experiment ex(cfg, run_options(o, cfg));
  const auto xi = linear_grid(o.xi_min, o.xi_max, o.xi_steps, "xi");
  const FourierScan scan = fourier_estimate(ex, xi);
  Result res;
  res.config = to_json(cfg);
  Csv csv({"xi"}, res.config);
  const std::uint64_t seed = ex.run().seed;
  for (const auto& p : scan.points) csv.row("modulus", {num(p.xi)}, p.modulus, p.standard_error, scan.n, seed);
  csv.row("noise_floor", {""}, scan.noise_floor, std::nullopt, scan.n, seed);
  res.summary = "fourier-scan: " + std::to_string(xi.size()) + " frequencies";
  try {
    const SlopeFit fit = fourier_slope(scan, o.xi_min, o.xi_max);
    csv.row("slope", {""}, fit.slope, std::nullopt, scan.n, seed);
    res.summary += ", log-log slope " + num(fit.slope) + " on " + std::to_string(fit.points) + " points";
  } catch (const Inconclusive& e) {
    err << "fourier-scan: no slope: " << e.what() << "\n";
  }
  res.data = csv.str();
  return res;
}

Result cmd_density(const Options& o) {
  const ModelConfig cfg = resolve_config(o);
  const Experiment ex(cfg, run_options(o, cfg));
  const DensityScan scan = density_via_ibp(ex, linear_grid(o.y_min, o.y_max, o.y_steps, "y"));
  Result res;
  res.config = to_json(cfg);
  res.config["smoothing_width"] = scan.width;
  res.config["kde_bandwidth"] = scan.bandwidth;
  Csv csv({"y"}, res.config);
  for (const auto& p : scan.points) csv.row("ibp", {num(p.y)}, p.ibp);
  for (const auto& p : scan.points) csv.row("kde", {num(p.y)}, p.kde);
  csv.row("integral", {""}, scan.integral, std::nullopt, o.n, ex.run().seed);
  res.data = csv.str();
  res.summary = "density-1d: trapezoid integral of the IBP estimate " + num(scan.integral);
  return res;
}

Result cmd_laplace(const Options& o) {
  const double t = o.has("--t") ? o.t : 1.0;
  const LevyFunctional lf = example_functional(o.functional, t);
  const FunctionalSampler sampler(lf);
  const double u = compensator_u(lf);
  const std::size_t ns = o.s.size(), np = o.p.size();
  for (double p : o.p)
    if (!(p > 0.0)) throw ConfigError("--p values must be > 0");
  MapReduceOptions mr;
  mr.k = static_cast<int>(ns + np);
  mr.workers = resolve_workers(o.workers);
  if (o.n < 2) throw ConfigError("--n must be >= 2");
  const Stats st = map_reduce(
      o.n,
      [&](std::uint64_t i, double* out) {
        Philox4x32 rng(o.seed, i);
        const double x = sampler.sample(rng);
        for (std::size_t j = 0; j < ns; ++j) out[j] = std::exp(-o.s[j] * x);
        for (std::size_t j = 0; j < np; ++j) out[ns + j] = std::pow(x + u, -o.p[j]);
        return true;
      },
      mr);
  Result res;
  res.config = {{"functional", o.functional}, {"t", t}, {"U", u}, {"s", o.s}, {"p", o.p}, {"seed", o.seed}};
  Csv csv({"arg"}, res.config);
  int failed = 0;
  for (std::size_t j = 0; j < ns; ++j) {
    const auto e = to_estimate(st, static_cast<int>(j), o.seed);
    const double exact = laplace_closed_form(o.s[j], lf);
    csv.row("laplace_mc", {num(o.s[j])}, e);
    csv.row("laplace_closed_form", {num(o.s[j])}, exact, std::nullopt, e.n_paths, o.seed);
    if (std::abs(e.mean - exact) > 3.0 * e.standard_error) ++failed;
  }
  for (std::size_t j = 0; j < np; ++j) {
    const auto e = to_estimate(st, static_cast<int>(ns + j), o.seed);
    const auto b = inverse_moment_bound(lf, u, o.p[j]);
    csv.row("inverse_moment_mc", {num(o.p[j])}, e);
    csv.row("inverse_moment_bound", {num(o.p[j])}, b.bound, std::nullopt, e.n_paths, o.seed);
    csv.row("inverse_moment_laplace", {num(o.p[j])}, b.laplace_value, std::nullopt, e.n_paths, o.seed);
    if (e.mean - 3.0 * e.standard_error > b.bound) ++failed;
    if (std::abs(e.mean - b.laplace_value) > 3.0 * e.standard_error) ++failed;
  }
  res.data = csv.str();
  res.pass = failed == 0;
  res.summary = "laplace-check: " + std::to_string(failed) + " failed comparisons" + (res.pass ? " (pass)" : " (FAIL)");
  return res;
}

std::string json_text(const json& j) { return j.dump(2) + "\n"; }

Result cmd_regularity(const Options& o) {
  const ModelConfig cfg = resolve_config(o);
  json rep = regularity_report(regularity_inputs(*cfg.model, cfg.sim.t), o.xi);
  rep["config"] = to_json(cfg);
  Result res;
  res.config = rep["config"];
  res.data = json_text(rep);
  res.summary = "regularity-report: k = " + rep["k"].dump();
  return res;
}

Result cmd_theta(const Options& o) {
  const ModelConfig cfg = resolve_config(o);
  if (!(o.a_max >= 1e3)) throw ConfigError("--a-max must be >= 1e3");
  LevyFunctional lf = broadness_functional(*cfg.model);
  lf.t = cfg.sim.t;
  const ThetaEstimate est = broadness_theta(lf, log_grid(1.0, std::log10(o.a_max), 8));
  auto finite_or_inf = [](double v) { return std::isfinite(v) ? json(v) : json("inf"); };
  const char* status = est.status == ThetaStatus::finite     ? "finite"
                       : est.status == ThetaStatus::infinite ? "infinite"
                                                             : "inconclusive";
  json rep = {{"schema", 1}, {"status", status}, {"theta", finite_or_inf(est.theta)}, {"a", est.a},
              {"ratio", est.ratio}, {"growth", est.growth}, {"growth_limit", est.growth_limit}, {"config", to_json(cfg)}};
  Result res;
  res.config = rep["config"];
  res.data = json_text(rep);
  res.summary = std::string("theta-estimate: ") + status + ", theta = " + num(est.theta);
  return res;
}

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write '" + path + "'");
  f << text;
}

void add_common(CLI::App* sub, Options& o, bool model = true) {
  sub->add_option("--out", o.out, "Output file; <out>.meta.json is written next to it");
  sub->add_option("--workers", o.workers, "Worker threads (default: JM_WORKERS, then cores)");
  sub->add_option("--n", o.n, "Number of paths")->capture_default_str();
  sub->add_option("--seed", o.seed, "Random seed");
  sub->add_option("--t", o.t, "Time horizon");
  if (!model) return;
  sub->add_option("--preset", o.preset, "Model preset");
  sub->add_option("--config", o.config, "JSON config file");
  sub->add_option("--d", o.d, "Dimension");
  sub->add_option("--jet-order", o.jet_order, "Jet truncation order");
  sub->add_option("--M", o.M, "Truncation radius");
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Weighted Malliavin calculus for jump SDEs: simulation, IBP checks and regularity reports"};
  app.require_subcommand(1);
  Options o;
  std::map<std::string, std::function<Result()>> handlers;

  auto* sim = app.add_subcommand("simulate", "Moments of X_t, F_M and jump counts");
  add_common(sim, o);
  handlers["simulate"] = [&] { return cmd_simulate(o); };

  auto* dual = app.add_subcommand("duality-check", "E <DF, DF> against E F delta(DF)");
  add_common(dual, o);
  handlers["duality-check"] = [&] { return cmd_duality(o); };

  auto* ibp = app.add_subcommand("ibp-check", "E d_beta phi(F_M) against E phi(F_M) H_beta");
  add_common(ibp, o);
  ibp->add_option("--beta", o.beta, "Multi-index, e.g. 1 or 1,1")->capture_default_str();
  ibp->add_option("--phi", o.phi, "Test function: identity, cos or sin")->capture_default_str();
  handlers["ibp-check"] = [&] { return cmd_ibp(o, err); };

  auto* four = app.add_subcommand("fourier-scan", "Empirical characteristic function of F_M");
  add_common(four, o);
  four->add_option("--xi-min", o.xi_min)->capture_default_str();
  four->add_option("--xi-max", o.xi_max)->capture_default_str();
  four->add_option("--xi-steps", o.xi_steps)->capture_default_str();
  handlers["fourier-scan"] = [&] { return cmd_fourier(o, err); };

  auto* dens = app.add_subcommand("density-1d", "Density of F_M by IBP and by KDE (d = 1)");
  add_common(dens, o);
  dens->add_option("--y-min", o.y_min)->capture_default_str();
  dens->add_option("--y-max", o.y_max)->capture_default_str();
  dens->add_option("--y-steps", o.y_steps)->capture_default_str();
  handlers["density-1d"] = [&] { return cmd_density(o); };

  auto* lap = app.add_subcommand("laplace-check", "Laplace transform and inverse moments of a Poisson functional");
  add_common(lap, o, false);
  lap->add_option("--functional", o.functional, "compact, indicator or exp")->capture_default_str();
  lap->add_option("--s", o.s, "Laplace arguments")->delimiter(',');
  lap->add_option("--p", o.p, "Inverse moment orders")->delimiter(',');
  handlers["laplace-check"] = [&] { return cmd_laplace(o); };

  auto* reg = app.add_subcommand("regularity-report", "Predicted smoothness and truncation exponents (JSON)");
  add_common(reg, o);
  reg->add_option("--xi", o.xi, "Frequency for the truncation choice")->capture_default_str();
  handlers["regularity-report"] = [&] { return cmd_regularity(o); };

  auto* theta = app.add_subcommand("theta-estimate", "Broadness exponent of the model (JSON)");
  add_common(theta, o);
  theta->add_option("--a-max", o.a_max, "Largest a on the grid")->capture_default_str();
  handlers["theta-estimate"] = [&] { return cmd_theta(o); };

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kPass : kConfigError;
  }

  o.active = app.get_subcommands().front();
  const std::string command = o.active->get_name();
  const std::string started = utc_now();
  const auto t0 = std::chrono::steady_clock::now();
  Result res;
  try {
    res = handlers.at(command)();
  } catch (const ConfigError& e) {
    err << command << ": configuration error: " << e.what() << "\n";
    return kConfigError;
  } catch (const DomainError& e) {
    err << command << ": invalid input: " << e.what() << "\n";
    return kConfigError;
  } catch (const CoordinateBudgetExceeded& e) {
    err << command << ": configuration error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    err << command << ": " << e.what() << "\n";
    return kFail;
  }
  const int code = res.pass ? kPass : kFail;
  err << res.summary << "\n";
  if (o.out.empty() || o.out == "-") {
    out << res.data;
    return code;
  }
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::vector<std::string> args(argv + 1, argv + argc);
  const json meta = {{"schema", 1},
                     {"command", command},
                     {"args", args},
                     {"started_utc", started},
                     {"finished_utc", utc_now()},
                     {"elapsed_seconds", elapsed},
                     {"workers", resolve_workers(o.workers)},
                     {"exit_code", code},
                     {"summary", res.summary},
                     {"config", res.config}};
  try {
    write_file(o.out, res.data);
    write_file(o.out + ".meta.json", json_text(meta));
  } catch (const ConfigError& e) {
    err << command << ": " << e.what() << "\n";
    return kConfigError;
  }
  return code;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"jm"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace jm::cli
