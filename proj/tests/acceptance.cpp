// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>

#include "cli.hpp"
#include "jm/errors.hpp"
#include "jm/estimators.hpp"
#include "jm/poisson.hpp"
#include "jm/regularity.hpp"
#include "jm/rng.hpp"

using namespace jm;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Clock {
 public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count(); }

 private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

std::string fmt(double v, int digits = 3) {
  std::ostringstream os;
  os.precision(digits);
  os << v;
  return os.str();
}

int g_workers = 1;

Experiment experiment(const std::string& preset, int d, std::int64_t n, std::uint64_t seed,
                      const std::function<void(ModelConfig&)>& tweak = nullptr) {
  ModelConfig cfg = default_config(preset, d);
  if (tweak) {
    tweak(cfg);
    rebuild_model(cfg);
  }
  return Experiment(cfg, {n, seed, g_workers});
}

// |a - b| over the magnitude of the terms that produced them.
double rel_err(double a, double b, double scale) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), scale, 1e-300});
}

Outcome criterion1() {
  const Clock clock;
  Outcome o;
  for (const char* preset : {"gaussian-only", "example3-levy"}) {
    const auto r = duality_check(experiment(preset, 1, 100000, 101, [](ModelConfig& c) {
      c.sim.t = 1.0;
      c.sim.M = 8.0;
    }));
    o.pass &= r.pass();
    o.detail += std::string(preset) + " z=" + fmt(r.z) + ", ";
  }
  const double secs = clock.seconds();
  o.pass &= secs < 120.0;
  o.detail += fmt(secs) + " s (limit 120 s)";
  return o;
}

Outcome criterion2() {
  Outcome o;
  const TestFunction phi = TestFunction::parse("cos");
  for (const char* preset : {"gaussian-only", "example3-levy"}) {
    for (const std::vector<int>& beta : {std::vector<int>{1}, std::vector<int>{1, 1}}) {
      const int order = static_cast<int>(beta.size()) + 1;
      const auto r = ibp_check(experiment(preset, 1, 100000, 202, [&](ModelConfig& c) {
                                 c.sim.jet_order = std::max(c.sim.jet_order, order);
                               }),
                               phi, beta);
      o.pass &= r.pass();
      o.detail += std::string(preset) + (beta.size() == 1 ? " (1)" : " (1,1)") + " z=" + fmt(r.z) + ", ";
    }
  }
  // Per-path closed forms on the Gaussian preset with U = 0.7.
  const auto ex = experiment("gaussian-only", 1, 100000, 203, [](ModelConfig& c) {
    c.params = {{"U", 0.7}};
    c.sim.jet_order = 3;
  });
  const double u = ex.variance();
  double worst = 0.0;
  const std::array<int, 1> b1{1};
  const std::array<int, 2> b2{1, 1};
  for (std::uint64_t i = 0; i < 100000; ++i) {
    const PathRecord rec = ex.path(i);
    const IbpContext ctx(regularize(rec, u), rec.weights, rec.log_density);
    const double delta = rec.delta[0].value();
    const double h1 = delta / std::sqrt(u), h2 = (delta * delta - 1.0) / u;
    worst = std::max(worst, std::abs(ctx.ibp_weight(b1, Jet(1.0)).value - h1) / std::max(1.0, std::abs(h1)));
    worst = std::max(worst, std::abs(ctx.ibp_weight(b2, Jet(1.0)).value - h2) / std::max(1.0, std::abs(h2)));
  }
  o.pass &= worst <= 1e-12;
  o.detail += "Gaussian closed forms max err " + fmt(worst) + " (tol 1e-12)";
  return o;
}

struct IdentityCase {
  std::string preset;
  int d;
  double M;        // 0: preset default
  double t = 0.0;  // 0: preset default
};

Outcome criterion3() {
  const std::vector<IdentityCase> cases{{"gaussian-only", 1, 0},  {"one-jump", 1, 0}, {"example1-exp", 1, 0},
                                        {"example1-poly", 1, 0},  {"example2", 1, 0}, {"example3-levy", 1, 0},
                                        {"example1-exp", 2, 1.0, 0.5}, {"example2", 2, 1.0, 0.5}};
  const std::uint64_t per_case = 10000 / cases.size();
  double worst = 0.0;
  std::int64_t paths = 0, failures = 0;
  for (const auto& cs : cases) {
    const auto ex = experiment(cs.preset, cs.d, 2, 303, [&](ModelConfig& c) {
      if (cs.M > 0) c.sim.M = cs.M;
      if (cs.t > 0) c.sim.t = cs.t;
    });
    const int d = cs.d;
    for (std::uint64_t i = 0; i < per_case; ++i) {
      const PathRecord rec = ex.path(i);
      const auto f = regularize(rec, ex.variance());
      const auto& w = rec.weights;
      const auto df = gradient(f, w);
      double path_worst = 0.0;
      auto check = [&](double lhs, double rhs, double scale) { path_worst = std::max(path_worst, rel_err(lhs, rhs, scale)); };

      // Chain rule for D phi(F), phi(x) = sin(a . x).
      std::vector<double> a(static_cast<std::size_t>(d));
      for (int r = 0; r < d; ++r) a[static_cast<std::size_t>(r)] = 0.8 - 0.55 * r;
      Jet arg(0.0);
      for (int r = 0; r < d; ++r) arg += a[static_cast<std::size_t>(r)] * f[static_cast<std::size_t>(r)];
      const auto dphi = gradient(sin(arg), w);
      for (std::size_t k = 0; k < dphi.size(); ++k) {
        double rhs = 0.0, scale = 0.0;
        for (int r = 0; r < d; ++r) {
          const double term = std::cos(arg.value()) * a[static_cast<std::size_t>(r)] * df[static_cast<std::size_t>(r)][k].value();
          rhs += term;
          scale += std::abs(term);
        }
        check(dphi[k].value(), rhs, scale);
      }

      // delta(G U) = G delta(U) - <DG, U>.
      const Jet g = cos(f[0]);
      SimpleProcess uproc = df[0], gu;
      for (auto& ui : uproc) ui = ui * (1.0 + 0.5 * sin(f[0]));
      for (const Jet& ui : uproc) gu.push_back(g * ui);
      {
        const double t1 = g.value() * divergence(uproc, w, rec.log_density).value();
        const double t2 = scalar_product(gradient(g, w), uproc).value();
        check(divergence(gu, w, rec.log_density).value(), t1 - t2, std::abs(t1) + std::abs(t2));
      }

      // L phi(F) = sum d_r phi LF^r - sum d_rr' phi <DF^r, DF^r'>.
      {
        const auto lf = ou_operator(f, w, rec.log_density);
        const double lhs = divergence(gradient(sin(arg), w), w, rec.log_density).value();
        double rhs = 0.0, scale = 0.0;
        for (int r = 0; r < d; ++r) {
          const double t1 = a[static_cast<std::size_t>(r)] * std::cos(arg.value()) * lf[static_cast<std::size_t>(r)].value();
          rhs += t1;
          scale += std::abs(t1);
          for (int q = 0; q < d; ++q) {
            const double t2 = a[static_cast<std::size_t>(r)] * a[static_cast<std::size_t>(q)] * std::sin(arg.value()) *
                              scalar_product(df[static_cast<std::size_t>(r)], df[static_cast<std::size_t>(q)]).value();
            rhs += t2;
            scale += std::abs(t2);
          }
        }
        check(lhs, rhs, scale);
      }

      // H_r(F, G) by the recursion and by its expanded form.
      {
        const IbpContext ctx(f, w, rec.log_density);
        const Jet gg = 1.0 + 0.3 * cos(f[0]);
        for (int r = 1; r <= d; ++r) check(ctx.weight(r, gg).value(), ctx.weight_expanded(r, gg).value(), 0.0);
      }
      worst = std::max(worst, path_worst);
      failures += path_worst > 1e-10;
      ++paths;
    }
  }
  return {failures == 0, std::to_string(paths) + " paths over " + std::to_string(cases.size()) +
                             " preset configurations, max rel err " + fmt(worst) + " (tol 1e-10), " +
                             std::to_string(failures) + " failing paths"};
}

Outcome criterion4() {
  const std::vector<std::string> presets{"one-jump", "example3-levy", "gaussian-only", "example1-exp"};
  int violations = 0;
  double min_margin = kInf;
  for (int i = 0; i < 1000; ++i) {
    const int l = i % 4;
    const auto ex = experiment(presets[static_cast<std::size_t>(i / 4) % presets.size()], 1, 2, 404,
                               [&](ModelConfig& c) { c.sim.jet_order = l + 1; });
    const PathRecord rec = ex.path(static_cast<std::uint64_t>(i));
    const auto f = regularize(rec, ex.variance());
    // Random combinations of the path coordinates, so that DG and DH are not parallel to DF.
    std::vector<Jet> coords(rec.delta.begin(), rec.delta.end());
    for (const auto& z : rec.z)
      for (const Jet& zr : z)
        if (!zr.is_constant()) coords.push_back(zr);
    Philox4x32 rng(404, static_cast<std::uint64_t>(i));
    Jet u(0.0), v(0.0);
    for (const Jet& x : coords) {
      u += (2.0 * rng.uniform() - 1.0) * x;
      v += (2.0 * rng.uniform() - 1.0) * x;
    }
    const Jet a = f[0], b = sin(u) + 0.5 * u * f[0], c = exp(-0.5 * v * v);
    const double m = norm_inequality_margin(a, b, c, rec.weights, l).min_margin();
    min_margin = std::min(min_margin, m);
    violations += m < 0.0;
  }
  return {violations == 0, "1000 functional pairs, l = 0..3: " + std::to_string(violations) +
                               " violations, smallest margin " + fmt(min_margin)};
}

Outcome criterion5() {
  const std::vector<IdentityCase> cases{{"one-jump", 1, 1.5},     {"example1-exp", 1, 4.0}, {"example1-exp", 2, 1.0, 0.5},
                                        {"example2", 2, 1.0, 0.5}, {"example3-levy", 1, 8.0}};
  double worst_inv = 0.0, worst_col = 0.0;
  std::int64_t paths = 0, columns = 0;
  for (const auto& cs : cases) {
    const auto ex = experiment(cs.preset, cs.d, 2, 505, [&](ModelConfig& c) {
      c.sim.M = cs.M;
      if (cs.t > 0) c.sim.t = cs.t;
      c.sim.jet_order = 1;
    });
    const int d = cs.d;
    for (std::uint64_t p = 0; p < 2000; ++p) {
      const PathRecord rec = ex.path(p);
      const FlowMatrices fm = tangent_flows(rec.draws, ex.law(), ex.sim());
      worst_inv = std::max(worst_inv, (fm.y_inv_t() * fm.y_t() - Eigen::MatrixXd::Identity(d, d)).cwiseAbs().maxCoeff());
      for (int k = 0; k < rec.draws.jumps(); ++k) {
        if (rec.jump_var[static_cast<std::size_t>(k)] < 0) continue;
        const Eigen::MatrixXd col = fm.y_t() * fm.y_inv[static_cast<std::size_t>(k)] * fm.grad_z[static_cast<std::size_t>(k)];
        for (int r = 0; r < d; ++r)
          for (int i = 0; i < d; ++i)
            worst_col = std::max(worst_col, std::abs(rec.x_end[static_cast<std::size_t>(r)].partial(
                                                         {rec.jump_var[static_cast<std::size_t>(k)] + i}) -
                                                     col(r, i)));
        ++columns;
      }
      ++paths;
    }
  }
  return {worst_inv <= 1e-8 && worst_col <= 1e-8,
          std::to_string(paths) + " paths, " + std::to_string(columns) + " jump columns: max |dX/dZ - Y Yhat grad c| " +
              fmt(worst_col) + ", max |Yhat Y - I| " + fmt(worst_inv) + " (tol 1e-8)"};
}

double poisson_series(double mean, double u, double p) {
  double total = 0.0, w = std::exp(-mean);
  for (int k = 0; k < 400; ++k) {
    total += w / std::pow(k + u, p);
    w *= mean / (k + 1);
  }
  return total;
}

Outcome criterion6() {
  Outcome o;
  const LevyFunctional compact = example_functional("compact", 1.0);
  const FunctionalSampler sampler(compact);
  const std::vector<double> s{0.25, 0.5, 1.0, 2.0, 4.0};
  MapReduceOptions opt;
  opt.k = static_cast<int>(s.size());
  opt.workers = g_workers;
  const Stats st = map_reduce(
      100000,
      [&](std::uint64_t i, double* out) {
        Philox4x32 rng(606, i);
        const double x = sampler.sample(rng);
        for (std::size_t j = 0; j < s.size(); ++j) out[j] = std::exp(-s[j] * x);
        return true;
      },
      opt);
  double worst_z = 0.0;
  for (std::size_t j = 0; j < s.size(); ++j)
    worst_z = std::max(worst_z, std::abs(st.mean(static_cast<int>(j)) - laplace_closed_form(s[j], compact)) /
                                    st.standard_error(static_cast<int>(j)));
  o.pass &= worst_z <= 3.0;
  o.detail = "Laplace MC vs closed form max |z| " + fmt(worst_z) + " (limit 3)";

  // Both functionals count a Poisson(2) number of unit marks and have U = 2.
  for (const char* name : {"compact", "indicator"}) {
    const LevyFunctional lf = example_functional(name, 1.0);
    const double u = compensator_u(lf);
    for (double p : {1.0, 2.0}) {
      const auto b = inverse_moment_bound(lf, u, p);
      const double truth = poisson_series(2.0, u, p);
      const bool ok = b.bound >= truth && std::abs(b.laplace_value - truth) <= 1e-8 * truth;
      o.pass &= ok;
      o.detail += std::string("; ") + name + " p=" + fmt(p) + " bound " + fmt(b.bound) + " >= truth " + fmt(truth, 6) +
                  (ok ? "" : " (FAILED)");
    }
  }
  return o;
}

LevyFunctional exp_profile(int d, double c, double a, double gamma) {
  LevyFunctional lf;
  lf.d = d;
  lf.f = [c, a](double r) { return std::exp(-2.0 * a * std::pow(r, c)); };
  lf.g = [gamma](double) { return gamma; };
  return lf;
}

LevyFunctional poly_profile(int d, double p) {
  LevyFunctional lf;
  lf.d = d;
  lf.f = [p](double r) {
    const double c = 1.0 / (1.0 + std::pow(r, p));
    return c * c;
  };
  return lf;
}

Outcome criterion7() {
  Outcome o;
  const auto grid = log_grid(1.0, 6.0, 8);
  struct Finite {
    int d;
    double a, gamma;
  };
  double worst = 0.0;
  for (const Finite& cs : {Finite{1, 1.0, 0.5}, Finite{2, 1.0, 0.5}, Finite{3, 0.5, 1.0}, Finite{1, 0.25, 0.8}}) {
    const double truth = cs.gamma * unit_ball_volume(cs.d) / (2.0 * cs.a);
    const auto est = broadness_theta(exp_profile(cs.d, cs.d, cs.a, cs.gamma), grid);
    const double err = est.status == ThetaStatus::finite ? std::abs(est.theta / truth - 1.0) : kInf;
    worst = std::max(worst, err);
  }
  // The same through the presets' lower bounds cunder, gammaunder.
  for (int d : {1, 2}) {
    const auto m = make_preset("example1-exp", d, {{"c_exp", static_cast<double>(d)}});
    const double truth = 0.5 * unit_ball_volume(d) / 2.0;
    const auto est = broadness_theta(broadness_functional(*m), grid);
    worst = std::max(worst, est.status == ThetaStatus::finite ? std::abs(est.theta / truth - 1.0) : kInf);
  }
  o.pass &= worst <= 0.05;
  o.detail = "c = d: max rel err " + fmt(worst) + " (tol 0.05)";
  int flagged = 0, total = 0;
  for (const auto& [d, c] : {std::pair{2, 1.0}, std::pair{3, 1.0}, std::pair{3, 2.0}}) {
    flagged += broadness_theta(exp_profile(d, c, 1.0, 0.5), grid).status == ThetaStatus::infinite;
    ++total;
  }
  for (const auto& [d, p] : {std::pair{1, 2.0}, std::pair{1, 4.0}, std::pair{1, 8.0}, std::pair{2, 3.0}}) {
    flagged += broadness_theta(poly_profile(d, p), grid).status == ThetaStatus::infinite;
    ++total;
  }
  o.pass &= flagged == total;
  o.detail += "; Infinite flagged for " + std::to_string(flagged) + "/" + std::to_string(total) +
              " cases with c < d or polynomial decay";
  return o;
}

Outcome criterion8() {
  int checked = 0, mismatches = 0;
  auto expect = [&](const Smoothness& s, bool result, int k) {
    ++checked;
    if (s.result != result || (result && (s.infinite || s.k != k))) ++mismatches;
  };
  // Polynomial decay: k < p/d - d - 2 when p >= d(d + 3).
  for (int d : {1, 2, 3})
    for (double p = d + 0.5; p <= 40.0; p += 0.5) {
      const auto s = predicted_smoothness(regularity_inputs(*make_preset("example1-poly", d, {{"p", p}}), 1.0));
      int k = 0;
      while (k + 1 < p / d - d - 2.0) ++k;
      expect(s, p >= d * (d + 3.0), k);
    }
  // Rate-degenerate model, c = d: C^k when t > 8 a d (3k + 3d - 1) / r_d.
  for (int d : {1, 2})
    for (double a : {0.005, 0.01, 0.02})
      for (double t : {0.3, 0.5, 1.0, 3.0, 10.0}) {
        const auto s = predicted_smoothness(regularity_inputs(*make_preset("example2", d, {{"a", a}}), t));
        int k = -1;
        while (t > 8.0 * a * d * (3.0 * (k + 1) + 3.0 * d - 1.0) / unit_ball_volume(d)) ++k;
        expect(s, k >= 0, k);
      }
  // Stable-like model: k < 1/rho - 3 when 1/rho - 3 >= 1.
  for (int i = 2; i < 50; ++i) {
    const double rho = i / 100.0;
    const auto s = predicted_smoothness(regularity_inputs(*make_preset("example3-levy", 1, {{"rho", rho}}), 1.0));
    const double x = 1.0 / rho - 3.0;
    int k = 0;
    while (k + 1 < x) ++k;
    expect(s, x >= 1.0, k);
  }
  return {mismatches == 0, std::to_string(checked) + " parameter points over the three closed forms, " +
                               std::to_string(mismatches) + " mismatches"};
}

Outcome criterion9() {
  Outcome o;
  const Clock clock;
  {
    const auto ex = experiment("gaussian-only", 1, 100000, 909, [](ModelConfig& c) { c.params = {{"U", 0.7}}; });
    std::vector<double> xi;
    for (int j = 1; j <= 12; ++j) xi.push_back(0.25 * j);
    const auto scan = fourier_estimate(ex, xi);
    double worst = 0.0;
    for (const auto& p : scan.points)
      worst = std::max(worst, std::abs(p.modulus - std::exp(-0.5 * ex.variance() * p.xi * p.xi)) / p.standard_error);
    o.pass &= worst <= 3.0;
    o.detail = "Gaussian max |z| " + fmt(worst) + " (limit 3)";
  }
  {
    const auto ex = experiment("example3-levy", 1, 1000000, 910);
    std::vector<double> xi;
    for (int j = 1; j <= 30; ++j) xi.push_back(j);
    const auto scan = fourier_estimate(ex, xi);
    const auto fit = fourier_slope(scan, 1.0, 30.0);
    o.pass &= fit.slope <= -1.0;
    o.detail += "; example3-levy slope " + fmt(fit.slope) + " on " + std::to_string(fit.points) +
                " points above 3x noise floor (limit -1)";
  }
  const double secs = clock.seconds();
  o.pass &= secs < 600.0;
  o.detail += ", " + fmt(secs) + " s (limit 600 s)";
  return o;
}

Outcome criterion10() {
  Outcome o;
  const auto model = make_preset("example1-exp", 1, {});
  const ModelConfig cfg = default_config("example1-exp", 1);
  for (double M : {1.0, 2.0, 4.0}) {
    SimConfig sim = cfg.sim;
    sim.M = M;
    sim.seed = 1010;
    const TruncatedLaw outer(model, 2.0 * M);
    MapReduceOptions opt;
    opt.workers = g_workers;
    const Stats st = map_reduce(
        10000,
        [&](std::uint64_t i, double* out) {
          const auto c = simulate_coupled(outer, M, sim, i);
          out[0] = std::abs(c.x_m[0] - c.x_m2[0]);
          return true;
        },
        opt);
    const double eps = truncation_error(*model, M, sim.t);
    o.pass &= st.mean(0) <= eps;
    o.detail += (o.detail.empty() ? "" : "; ") + std::string("M=") + fmt(M) + " gap " + fmt(st.mean(0)) +
                " <= eps " + fmt(eps) + " (tail term alone " + fmt(truncation_error(*model, M, sim.t, 0.0)) + ")";
  }
  return o;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome criterion11() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / ("jm_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const std::vector<std::vector<std::string>> commands{
      {"simulate", "--preset", "example1-exp", "--n", "3000"},
      {"duality-check", "--preset", "example3-levy", "--n", "3000"},
      {"ibp-check", "--preset", "one-jump", "--beta", "1,1", "--n", "2500"},
      {"fourier-scan", "--preset", "example3-levy", "--n", "5000"},
      {"density-1d", "--preset", "gaussian-only", "--n", "5000"},
      {"laplace-check", "--n", "5000"},
      {"regularity-report", "--preset", "example1-poly"},
      {"theta-estimate", "--preset", "example1-exp"},
  };
  int identical = 0;
  std::string bad;
  for (const auto& cmd : commands) {
    std::vector<std::string> files;
    for (const char* workers : {"1", "3", "1"}) {
      const fs::path out = dir / (cmd[0] + "_" + std::to_string(files.size()) + ".out");
      auto args = cmd;
      args.insert(args.end(), {"--seed", "1111", "--workers", workers, "--out", out.string()});
      std::ostringstream sink, err;
      const int code = cli::run(args, sink, err);
      if (code == cli::kConfigError) throw std::runtime_error(cmd[0] + ": " + err.str());
      files.push_back(slurp(out));
    }
    if (!files[0].empty() && files[0] == files[1] && files[0] == files[2]) ++identical;
    else bad += " " + cmd[0];
  }
  fs::remove_all(dir);
  return {identical == static_cast<int>(commands.size()),
          std::to_string(identical) + "/" + std::to_string(commands.size()) +
              " subcommands byte-identical across reruns and --workers 1/3" + (bad.empty() ? "" : "; differ:" + bad)};
}

}  // namespace

int main() {
  g_workers = resolve_workers(0);
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"duality E<DF,U> = E F delta(U)", criterion1},
      {"integration by parts, orders 1 and 2", criterion2},
      {"algebraic identities per path", criterion3},
      {"Sobolev norm inequalities", criterion4},
      {"jets vs tangent flow", criterion5},
      {"Laplace transform and inverse moments", criterion6},
      {"broadness exponent regimes", criterion7},
      {"closed-form smoothness orders", criterion8},
      {"Fourier decay", criterion9},
      {"truncation coupling", criterion10},
      {"determinism across workers", criterion11},
  };
  std::cout << "workers: " << g_workers << "\n";
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const Clock clock;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("criterion %2zu %s  %s: %s [%.1f s]\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first,
                o.detail.c_str(), clock.seconds());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
