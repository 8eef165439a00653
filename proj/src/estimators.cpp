#include "jm/estimators.hpp"

#include <cmath>
#include <numbers>

#include "jm/errors.hpp"

namespace jm {

McEstimate to_estimate(const Stats& s, int i, std::uint64_t seed) {
  return {s.mean(i), s.standard_error(i), s.count(), seed, s.rejected()};
}

double effective_variance(const TruncatedLaw& law, const SimConfig& sim) {
  if (sim.variance) return *sim.variance;
  if (auto v = law.model().variance_override()) return *v;
  return u_m(law.model(), law.M(), sim.t);
}

Experiment::Experiment(const ModelConfig& cfg, const RunOptions& run)
    : cfg_(cfg), sim_(cfg.sim), run_(run), law_(cfg.model, cfg.sim.M) {
  if (run_.n < 2) throw DomainError("need at least two paths");
  sim_.seed = run_.seed;
  variance_ = effective_variance(law_, sim_);
  check_coordinate_budget(law_, sim_);
}

Stats Experiment::reduce(const PathKernel& kernel, int k, bool paired) const {
  MapReduceOptions opt;
  opt.k = k;
  opt.paired = paired;
  opt.workers = run_.workers;
  Stats s = map_reduce(run_.n, kernel, opt);
  if (static_cast<double>(s.rejected()) > 0.1 * static_cast<double>(run_.n))
    throw TooManyRejections(std::to_string(s.rejected()) + " of " + std::to_string(run_.n) +
                            " paths have a singular covariance");
  return s;
}

McEstimate mc_expectation(const PathFunctional& fn, const Experiment& ex) {
  const Stats s = ex.reduce(
      [&](std::uint64_t i, double* out) {
        const PathRecord rec = ex.path(i);
        out[0] = fn(rec, regularize(rec, ex.variance()));
        return true;
      },
      1);
  return to_estimate(s, 0, ex.run().seed);
}

McEstimate mc_expectation(const DrawFunctional& fn, const Experiment& ex) {
  const Stats s = ex.reduce(
      [&](std::uint64_t i, double* out) {
        const PathDraws dr = ex.draws(i);
        out[0] = fn(dr, regularize(dr, ex.variance()));
        return true;
      },
      1);
  return to_estimate(s, 0, ex.run().seed);
}

double z_score(const McEstimate& a, const McEstimate& b) {
  const double diff = std::abs(a.mean - b.mean);
  const double se = std::sqrt(a.standard_error * a.standard_error + b.standard_error * b.standard_error);
  if (se == 0.0) return diff == 0.0 ? 0.0 : kInf;
  return diff / se;
}

namespace {

double sum_of(const double* x, int d) {
  double s = 0.0;
  for (int i = 0; i < d; ++i) s += x[i];
  return s;
}

IbpReport make_report(const Stats& s, std::vector<int> beta, std::uint64_t seed) {
  IbpReport r;
  r.beta = std::move(beta);
  r.direct = to_estimate(s, 0, seed);
  r.weighted = to_estimate(s, 1, seed);
  r.z = z_score(r.direct, r.weighted);
  r.mean_abs_weight = s.size() > 2 ? s.mean(2) : 0.0;
  return r;
}

std::vector<double> values(const std::vector<Jet>& f) {
  std::vector<double> v;
  for (const Jet& j : f) v.push_back(j.value());
  return v;
}

}  // namespace

double TestFunction::value(const double* x, int d) const { return derivative(0, x, d); }

double TestFunction::derivative(int m, const double* x, int d) const {
  const double s = sum_of(x, d);
  switch (kind) {
    case Kind::identity:
      return m == 0 ? s : m == 1 ? 1.0 : 0.0;
    case Kind::cos:
      return std::cos(s + 0.5 * std::numbers::pi * m);
    case Kind::sin:
      return std::sin(s + 0.5 * std::numbers::pi * m);
  }
  return 0.0;
}

TestFunction TestFunction::parse(const std::string& name) {
  if (name == "identity") return {Kind::identity};
  if (name == "cos") return {Kind::cos};
  if (name == "sin") return {Kind::sin};
  throw ConfigError("unknown test function '" + name + "' (identity, cos, sin)");
}

std::string TestFunction::name() const {
  switch (kind) {
    case Kind::identity:
      return "identity";
    case Kind::cos:
      return "cos";
    case Kind::sin:
      return "sin";
  }
  return "";
}

IbpReport duality_check(const Experiment& ex, FunctionalBuilder f, ProcessBuilder u) {
  if (!f) f = [](const PathRecord&, const std::vector<Jet>& fm) { return fm[0]; };
  if (!u) u = [](const PathRecord& rec, const Jet& F) { return gradient(F, rec.weights); };
  const Stats s = ex.reduce(
      [&](std::uint64_t i, double* out) {
        const PathRecord rec = ex.path(i);
        const Jet F = f(rec, regularize(rec, ex.variance()));
        const SimpleProcess U = u(rec, F);
        out[0] = scalar_product(gradient(F, rec.weights), U).value();
        const double div = divergence(U, rec.weights, rec.log_density).value();
        out[1] = F.value() * div;
        out[2] = std::abs(div);
        return true;
      },
      3);
  return make_report(s, {}, ex.run().seed);
}

IbpReport ibp_check(const Experiment& ex, const TestFunction& phi, const std::vector<int>& beta, FunctionalBuilder g) {
  if (beta.empty()) throw DomainError("beta must have at least one component");
  const int d = ex.law().dim();
  for (int b : beta)
    if (b < 1 || b > d) throw DomainError("beta components must lie in 1.." + std::to_string(d));
  const int m = static_cast<int>(beta.size());
  const Stats s = ex.reduce(
      [&](std::uint64_t i, double* out) {
        const PathRecord rec = ex.path(i);
        const std::vector<Jet> fm = regularize(rec, ex.variance());
        const Jet G = g ? g(rec, fm) : Jet(1.0);
        const IbpContext ctx(fm, rec.weights, rec.log_density);
        const double h = ctx.ibp_weight(beta, G).value;
        const auto x = values(fm);
        out[0] = phi.derivative(m, x.data(), d) * G.value();
        out[1] = phi.value(x.data(), d) * h;
        out[2] = std::abs(h);
        return true;
      },
      3);
  return make_report(s, beta, ex.run().seed);
}

FourierScan fourier_estimate(const Experiment& ex, const std::vector<double>& xi, std::vector<double> dir) {
  const int d = ex.law().dim();
  if (dir.empty()) {
    dir.assign(static_cast<std::size_t>(d), 0.0);
    dir[0] = 1.0;
  }
  if (static_cast<int>(dir.size()) != d) throw DomainError("direction must have d entries");
  const int k = 2 * static_cast<int>(xi.size());
  const Stats s = ex.reduce(
      [&](std::uint64_t i, double* out) {
        const PathDraws dr = ex.draws(i);
        const auto f = regularize(dr, ex.variance());
        double proj = 0.0;
        for (int r = 0; r < d; ++r) proj += dir[static_cast<std::size_t>(r)] * f[static_cast<std::size_t>(r)];
        for (std::size_t j = 0; j < xi.size(); ++j) {
          out[2 * j] = std::cos(xi[j] * proj);
          out[2 * j + 1] = std::sin(xi[j] * proj);
        }
        return true;
      },
      k, true);
  FourierScan scan;
  scan.n = s.count();
  scan.noise_floor = 1.0 / std::sqrt(static_cast<double>(s.count()));
  for (std::size_t j = 0; j < xi.size(); ++j) {
    const int a = static_cast<int>(2 * j), b = a + 1;
    FourierPoint p;
    p.xi = xi[j];
    p.re = s.mean(a);
    p.im = s.mean(b);
    p.modulus = std::hypot(p.re, p.im);
    const double n = static_cast<double>(s.count());
    if (p.modulus > 1e-12) {
      const double var = (p.re * p.re * s.variance(a) + p.im * p.im * s.variance(b) +
                          2.0 * p.re * p.im * s.covariance(static_cast<int>(j))) /
                         (p.modulus * p.modulus);
      p.standard_error = std::sqrt(std::max(var, 0.0) / n);
    } else {
      p.standard_error = std::sqrt((s.variance(a) + s.variance(b)) / n);
    }
    scan.points.push_back(p);
  }
  return scan;
}

SlopeFit fourier_slope(const FourierScan& scan, double xi_min, double xi_max, double factor) {
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  SlopeFit fit;
  for (const auto& p : scan.points) {
    if (p.xi <= 0.0 || p.xi < xi_min || p.xi > xi_max || p.modulus <= factor * scan.noise_floor) continue;
    const double x = std::log(p.xi), y = std::log(p.modulus);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++fit.points;
  }
  if (fit.points < 2) throw Inconclusive("fewer than two Fourier points above the noise floor");
  const double n = fit.points;
  fit.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return fit;
}

double pilot_std(const Experiment& ex) {
  MapReduceOptions opt;
  opt.workers = ex.run().workers;
  const std::int64_t n = std::min<std::int64_t>(ex.run().n, 10000);
  const Stats s = map_reduce(
      n,
      [&](std::uint64_t i, double* out) {
        out[0] = regularize(ex.draws(i), ex.variance())[0];
        return true;
      },
      opt);
  return std::sqrt(s.variance(0));
}

DensityScan density_via_ibp(const Experiment& ex, const std::vector<double>& y, double bandwidth) {
  if (ex.law().dim() != 1) throw DomainError("density reconstruction needs d = 1");
  DensityScan scan;
  const double sd = pilot_std(ex);
  if (!(sd > 0.0)) throw DomainError("F_M has zero spread");
  scan.width = 1e-3 * sd;
  scan.bandwidth = bandwidth > 0.0 ? bandwidth : 1.06 * sd * std::pow(static_cast<double>(ex.run().n), -0.2);
  const double w = scan.width, bw = scan.bandwidth;
  const double norm = 1.0 / (bw * std::sqrt(2.0 * std::numbers::pi));
  const std::size_t m = y.size();
  const std::array<int, 1> beta{1};
  const Stats s = ex.reduce(
      [&](std::uint64_t i, double* out) {
        const PathRecord rec = ex.path(i);
        const std::vector<Jet> fm = regularize(rec, ex.variance());
        const IbpContext ctx(fm, rec.weights, rec.log_density);
        const double h = ctx.ibp_weight(beta, Jet(1.0)).value;
        const double x = fm[0].value();
        for (std::size_t j = 0; j < m; ++j) {
          out[j] = h / (1.0 + std::exp(-(x - y[j]) / w));
          const double u = (x - y[j]) / bw;
          out[m + j] = norm * std::exp(-0.5 * u * u);
        }
        return true;
      },
      static_cast<int>(2 * m));
  for (std::size_t j = 0; j < m; ++j) {
    DensityPoint p;
    p.y = y[j];
    p.ibp = to_estimate(s, static_cast<int>(j), ex.run().seed);
    p.kde = to_estimate(s, static_cast<int>(m + j), ex.run().seed);
    scan.points.push_back(p);
  }
  for (std::size_t j = 0; j + 1 < m; ++j)
    scan.integral += 0.5 * (y[j + 1] - y[j]) * (scan.points[j].ibp.mean + scan.points[j + 1].ibp.mean);
  return scan;
}

}  // namespace jm
