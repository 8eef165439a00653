#include "jm/poisson.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "jm/errors.hpp"
#include "jm/quadrature.hpp"

namespace jm {

namespace {

constexpr double kSplitLevel = 50.0;
constexpr double kHeadS = 1e-12;

// Radial integral of `fn` over a <= r <= b, split at the declared breaks.
double shell_integral(const LevyFunctional& lf, const std::function<double(double)>& fn, double a, double b) {
  b = std::min(b, lf.support);
  if (!(b > a)) return 0.0;
  std::vector<double> cuts{a};
  for (double r : lf.breaks)
    if (r > a && r < b) cuts.push_back(r);
  std::sort(cuts.begin() + 1, cuts.end());
  cuts.push_back(b);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) total += radial_integral(fn, lf.d, cuts[i], cuts[i + 1], 1e-10);
  return total;
}

double alpha_on(const LevyFunctional& lf, double s, double a, double b) {
  auto fn = [&](double r) { return -std::expm1(-s * lf.f(r)) * lf.g(r) * lf.h(r); };
  return shell_integral(lf, fn, a, b);
}

double alpha_full(const LevyFunctional& lf, double s) { return alpha_on(lf, s, 0.0, kInf); }

// Finite differences of alpha against ln s on s = 10^4, 10^6, ..., 10^16.
std::vector<double> log_slopes(const LevyFunctional& lf) {
  std::vector<double> s, a;
  for (int k = 4; k <= 16; k += 2) {
    s.push_back(std::pow(10.0, k));
    a.push_back(alpha_full(lf, s.back()));
  }
  std::vector<double> out;
  for (std::size_t i = 0; i + 1 < s.size(); ++i) out.push_back((a[i + 1] - a[i]) / std::log(s[i + 1] / s[i]));
  return out;
}

// int s^{p-1} e^{-e(s)} ds over [kHeadS, s_hi] in the variable v = ln s, plus the head.
double mellin_piece(double p, const std::function<double(double)>& exponent, double s_hi) {
  auto fn = [&](double v) {
    const double s = std::exp(v);
    return std::exp(p * v - exponent(s));
  };
  const double head = std::pow(kHeadS, p) / p;
  return head + integrate(fn, std::log(kHeadS), std::log(s_hi), 1e-10);
}

}  // namespace

double LevyFunctional::nu(double a, double b) const {
  return shell_integral(*this, [&](double r) { return g(r) * h(r); }, a, b);
}

double LevyFunctional::integral_f(double a, double b) const {
  return shell_integral(*this, [&](double r) { return f(r) * g(r) * h(r); }, a, b);
}

void check_functional(const LevyFunctional& lf) {
  if (lf.d < 1 || lf.d > 3) throw DomainError("functional dimension must be 1, 2 or 3");
  if (!(lf.t > 0.0)) throw DomainError("horizon t must be > 0");
  if (!lf.f) throw DomainError("functional f is missing");
  double v = 0.0;
  try {
    v = lf.integral_f(0.0, kInf);
  } catch (const QuadratureFailure& e) {
    throw DomainError(std::string("int f dnu_g is not finite: ") + e.what());
  }
  if (!std::isfinite(v)) throw DomainError("int f dnu_g is not finite");
}

AlphaBeta alpha_beta(double s, const LevyFunctional& lf) {
  if (s < 0.0) throw DomainError("alpha_beta needs s >= 0");
  if (s == 0.0) return {};
  AlphaBeta r;
  const double inner = alpha_on(lf, s, 0.0, lf.ball);
  r.beta = alpha_on(lf, s, lf.ball, kInf);
  r.alpha = inner + r.beta;
  return r;
}

double laplace_closed_form(double s, const LevyFunctional& lf) {
  if (s < 0.0) throw DomainError("laplace transform needs s >= 0");
  if (s == 0.0) return 1.0;
  return std::exp(-lf.t * alpha_on(lf, s, 0.0, lf.ball));
}

double compensator_u(const LevyFunctional& lf) { return lf.t * lf.integral_f(lf.ball, kInf); }

TailIntegral i_t_p(const LevyFunctional& lf, double p) {
  if (p < 1.0) throw DomainError("I_t^p needs p >= 1");
  TailIntegral out;
  const auto sl = log_slopes(lf);
  const double last = sl.back(), prev = sl[sl.size() - 2];
  const bool settled = std::abs(last - prev) <= 0.05 * std::max(std::abs(last), 1e-3);
  out.slope = last;
  if (!settled && (last < prev || lf.t * last <= p))
    throw Inconclusive("growth of alpha(s) / ln s has not settled (slopes " + std::to_string(prev) + ", " +
                       std::to_string(last) + ")");
  if (lf.t * last <= p) return out;

  auto level = [&](double v) { return lf.t * alpha_full(lf, std::exp(v)); };
  double lo = std::log(kHeadS), hi = 0.0;
  while (level(hi) < kSplitLevel) {
    lo = hi;
    hi += 5.0;
    if (hi > 700.0) throw Inconclusive("t alpha(s) does not reach the split level");
  }
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (level(mid) < kSplitLevel ? lo : hi) = mid;
  }
  out.split = std::exp(hi);
  out.tail_bound = std::exp(-kSplitLevel + p * hi) / (lf.t * last - p);
  out.value = mellin_piece(p, [&](double s) { return lf.t * alpha_full(lf, s); }, out.split) + out.tail_bound;
  out.status = TailStatus::finite;
  return out;
}

InverseMomentBound inverse_moment_bound(const LevyFunctional& lf, double u, double p) {
  if (u < 0.0) throw DomainError("inverse moment bound needs U >= 0");
  InverseMomentBound r;
  r.integral = i_t_p(lf, p);
  const double gp = std::tgamma(p);
  r.bound = r.integral.status == TailStatus::finite ? r.integral.value / gp : kInf;
  if (u > 0.0) {
    auto expo = [&](double s) { return s * u + lf.t * alpha_on(lf, s, 0.0, lf.ball); };
    // e^{-s U} s^{p-1} is below e^{-750} past this point.
    const double s_hi = (750.0 + 10.0 * p) / u;
    r.laplace_value = mellin_piece(p, expo, s_hi) / gp;
  } else {
    r.laplace_value = r.bound;
  }
  return r;
}

FunctionalSampler::FunctionalSampler(LevyFunctional lf) : lf_(std::move(lf)) {
  radius_ = std::min(lf_.ball, lf_.support);
  if (!std::isfinite(radius_)) throw DomainError("sampling N_t(1_{B_g} f) needs a bounded ball or support");
  mass_ = lf_.t * lf_.nu(0.0, radius_);
  const int n = 4000;
  for (int i = 0; i <= n; ++i) {
    const double r = radius_ * i / n;
    envelope_ = std::max(envelope_, lf_.g(r) * lf_.h(r) * std::pow(r, lf_.d - 1));
  }
  for (double r : lf_.breaks)
    if (r <= radius_) {
      envelope_ = std::max(envelope_, lf_.g(r) * lf_.h(r) * std::pow(r, lf_.d - 1));
      const double below = std::nextafter(r, 0.0);
      envelope_ = std::max(envelope_, lf_.g(below) * lf_.h(below) * std::pow(below, lf_.d - 1));
    }
  envelope_ *= 1.2;
  if (!(envelope_ > 0.0) || !std::isfinite(envelope_)) throw SamplerFailure("radial density has no finite envelope");
}

double FunctionalSampler::sample(Philox4x32& rng) const {
  const int k = poisson_draw(mass_, rng);
  double total = 0.0;
  for (int i = 0; i < k; ++i) {
    for (int tries = 0;; ++tries) {
      if (tries > 100000) throw SamplerFailure("radial rejection sampler stalled");
      const double r = radius_ * rng.uniform();
      if (rng.uniform() * envelope_ <= lf_.g(r) * lf_.h(r) * std::pow(r, lf_.d - 1)) {
        total += lf_.f(r);
        break;
      }
    }
  }
  return total;
}

int poisson_draw(double mean, Philox4x32& rng) {
  if (mean > 50.0) return poisson_draw(0.5 * mean, rng) + poisson_draw(0.5 * mean, rng);
  const double u = rng.uniform();
  double p = std::exp(-mean), cdf = p;
  int k = 0;
  while (u >= cdf && k < 1000) {
    ++k;
    p *= mean / k;
    cdf += p;
  }
  return k;
}

ThetaEstimate broadness_theta(const LevyFunctional& lf, const std::vector<double>& a_grid) {
  if (a_grid.size() < 4) throw DomainError("theta estimate needs at least four grid points");
  for (std::size_t i = 0; i < a_grid.size(); ++i) {
    if (!(a_grid[i] > 1.0)) throw DomainError("theta grid values must exceed 1");
    if (i && !(a_grid[i] > a_grid[i - 1])) throw DomainError("theta grid must be increasing");
  }
  if (std::log10(a_grid.back() / a_grid.front()) < 4.0 - 1e-9) throw DomainError("theta grid must span 4 decades");

  // Scan radii once and locate the superlevel sets {f >= 1/a} by bisection.
  std::vector<double> rs{0.0};
  const double r_max = std::min(lf.support, 1e30);
  for (double e = -8.0; e <= 30.0; e += 1.0 / 40.0) {
    const double r = std::pow(10.0, e);
    if (r >= r_max) break;
    rs.push_back(r);
  }
  if (std::isfinite(lf.support)) rs.push_back(lf.support);
  for (double b : lf.breaks)
    if (b < r_max) rs.push_back(b);
  std::sort(rs.begin(), rs.end());
  std::vector<double> fs(rs.size());
  for (std::size_t i = 0; i < rs.size(); ++i) fs[i] = lf.f(rs[i]);

  ThetaEstimate out;
  out.a = a_grid;
  std::vector<double> nus;
  for (double a : a_grid) {
    const double level = 1.0 / a;
    auto root = [&](double lo, double hi) {
      const bool lo_in = lf.f(lo) >= level;
      for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (lo + hi);
        ((lf.f(mid) >= level) == lo_in ? lo : hi) = mid;
      }
      return 0.5 * (lo + hi);
    };
    double total = 0.0, start = fs[0] >= level ? rs[0] : -1.0;
    for (std::size_t i = 1; i < rs.size(); ++i) {
      const bool in = fs[i] >= level, was = fs[i - 1] >= level;
      if (in && !was) start = root(rs[i - 1], rs[i]);
      if (!in && was) {
        total += lf.nu(start, root(rs[i - 1], rs[i]));
        start = -1.0;
      }
    }
    if (start >= 0.0) {
      if (!std::isfinite(lf.support) && rs.back() >= 1e30 - 1.0) throw Inconclusive("f stays above 1/a at r = 1e30");
      total += lf.nu(start, rs.back());
    }
    nus.push_back(total);
    out.ratio.push_back(total / std::log(a));
  }
  for (std::size_t i = 1; i < nus.size(); ++i)
    if (nus[i] < nus[i - 1] * (1.0 - 1e-9)) {
      out.status = ThetaStatus::inconclusive;
      return out;
    }
  for (std::size_t i = 0; i + 1 < nus.size(); ++i) {
    const double la = std::log(std::log(a_grid[i])), lb = std::log(std::log(a_grid[i + 1]));
    out.growth.push_back(nus[i] > 0.0 ? (std::log(nus[i + 1]) - std::log(nus[i])) / (lb - la) : 0.0);
  }
  // Both limits are read off least-squares fits in x = 1 / ln a over the top
  // 30% of ln a: the growth exponent linearly, the ratio quadratically.
  const double l_cut = 0.7 * std::log(a_grid.back());
  Eigen::MatrixXd Ag(0, 2), Ar(0, 3);
  Eigen::VectorXd bg(0), br(0);
  for (std::size_t i = 0; i < a_grid.size(); ++i) {
    const double la = std::log(a_grid[i]);
    if (la < l_cut) continue;
    const double x = 1.0 / la;
    Ar.conservativeResize(Ar.rows() + 1, 3);
    br.conservativeResize(br.rows() + 1);
    Ar.row(Ar.rows() - 1) << 1.0, x, x * x;
    br(br.rows() - 1) = out.ratio[i];
    if (i == 0) continue;
    const double xm = 2.0 / (la + std::log(a_grid[i - 1]));
    Ag.conservativeResize(Ag.rows() + 1, 2);
    bg.conservativeResize(bg.rows() + 1);
    Ag.row(Ag.rows() - 1) << 1.0, xm;
    bg(bg.rows() - 1) = out.growth[i - 1];
  }
  if (Ar.rows() < 4 || Ag.rows() < 3) throw DomainError("theta grid is too coarse near a_max");
  out.growth_limit = Ag.colPivHouseholderQr().solve(bg)(0);
  if (out.growth_limit > 1.1) {
    out.status = ThetaStatus::infinite;
    out.theta = kInf;
    return out;
  }
  out.theta = std::max(0.0, Ar.colPivHouseholderQr().solve(br)(0));
  out.status = ThetaStatus::finite;
  return out;
}

LevyFunctional example_functional(const std::string& name, double t) {
  LevyFunctional lf;
  lf.t = t;
  lf.ball = 1.0;
  if (name == "compact") {
    lf.f = [](double) { return 1.0; };
    lf.support = 2.0;
  } else if (name == "indicator") {
    lf.f = [](double r) { return r <= 2.0 ? 1.0 : 0.0; };
    lf.breaks = {2.0};
  } else if (name == "exp") {
    lf.f = [](double r) { return std::exp(-r); };
  } else {
    throw ConfigError("unknown functional '" + name + "' (compact, indicator, exp)");
  }
  return lf;
}

std::vector<double> log_grid(double lo_exp, double hi_exp, int per_decade) {
  std::vector<double> out;
  const int steps = static_cast<int>(std::lround((hi_exp - lo_exp) * per_decade));
  for (int i = 0; i <= steps; ++i) out.push_back(std::pow(10.0, lo_exp + static_cast<double>(i) / per_decade));
  return out;
}

}  // namespace jm
