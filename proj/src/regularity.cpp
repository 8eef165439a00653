#include "jm/regularity.hpp"

#include <algorithm>
#include <cmath>

#include "jm/errors.hpp"
#include "jm/quadrature.hpp"
#include "jm/sde.hpp"

namespace jm {

namespace {

constexpr double kIntTol = 1e-9;
constexpr int kGrid = 10000;

// Largest integer strictly below x.
int below(double x) { return static_cast<int>(std::ceil(x - kIntTol)) - 1; }

double mu_ball_of(const JumpModel& m, double radius) {
  if (auto v = m.mu_ball(radius)) return *v;
  return radial_integral([&](double r) { return m.h(r); }, m.dim(), 0.0, radius);
}

double case2_exponent(double r, const RegularityInputs& in, int q) {
  return std::min({r * in.p1 - 1.0 - in.d, r * in.p2 - 2.0 - in.d, q * (1.0 - r * in.rho) - in.d});
}

nlohmann::json num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

// Decay exponent of T(M) from M = 4, 8, ..., 64.
double power_exponent(const std::function<double(double)>& tail) {
  std::vector<double> v;
  for (double M = 4.0; M <= 64.0; M *= 2.0) v.push_back(tail(M));
  if (v.back() <= 0.0 || !std::isfinite(std::log(v.back()))) return kInf;
  const std::size_t n = v.size();
  const double last = -std::log(v[n - 1] / v[n - 2]) / std::log(2.0);
  const double prev = -std::log(v[n - 2] / v[n - 3]) / std::log(2.0);
  // Faster than any power: the local exponent keeps growing.
  if (last > 10.0 && last > prev * 1.5) return kInf;
  return last;
}

}  // namespace

int q_star(double t, double theta, int d) {
  if (!std::isfinite(theta)) throw ValidityViolation("q* is only defined for finite theta");
  if (!(t > 0.0) || theta < 0.0) throw DomainError("q* needs t > 0 and theta >= 0");
  return static_cast<int>(std::floor((t * theta / (4.0 * d) + 1.0) / 3.0 + kIntTol));
}

Smoothness predicted_smoothness(const RegularityInputs& in) {
  Smoothness s;
  if (in.mode == 'a') {
    if (std::isinf(in.theta)) {
      s.result = s.infinite = true;
      s.bound = kInf;
      return s;
    }
    if (!(in.theta > 0.0)) return s;
    // t > (3k + 3d - 1) 4d / theta  <=>  k < (t theta / (4d) + 1 - 3d) / 3.
    s.bound = (in.t * in.theta / (4.0 * in.d) + 1.0 - 3.0 * in.d) / 3.0;
    s.k = below(s.bound);
    s.result = s.k >= 0;
    return s;
  }
  if (in.mode != 'b') throw DomainError("mode must be 'a' or 'b'");
  if (!(in.rho > 0.0)) throw DomainError("mode b needs rho > 0");
  if (std::isinf(in.theta)) {
    s.bound = std::min(in.p1 / in.rho - 1.0 - in.d, in.p2 / in.rho - 2.0 - in.d);
    s.r_opt = 1.0 / in.rho;
  } else {
    const int q = q_star(in.t, in.theta, in.d);
    s.bound = -kInf;
    for (int i = 1; i <= kGrid; ++i) {
      const double r = static_cast<double>(i) / (kGrid + 1) / in.rho;
      const double e = case2_exponent(r, in, q);
      if (e > s.bound) {
        s.bound = e;
        s.r_opt = r;
      }
    }
  }
  if (s.bound < 1.0 - kIntTol) return s;
  s.result = true;
  if (std::isinf(s.bound)) {
    s.infinite = true;
    return s;
  }
  s.k = below(s.bound);
  return s;
}

FourierEnvelope fourier_envelope(double xi, double M, const JumpModel& m, int q, double t, char mode, double theta) {
  const int d = m.dim();
  if (!(4.0 * d * (3.0 * q - 1.0) / t < theta))
    throw ValidityViolation("4d(3q - 1)/t < theta fails for q = " + std::to_string(q));
  FourierEnvelope e;
  const double ax = std::abs(xi);
  e.lipschitz = lipschitz_aggregate(m);
  e.term1 = u_m(m, M, t) * 0.5 * ax * ax;
  e.term2 = ax * truncation_error(m, M, t, e.lipschitz);
  e.term3 = std::pow(ax, -q);
  if (mode == 'b') e.term3 *= 1.0 + std::pow(mu_ball_of(m, M + 1.0), q);
  return e;
}

Truncation optimize_truncation(double xi, const RegularityInputs& in, std::optional<int> q) {
  if (!(in.rho > 0.0)) throw DomainError("truncation needs rho > 0");
  double qv = kInf;
  if (q) qv = *q;
  else if (std::isfinite(in.theta)) qv = q_star(in.t, in.theta, in.d);
  Truncation best;
  best.exponent = -kInf;
  for (int i = 1; i <= kGrid; ++i) {
    const double r = static_cast<double>(i) / (kGrid + 1) / in.rho;
    const double e1 = r * in.p1 - 1.0, e2 = r * in.p2 - 2.0;
    const double e3 = std::isinf(qv) ? kInf : qv * (1.0 - r * in.rho);
    const double e = std::min({e1, e2, e3});
    if (e > best.exponent) best = {r, 0.0, e1, e2, e3, e};
  }
  best.M = std::pow(std::abs(xi), best.r);
  return best;
}

TailExponents estimate_tail_exponents(const JumpModel& m) {
  const int d = m.dim();
  TailExponents out;
  out.p1 = power_exponent([&](double M) {
    return radial_integral([&](double r) { return m.jump_upper(r) * m.rate_upper(r) * m.h(r); }, d, M, kInf);
  });
  out.p2 = power_exponent([&](double M) {
    return radial_integral(
        [&](double r) {
          const double c = m.jump_lower(r);
          return c * c * m.rate_lower(r) * m.h(r);
        },
        d, M, kInf);
  });
  return out;
}

double estimate_rho(const JumpModel& m) {
  // Far out, so that the bounded part of mu(B_M) does not bias the rate.
  return std::log(mu_ball_of(m, 0x1p20) / mu_ball_of(m, 0x1p19)) / std::log(2.0);
}

LevyFunctional broadness_functional(const JumpModel& m) {
  LevyFunctional lf;
  lf.d = m.dim();
  lf.f = [&m](double r) {
    const double c = m.jump_lower(r);
    return c * c;
  };
  lf.g = [&m](double r) { return m.rate_lower(r); };
  lf.h = [&m](double r) { return m.h(r); };
  return lf;
}

RegularityInputs regularity_inputs(const JumpModel& m, double t) {
  if (!m.has_jumps()) throw DomainError(m.name() + " has no jump part to analyse");
  RegularityInputs in;
  in.t = t;
  in.d = m.dim();
  if (auto decl = m.regularity()) {
    in.mode = decl->mode;
    in.theta = decl->theta;
    in.rho = decl->rho;
    in.p1 = decl->p1;
    in.p2 = decl->p2;
    return in;
  }
  const auto est = broadness_theta(broadness_functional(m), log_grid(1.0, 6.0, 8));
  if (est.status == ThetaStatus::inconclusive) throw Inconclusive("theta estimate is inconclusive");
  in.theta = est.theta;
  const auto tails = estimate_tail_exponents(m);
  in.p1 = tails.p1;
  in.p2 = tails.p2;
  in.rho = estimate_rho(m);
  in.mode = 'b';
  return in;
}

nlohmann::json regularity_report(const RegularityInputs& in, double xi) {
  nlohmann::json j;
  j["schema"] = 1;
  j["t"] = in.t;
  j["d"] = in.d;
  j["theta"] = num(in.theta);
  j["p1"] = num(in.p1);
  j["p2"] = num(in.p2);
  j["rho"] = num(in.rho);
  j["mode"] = std::string(1, in.mode);
  if (std::isfinite(in.theta)) {
    const int q = q_star(in.t, in.theta, in.d);
    j["q_star"] = q;
    j["validity"] = {{"q", q},
                     {"lhs", 4.0 * in.d * (3.0 * q - 1.0) / in.t},
                     {"holds", q >= 1 && 4.0 * in.d * (3.0 * q - 1.0) / in.t < in.theta}};
  } else {
    j["q_star"] = "inf";
    j["validity"] = {{"q", "inf"}, {"holds", true}};
  }
  const Smoothness s = predicted_smoothness(in);
  if (!s.result) j["k"] = nullptr;
  else if (s.infinite) j["k"] = "inf";
  else j["k"] = s.k;
  j["k_bound"] = num(s.bound);
  if (in.mode == 'b') {
    const Truncation tr = optimize_truncation(xi, in);
    j["r_opt"] = tr.r;
    j["truncation"] = {{"xi", xi}, {"M", tr.M}, {"exponent", num(tr.exponent)}};
  } else {
    j["r_opt"] = nullptr;
  }
  return j;
}

}  // namespace jm
