#pragma once

#include <functional>
#include <string>
#include <vector>

#include "jm/model.hpp"
#include "jm/rng.hpp"

namespace jm {

// N_t(1_{B_g} f) for radial data: f, g and the intensity density h are
// profiles in r = |z|, B is the ball of radius `ball` and mu = h dz is
// restricted to the ball of radius `support`.
struct LevyFunctional {
  int d = 1;
  std::function<double(double)> f;
  std::function<double(double)> g = [](double) { return 1.0; };
  std::function<double(double)> h = [](double) { return 1.0; };
  double ball = kInf;
  double support = kInf;
  double t = 1.0;
  std::vector<double> breaks;  // radii where f, g or h are not smooth

  // nu_g(A) and int_A f dnu_g over radial shells a <= r <= b.
  double nu(double a, double b) const;
  double integral_f(double a, double b) const;
};

// Throws DomainError unless int f dnu_g is finite.
void check_functional(const LevyFunctional& lf);

struct AlphaBeta {
  double alpha = 0.0;
  double beta = 0.0;
};

// alpha(s) = int (1 - e^{-s f}) dnu_g, beta(s) = the same over B^c.
AlphaBeta alpha_beta(double s, const LevyFunctional& lf);

// E exp(-s N_t(1_{B_g} f)) = exp(-t (alpha - beta)).
double laplace_closed_form(double s, const LevyFunctional& lf);

// U_t = t int_{B^c} f dnu_g.
double compensator_u(const LevyFunctional& lf);

enum class TailStatus { finite, divergent };

struct TailIntegral {
  TailStatus status = TailStatus::divergent;
  double value = kInf;
  double slope = 0.0;       // estimated lim alpha(s) / ln s
  double split = 0.0;       // s* with t alpha(s*) = 50
  double tail_bound = 0.0;  // analytic bound of the part beyond s*
};

// I_t^p(f) = int_0^inf s^{p-1} e^{-t alpha(s)} ds with a tail test on the
// logarithmic growth of alpha. Throws Inconclusive if the slope is unstable.
TailIntegral i_t_p(const LevyFunctional& lf, double p);

struct InverseMomentBound {
  TailIntegral integral;
  double bound = kInf;         // I_t^p / Gamma(p), infinite when divergent
  double laplace_value = 0.0;  // Gamma(p)^{-1} int s^{p-1} e^{-s U} E e^{-s N} ds
};

// Bound on E (N_t(1_{B_g} f) + U)^{-p}. `laplace_value` is the same
// expectation computed from the Laplace transform, which is exact for the
// Poisson functional and always below `bound`.
InverseMomentBound inverse_moment_bound(const LevyFunctional& lf, double u, double p);

// One draw of N_t(1_{B_g} f); B and the support must make nu_g(B) finite.
class FunctionalSampler {
 public:
  explicit FunctionalSampler(LevyFunctional lf);
  double sample(Philox4x32& rng) const;
  double mass() const { return mass_; }  // t nu_g(B)

 private:
  LevyFunctional lf_;
  double radius_ = 0.0;
  double mass_ = 0.0;
  double envelope_ = 0.0;
};

int poisson_draw(double mean, Philox4x32& rng);

enum class ThetaStatus { finite, infinite, inconclusive };

struct ThetaEstimate {
  ThetaStatus status = ThetaStatus::inconclusive;
  double theta = 0.0;
  std::vector<double> a;
  std::vector<double> ratio;   // nu(f >= 1/a) / ln a
  std::vector<double> growth;  // local d ln nu / d ln ln a
  double growth_limit = 0.0;   // growth extrapolated to a = infinity
};

// Broadness exponent lim (1 / ln a) nu_g(f >= 1/a) from a grid of a values.
// Infinite when the growth exponent of nu against ln a extrapolates above 1.1.
ThetaEstimate broadness_theta(const LevyFunctional& lf, const std::vector<double>& a_grid);

// Named radial functionals in d = 1 used by the Laplace checks:
//   compact    f = 1, B = [-1, 1], mu = Lebesgue on [-2, 2]
//   indicator  f = 1_{[-2, 2]}, B = [-1, 1], Lebesgue on R
//   exp        f = e^{-|z|}, B = [-1, 1], Lebesgue on R
LevyFunctional example_functional(const std::string& name, double t);

// Geometric grid a = 10^{lo}, ..., 10^{hi} with `per_decade` points per decade.
std::vector<double> log_grid(double lo_exp, double hi_exp, int per_decade);

}  // namespace jm
