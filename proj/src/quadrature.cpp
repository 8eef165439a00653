#include "jm/quadrature.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>

#include "jm/errors.hpp"

namespace jm {

namespace {

using Gauss = boost::math::quadrature::gauss<double, 20>;

// Full symmetric Gauss-Legendre nodes on [a, b] split into equal panels.
void composite_gauss(double a, double b, int panels, std::vector<double>& x, std::vector<double>& w) {
  const auto& abs = Gauss::abscissa();
  const auto& wts = Gauss::weights();
  const double h = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const double mid = a + (p + 0.5) * h, half = 0.5 * h;
    for (std::size_t i = 0; i < abs.size(); ++i) {
      x.push_back(mid - half * abs[i]);
      w.push_back(half * wts[i]);
      x.push_back(mid + half * abs[i]);
      w.push_back(half * wts[i]);
    }
  }
}

}  // namespace

double unit_sphere_area(int d) {
  return 2.0 * std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d);
}

double unit_ball_volume(int d) { return unit_sphere_area(d) / d; }

namespace {

double gk_piece(const std::function<double(double)>& f, double a, double b, double rel_tol) {
  double err = 0.0, l1 = 0.0;
  const double v = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 15, rel_tol, &err, &l1);
  if (!std::isfinite(v) || err > 1e-6 * l1 + 1e-300)
    throw QuadratureFailure("adaptive quadrature did not converge (error estimate " + std::to_string(err) + ")");
  return v;
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b, double rel_tol) {
  if (a == b) return 0.0;
  if (std::isfinite(b)) return gk_piece(f, a, b, rel_tol);
  // Geometric panels keep kinks of the tail profiles inside finite intervals
  // and handle power-law decay without a singular change of variables.
  double total = 0.0, lo = a, width = std::max(1.0, std::abs(a));
  int quiet = 0;
  while (quiet < 3) {
    if (lo > 1e300) throw QuadratureFailure("tail integral does not converge");
    const double piece = gk_piece(f, lo, lo + width, rel_tol);
    total += piece;
    quiet = std::abs(piece) <= 1e-17 * std::abs(total) ? quiet + 1 : 0;
    lo += width;
    width *= 2.0;
  }
  return total;
}

double radial_integral(const std::function<double(double)>& f, int d, double a, double b, double rel_tol) {
  auto g = [&](double r) { return r == 0.0 && d > 1 ? 0.0 : f(r) * std::pow(r, d - 1); };
  return unit_sphere_area(d) * integrate(g, a, b, rel_tol);
}

BallRule ball_rule(int d, double radius) {
  if (d < 1 || d > 3) throw std::invalid_argument("ball rule supports d = 1, 2, 3");
  BallRule rule;
  rule.d = d;
  if (d == 1) {
    std::vector<double> x, w;
    composite_gauss(-radius, radius, std::max(8, static_cast<int>(std::ceil(2.0 * radius))), x, w);
    rule.nodes = std::move(x);
    rule.weights = std::move(w);
    return rule;
  }
  std::vector<double> rx, rw;
  composite_gauss(0.0, radius, std::max(4, static_cast<int>(std::ceil(radius))), rx, rw);
  const double two_pi = 2.0 * std::numbers::pi;
  if (d == 2) {
    const int nphi = 64;
    for (std::size_t i = 0; i < rx.size(); ++i)
      for (int k = 0; k < nphi; ++k) {
        const double phi = two_pi * k / nphi;
        rule.nodes.push_back(rx[i] * std::cos(phi));
        rule.nodes.push_back(rx[i] * std::sin(phi));
        rule.weights.push_back(rw[i] * rx[i] * two_pi / nphi);
      }
    return rule;
  }
  std::vector<double> mx, mw;
  composite_gauss(-1.0, 1.0, 1, mx, mw);
  const int nphi = 32;
  for (std::size_t i = 0; i < rx.size(); ++i)
    for (std::size_t j = 0; j < mx.size(); ++j) {
      const double s = std::sqrt(1.0 - mx[j] * mx[j]);
      for (int k = 0; k < nphi; ++k) {
        const double phi = two_pi * k / nphi;
        rule.nodes.push_back(rx[i] * s * std::cos(phi));
        rule.nodes.push_back(rx[i] * s * std::sin(phi));
        rule.nodes.push_back(rx[i] * mx[j]);
        rule.weights.push_back(rw[i] * rx[i] * rx[i] * mw[j] * two_pi / nphi);
      }
    }
  return rule;
}

}  // namespace jm
