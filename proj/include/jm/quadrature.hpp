#pragma once

#include <functional>
#include <vector>

namespace jm {

// Surface area of the unit sphere in R^d (2 for d = 1).
double unit_sphere_area(int d);
// Volume of the unit ball in R^d.
double unit_ball_volume(int d);

// Adaptive Gauss-Kronrod on [a, b]; b may be +infinity.
double integrate(const std::function<double(double)>& f, double a, double b, double rel_tol = 1e-12);

// S_{d-1} * int_a^b f(r) r^{d-1} dr, for radial integrands on R^d.
double radial_integral(const std::function<double(double)>& f, int d, double a, double b, double rel_tol = 1e-12);

// Fixed nodes on the closed ball of radius R in R^d (d = 1, 2, 3): composite
// Gauss-Legendre in the radius, Gauss-Legendre / trapezoid in the angles.
struct BallRule {
  int d = 1;
  std::vector<double> nodes;  // point-major, d entries per node
  std::vector<double> weights;
  std::size_t size() const { return weights.size(); }
  const double* node(std::size_t i) const { return nodes.data() + i * static_cast<std::size_t>(d); }
};

BallRule ball_rule(int d, double radius);

}  // namespace jm
