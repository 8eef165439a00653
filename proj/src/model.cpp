#include "jm/model.hpp"

#include <random>

#include "jm/quadrature.hpp"
#include "jm/rng.hpp"

namespace jm {

void JumpModel::drift(const double* /*x*/, double* out) const {
  for (int r = 0; r < dim(); ++r) out[r] = 0.0;
}

void JumpModel::drift(const Jet* /*x*/, Jet* out) const {
  for (int r = 0; r < dim(); ++r) out[r] = Jet(0.0);
}

JumpJacobians jump_jacobians(const JumpModel& m, const double* z, const double* x) {
  const int d = m.dim();
  const auto space = JetSpace::get(2 * d, 1);
  std::vector<Jet> zj, xj, out(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) zj.push_back(Jet::variable(space, i, z[i]));
  for (int i = 0; i < d; ++i) xj.push_back(Jet::variable(space, d + i, x[i]));
  m.jump(zj.data(), xj.data(), out.data());
  JumpJacobians j{Eigen::MatrixXd::Zero(d, d), Eigen::MatrixXd::Zero(d, d)};
  for (int r = 0; r < d; ++r)
    for (int i = 0; i < d; ++i) {
      j.dz(r, i) = out[static_cast<std::size_t>(r)].partial({i});
      j.dx(r, i) = out[static_cast<std::size_t>(r)].partial({d + i});
    }
  return j;
}

Eigen::MatrixXd drift_jacobian(const JumpModel& m, const double* x) {
  const int d = m.dim();
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(d, d);
  if (!m.has_drift()) return g;
  const auto space = JetSpace::get(d, 1);
  std::vector<Jet> xj, out(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) xj.push_back(Jet::variable(space, i, x[i]));
  m.drift(xj.data(), out.data());
  for (int r = 0; r < d; ++r)
    for (int i = 0; i < d; ++i) g(r, i) = out[static_cast<std::size_t>(r)].partial({i});
  return g;
}

double lipschitz_aggregate(const JumpModel& m) {
  double c = m.drift_lipschitz();
  if (!m.has_jumps()) return c;
  const int d = m.dim();
  c += radial_integral([&](double r) { return m.jump_upper(r) * m.rate_upper(r) * m.h(r); }, d, 0.0, kInf);
  if (m.rate_x_lipschitz() > 0.0)
    c += m.rate_x_lipschitz() * radial_integral([&](double r) { return m.jump_upper(r) * m.h(r); }, d, 0.0, kInf);
  return c;
}

ModelCheck check_model(const JumpModel& m, int samples, double z_max, std::uint64_t seed) {
  ModelCheck out;
  if (!m.has_jumps()) return out;
  const int d = m.dim();
  Philox4x32 rng(seed, 0);
  std::uniform_real_distribution<double> uz(-z_max, z_max), ux(-3.0, 3.0);
  std::normal_distribution<double> nx;
  std::vector<double> z(static_cast<std::size_t>(d)), x(z), xi(z), c(z);
  constexpr double tol = 1e-12;
  for (int s = 0; s < samples; ++s) {
    for (int i = 0; i < d; ++i) {
      z[static_cast<std::size_t>(i)] = uz(rng);
      x[static_cast<std::size_t>(i)] = ux(rng);
      xi[static_cast<std::size_t>(i)] = nx(rng);
    }
    const double r = std::sqrt(sc::sq_norm(z.data(), d));
    ++out.samples;
    const double g = m.rate(z.data(), x.data());
    if (g < m.rate_lower(r) - tol || g > m.rate_upper(r) + tol || m.rate_upper(r) > m.rate_sup() + tol)
      ++out.rate_bound_violations;
    m.jump(z.data(), x.data(), c.data());
    if (std::sqrt(sc::sq_norm(c.data(), d)) > m.jump_upper(r) * (1 + tol) + tol) ++out.jump_upper_violations;
    const JumpJacobians j = jump_jacobians(m, z.data(), x.data());
    const Eigen::Map<const Eigen::VectorXd> xiv(xi.data(), d);
    // sum_r <d_{z_r} c, xi>^2 = |dz^T xi|^2
    const double lhs = (j.dz.transpose() * xiv).squaredNorm();
    const double lo = m.jump_lower(r);
    if (lhs < lo * lo * xiv.squaredNorm() * (1 - 1e-9) - tol) ++out.jump_lower_violations;
    const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(d, d) + j.dx;
    const double det = a.determinant();
    if (!(std::abs(det) > 1e-12)) {
      ++out.non_invertible;
      continue;
    }
    out.max_jacobian_ratio = std::max(out.max_jacobian_ratio, (j.dx * a.inverse()).norm());
  }
  return out;
}

}  // namespace jm
