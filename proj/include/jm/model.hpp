#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "jm/jet.hpp"

namespace jm {

// Overloads that let coefficient templates run on doubles and on jets.
namespace sc {
inline double exp(double x) { return std::exp(x); }
inline double log(double x) { return std::log(x); }
inline double sin(double x) { return std::sin(x); }
inline double cos(double x) { return std::cos(x); }
inline double sqrt(double x) { return std::sqrt(x); }
inline double tanh(double x) { return std::tanh(x); }
inline double pow(double x, double a) { return std::pow(x, a); }
inline Jet exp(const Jet& x) { return jm::exp(x); }
inline Jet log(const Jet& x) { return jm::log(x); }
inline Jet sin(const Jet& x) { return jm::sin(x); }
inline Jet cos(const Jet& x) { return jm::cos(x); }
inline Jet sqrt(const Jet& x) { return jm::sqrt(x); }
inline Jet tanh(const Jet& x) { return jm::tanh(x); }
inline Jet pow(const Jet& x, double a) { return jm::pow(x, a); }

template <class T>
T sq_norm(const T* z, int d) {
  T s = z[0] * z[0];
  for (int i = 1; i < d; ++i) s += z[i] * z[i];
  return s;
}
}  // namespace sc

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Regularity data a preset declares about itself (used by the CLI and the
// acceptance harness to feed the regularity rules).
struct RegularityDecl {
  char mode = 'b';  // 'a': rate-degenerate, 'b': amplitude-degenerate
  double theta = 0.0;
  double rho = 1.0;
  double p1 = kInf;
  double p2 = kInf;
};

// Coefficients of dX = int c(z, X-) 1{u < gamma(z, X-)} N(dt, dz, du) + g(X) dt
// with intensity mu(dz) = h(z) dz. h is radial and given through ln h(|z|^2);
// the bound functions are radial profiles in r = |z|.
class JumpModel {
 public:
  virtual ~JumpModel() = default;

  virtual std::string name() const = 0;
  virtual int dim() const = 0;
  virtual bool has_jumps() const { return true; }
  virtual bool has_drift() const { return false; }

  virtual void jump(const double* z, const double* x, double* out) const = 0;
  virtual void jump(const Jet* z, const Jet* x, Jet* out) const = 0;
  virtual double rate(const double* z, const double* x) const = 0;
  virtual Jet rate(const Jet* z, const Jet* x) const = 0;
  virtual void drift(const double* x, double* out) const;
  virtual void drift(const Jet* x, Jet* out) const;
  virtual double log_h(double r2) const = 0;
  virtual Jet log_h(const Jet& r2) const = 0;
  double h(double r) const { return std::exp(log_h(r * r)); }

  virtual double rate_sup() const = 0;  // C-bar
  virtual double rate_upper(double r) const = 0;
  virtual double rate_lower(double r) const = 0;
  virtual double jump_upper(double r) const = 0;
  virtual double jump_lower(double r) const = 0;
  // sup_{z,x} |grad_x gamma| and Lip(g), for the Lipschitz aggregate.
  virtual double rate_x_lipschitz() const = 0;
  virtual double drift_lipschitz() const { return 0.0; }
  // gamma does not depend on z.
  virtual bool rate_z_independent() const { return false; }
  virtual std::optional<double> mu_ball(double /*radius*/) const { return std::nullopt; }
  virtual std::optional<RegularityDecl> regularity() const { return std::nullopt; }
  // Fixed Gaussian variance for models without jumps.
  virtual std::optional<double> variance_override() const { return std::nullopt; }
};

template <class D>
concept HasDrift = requires(const D& m, const double* x, double* out) { m.drift_t(x, out); };

// Forwards the virtual double/Jet entry points to templated coefficients
// `jump_t`, `rate_t`, `log_h_t` and optionally `drift_t` of the derived class.
template <class Derived>
class ModelBase : public JumpModel {
 public:
  void jump(const double* z, const double* x, double* out) const override { self().jump_t(z, x, out); }
  void jump(const Jet* z, const Jet* x, Jet* out) const override { self().jump_t(z, x, out); }
  double rate(const double* z, const double* x) const override { return self().rate_t(z, x); }
  Jet rate(const Jet* z, const Jet* x) const override { return self().rate_t(z, x); }
  double log_h(double r2) const override { return self().log_h_t(r2); }
  Jet log_h(const Jet& r2) const override { return self().log_h_t(r2); }
  void drift(const double* x, double* out) const override {
    if constexpr (HasDrift<Derived>) self().drift_t(x, out); else JumpModel::drift(x, out);
  }
  void drift(const Jet* x, Jet* out) const override {
    if constexpr (HasDrift<Derived>) self().drift_t(x, out); else JumpModel::drift(x, out);
  }

 private:
  const Derived& self() const { return static_cast<const Derived&>(*this); }
};

struct JumpJacobians {
  Eigen::MatrixXd dx;  // grad_x c, rows = components of c
  Eigen::MatrixXd dz;  // grad_z c
};
JumpJacobians jump_jacobians(const JumpModel& m, const double* z, const double* x);
Eigen::MatrixXd drift_jacobian(const JumpModel& m, const double* x);

// C = int cbar gammabar dmu + |grad_x gamma|_inf int cbar dmu + Lip(g).
double lipschitz_aggregate(const JumpModel& m);

struct ModelCheck {
  int samples = 0;
  int rate_bound_violations = 0;
  int jump_upper_violations = 0;
  int jump_lower_violations = 0;
  int non_invertible = 0;
  double max_jacobian_ratio = 0.0;  // largest |grad_x c (I + grad_x c)^{-1}|
  bool ok() const {
    return rate_bound_violations == 0 && jump_upper_violations == 0 && jump_lower_violations == 0 &&
           non_invertible == 0;
  }
};

// Spot checks of the coefficient bounds on random (z, x, xi) with |z| <= z_max.
ModelCheck check_model(const JumpModel& m, int samples, double z_max, std::uint64_t seed);

}  // namespace jm
