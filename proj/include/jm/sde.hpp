#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <vector>

#include "jm/model.hpp"
#include "jm/presets.hpp"
#include "jm/quadrature.hpp"
#include "jm/rng.hpp"
#include "jm/tensor.hpp"

namespace jm {

// Radial C^infinity transition: 1 on B_{M-1}, 0 outside B_{M+1}.
double mollified_indicator(const double* z, int d, double M);
Jet mollified_indicator(const Jet* z, int d, double M);
// The underlying profile S(u) = psi(u) / (psi(u) + psi(1 - u)), psi(u) = exp(-1/u).
double smooth_step(double u);
Jet smooth_step(const Jet& u);

// ln of the normalized bump exp(-1 / (1 - |w|^2)) on the unit ball.
double bump_log_density(const double* w, int d);
Jet bump_log_density(const Jet* w, int d);
double bump_log_normalizer(int d);

struct JumpDraw {
  std::vector<double> z;
  bool ghost = false;
};

// The jump law q_M(., x): the accepted part 1_{B_{M+1}} gamma h / (2 Cbar mu(B_{M+1}))
// plus the rejected mass theta(x) placed on a bump centered at z* = (M+3) e_1.
class TruncatedLaw {
 public:
  TruncatedLaw(std::shared_ptr<const JumpModel> model, double M);

  const JumpModel& model() const { return *model_; }
  const std::shared_ptr<const JumpModel>& model_ptr() const { return model_; }
  int dim() const { return d_; }
  double M() const { return M_; }
  double mu_ball() const { return mu_; }  // mu(B_{M+1})
  double lambda() const { return 2.0 * model_->rate_sup() * mu_; }
  const std::vector<double>& z_star() const { return z_star_; }

  template <class T> void jump_m(const T* z, const T* x, T* out) const;  // c_M = Phi_M c
  double theta(const double* x) const;
  Jet theta(const Jet* x) const;
  double log_q(const double* z, const double* x) const;
  Jet log_q(const Jet* z, const Jet* x) const;
  bool is_ghost(const double* z) const;

  JumpDraw sample(const double* x, Philox4x32& rng) const;
  // Draw from h restricted to B_{M+1}.
  std::vector<double> sample_base(Philox4x32& rng) const;
  std::vector<double> sample_bump(Philox4x32& rng) const;

 private:
  template <class T> T theta_t(const T* x) const;
  template <class T> T log_q_t(const T* z, const T* x, bool ghost) const;

  std::shared_ptr<const JumpModel> model_;
  int d_;
  double M_;
  double mu_ = 0.0;
  std::vector<double> z_star_;
  BallRule rule_;            // nodes on B_{M+1}, weights include h
  double radial_envelope_ = 0.0;
};

template <class T>
void TruncatedLaw::jump_m(const T* z, const T* x, T* out) const {
  model_->jump(z, x, out);
  const T phi = mollified_indicator(z, d_, M_);
  for (int r = 0; r < d_; ++r) out[r] = out[r] * phi;
}

// Classical RK4 with h = dt / ceil(dt / h_max).
void flow(const JumpModel& m, double* x, double dt, double h_max);
void flow(const JumpModel& m, Jet* x, double dt, double h_max);

// Values-only pass: every random draw and the double-valued trajectory.
struct PathDraws {
  double t = 0.0;
  int d = 1;
  double lambda = 0.0;
  std::vector<double> times;
  std::vector<double> z;        // J * d
  std::vector<std::uint8_t> ghost;
  std::vector<double> x_pre;    // X at T_k-
  std::vector<double> x_post;   // X at T_k
  std::vector<double> x_end;
  std::vector<double> delta;    // standard normal block
  int jumps() const { return static_cast<int>(times.size()); }
  int active_jumps() const;
  const double* z_at(int k) const { return z.data() + static_cast<std::size_t>(k) * d; }
  const double* pre_at(int k) const { return x_pre.data() + static_cast<std::size_t>(k) * d; }
};

PathDraws simulate_draws(const TruncatedLaw& law, const SimConfig& cfg, std::uint64_t path);

// The path as a jet program in (Delta, active jump amplitudes).
struct PathRecord {
  PathDraws draws;
  CoordinateMap coords;
  std::vector<int> jump_var;  // first jet variable of jump k, -1 when frozen
  std::vector<std::vector<Jet>> z;
  std::vector<std::vector<Jet>> x_pre;
  std::vector<Jet> delta;
  std::vector<Jet> x_end;
  WeightField weights;
  Jet log_density;
  int nvars() const { return coords.size(); }
};

// Replays the draws with jets of the given order. Ghost amplitudes are frozen
// constants unless differentiate_ghosts is set.
PathRecord build_path(const TruncatedLaw& law, const SimConfig& cfg, PathDraws draws);
PathRecord simulate_path(const TruncatedLaw& law, const SimConfig& cfg, std::uint64_t path);

// ln p_M recomputed from the record's jets.
Jet path_log_density(const PathRecord& rec, const TruncatedLaw& law);

// F_M = X_t + sqrt(variance) Delta.
std::vector<Jet> regularize(const PathRecord& rec, double variance);
std::vector<double> regularize(const PathDraws& draws, double variance);

// t int_{|z| > M - 1} cunder^2 gammaunder dmu.
double u_m(const JumpModel& m, double M, double t);
// t e^{Ct} int_{|z| > M} cbar gammabar dmu.
double truncation_error(const JumpModel& m, double M, double t);
double truncation_error(const JumpModel& m, double M, double t, double lipschitz);

// Y and its inverse after every jump and at t; grad_z c_M at every jump.
struct FlowMatrices {
  std::vector<Eigen::MatrixXd> y;       // size J + 1, last = time t
  std::vector<Eigen::MatrixXd> y_inv;
  std::vector<Eigen::MatrixXd> grad_z;  // size J
  const Eigen::MatrixXd& y_t() const { return y.back(); }
  const Eigen::MatrixXd& y_inv_t() const { return y_inv.back(); }
};

FlowMatrices tangent_flows(const PathDraws& draws, const TruncatedLaw& law, const SimConfig& cfg);

// Largest number of active coordinates the budget allows, and the a-priori check.
void check_coordinate_budget(const TruncatedLaw& law, const SimConfig& cfg);

// X^M_t and X^{M2}_t driven by the same Poisson points on B_{M2+1} x [0, 2 Cbar].
struct CoupledSample {
  std::vector<double> x_m, x_m2;
};
// `outer` is the law at M2 (it supplies mu(B_{M2+1}) and the base sampler).
CoupledSample simulate_coupled(const TruncatedLaw& outer, double M, const SimConfig& cfg, std::uint64_t path);

}  // namespace jm
