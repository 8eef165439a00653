#include "jm/sde.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include "jm/errors.hpp"

namespace jm {

namespace {

constexpr double kLn2Pi = 1.8378770664093454836;

template <class T>
void rk4(const JumpModel& m, T* x, double dt, double h_max) {
  if (!m.has_drift() || dt <= 0.0) return;
  const int d = m.dim();
  const long steps = std::max(1L, static_cast<long>(std::ceil(dt / h_max)));
  const double h = dt / static_cast<double>(steps);
  std::vector<T> k1(d), k2(d), k3(d), k4(d), tmp(d);
  for (long s = 0; s < steps; ++s) {
    m.drift(x, k1.data());
    for (int i = 0; i < d; ++i) tmp[i] = x[i] + (0.5 * h) * k1[i];
    m.drift(tmp.data(), k2.data());
    for (int i = 0; i < d; ++i) tmp[i] = x[i] + (0.5 * h) * k2[i];
    m.drift(tmp.data(), k3.data());
    for (int i = 0; i < d; ++i) tmp[i] = x[i] + h * k3[i];
    m.drift(tmp.data(), k4.data());
    for (int i = 0; i < d; ++i) x[i] += (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
}

template <class T>
T indicator_t(const T* z, int d, double M) {
  const T u = ((M + 1.0) * (M + 1.0) - sc::sq_norm(z, d)) / (4.0 * M);
  return smooth_step(u);
}

std::vector<double> initial_state(const SimConfig& cfg, int d) {
  return cfg.x0.empty() ? std::vector<double>(static_cast<std::size_t>(d), 0.0) : cfg.x0;
}

// grad_x and grad_z of c_M at (z, x).
JumpJacobians truncated_jacobians(const TruncatedLaw& law, const double* z, const double* x) {
  const int d = law.dim();
  const auto space = JetSpace::get(2 * d, 1);
  std::vector<Jet> zj, xj, out(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) zj.push_back(Jet::variable(space, i, z[i]));
  for (int i = 0; i < d; ++i) xj.push_back(Jet::variable(space, d + i, x[i]));
  law.jump_m(zj.data(), xj.data(), out.data());
  JumpJacobians j{Eigen::MatrixXd::Zero(d, d), Eigen::MatrixXd::Zero(d, d)};
  for (int r = 0; r < d; ++r)
    for (int i = 0; i < d; ++i) {
      j.dz(r, i) = out[static_cast<std::size_t>(r)].partial({i});
      j.dx(r, i) = out[static_cast<std::size_t>(r)].partial({d + i});
    }
  return j;
}

}  // namespace

double smooth_step(double u) {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  const double e = 1.0 / u - 1.0 / (1.0 - u);
  if (e > 700.0) return 0.0;
  if (e < -700.0) return 1.0;
  return 1.0 / (1.0 + std::exp(e));
}

Jet smooth_step(const Jet& u) {
  const double v = u.value();
  if (v <= 0.0) return Jet(0.0);
  if (v >= 1.0) return Jet(1.0);
  const double e = 1.0 / v - 1.0 / (1.0 - v);
  if (e > 700.0) return Jet(0.0);
  if (e < -700.0) return Jet(1.0);
  return recip(1.0 + exp(recip(u) - recip(1.0 - u)));
}

double mollified_indicator(const double* z, int d, double M) { return indicator_t(z, d, M); }
Jet mollified_indicator(const Jet* z, int d, double M) { return indicator_t(z, d, M); }

double bump_log_normalizer(int d) {
  static const std::array<double, 4> z = [] {
    std::array<double, 4> out{};
    for (int k = 1; k <= 3; ++k)
      out[static_cast<std::size_t>(k)] = std::log(
          radial_integral([](double r) { return r < 1.0 ? std::exp(-1.0 / (1.0 - r * r)) : 0.0; }, k, 0.0, 1.0));
    return out;
  }();
  if (d < 1 || d > 3) throw std::invalid_argument("bump supports d = 1, 2, 3");
  return z[static_cast<std::size_t>(d)];
}

double bump_log_density(const double* w, int d) {
  const double s = 1.0 - sc::sq_norm(w, d);
  if (!(s > 0.0)) throw OutsideSupport("point outside the bump support");
  return -1.0 / s - bump_log_normalizer(d);
}

Jet bump_log_density(const Jet* w, int d) {
  const Jet s = 1.0 - sc::sq_norm(w, d);
  if (!(s.value() > 0.0)) throw OutsideSupport("point outside the bump support");
  return -recip(s) - bump_log_normalizer(d);
}

TruncatedLaw::TruncatedLaw(std::shared_ptr<const JumpModel> model, double M)
    : model_(std::move(model)), d_(model_->dim()), M_(M), z_star_(static_cast<std::size_t>(d_), 0.0) {
  if (M < 1.0) throw ConfigError("M must be >= 1");
  z_star_[0] = M + 3.0;
  if (!model_->has_jumps()) return;
  const double R = M + 1.0;
  const auto closed = model_->mu_ball(R);
  mu_ = closed ? *closed : radial_integral([&](double r) { return model_->h(r); }, d_, 0.0, R);
  if (!(mu_ > 0.0)) throw ConfigError("mu(B_{M+1}) must be positive");
  if (!model_->rate_z_independent()) {
    rule_ = ball_rule(d_, R);
    for (std::size_t i = 0; i < rule_.size(); ++i)
      rule_.weights[i] *= model_->h(std::sqrt(sc::sq_norm(rule_.node(i), d_)));
  }
  double peak = 0.0;
  for (int i = 0; i <= 4000; ++i) {
    const double r = R * i / 4000.0;
    peak = std::max(peak, model_->h(r) * std::pow(r, d_ - 1));
  }
  radial_envelope_ = 1.2 * peak;
}

template <class T>
T TruncatedLaw::theta_t(const T* x) const {
  const double two_c = 2.0 * model_->rate_sup();
  if (model_->rate_z_independent()) {
    const std::vector<T> z0(static_cast<std::size_t>(d_), T(0.0));
    return 1.0 - model_->rate(z0.data(), x) / two_c;
  }
  T acc(0.0);
  double mass = 0.0;
  std::vector<T> z(static_cast<std::size_t>(d_));
  for (std::size_t i = 0; i < rule_.size(); ++i) {
    for (int r = 0; r < d_; ++r) z[static_cast<std::size_t>(r)] = T(rule_.node(i)[r]);
    acc += rule_.weights[i] * model_->rate(z.data(), x);
    mass += rule_.weights[i];
  }
  return 1.0 - acc / (two_c * mass);
}

double TruncatedLaw::theta(const double* x) const { return theta_t(x); }
Jet TruncatedLaw::theta(const Jet* x) const { return theta_t(x); }

bool TruncatedLaw::is_ghost(const double* z) const {
  double s = 0.0;
  for (int r = 0; r < d_; ++r) s += (z[r] - z_star_[static_cast<std::size_t>(r)]) * (z[r] - z_star_[static_cast<std::size_t>(r)]);
  return s < 1.0;
}

template <class T>
T TruncatedLaw::log_q_t(const T* z, const T* x, bool ghost) const {
  if (ghost) {
    std::vector<T> w(static_cast<std::size_t>(d_));
    for (int r = 0; r < d_; ++r) w[static_cast<std::size_t>(r)] = z[r] - z_star_[static_cast<std::size_t>(r)];
    return bump_log_density(w.data(), d_) + sc::log(theta_t(x));
  }
  const T g = model_->rate(z, x);
  if (!(value_of(g) > 0.0)) throw DegenerateDensity("jump density vanishes at the sample");
  return sc::log(g) + model_->log_h(sc::sq_norm(z, d_)) - std::log(2.0 * model_->rate_sup() * mu_);
}

double TruncatedLaw::log_q(const double* z, const double* x) const {
  if (is_ghost(z)) return log_q_t(z, x, true);
  if (!(sc::sq_norm(z, d_) < (M_ + 1.0) * (M_ + 1.0))) throw OutsideSupport("z outside both branches of q_M");
  return log_q_t(z, x, false);
}

Jet TruncatedLaw::log_q(const Jet* z, const Jet* x) const {
  std::vector<double> v(static_cast<std::size_t>(d_));
  for (int r = 0; r < d_; ++r) v[static_cast<std::size_t>(r)] = z[r].value();
  if (is_ghost(v.data())) return log_q_t(z, x, true);
  if (!(sc::sq_norm(v.data(), d_) < (M_ + 1.0) * (M_ + 1.0))) throw OutsideSupport("z outside both branches of q_M");
  return log_q_t(z, x, false);
}

std::vector<double> TruncatedLaw::sample_base(Philox4x32& rng) const {
  const double R = M_ + 1.0;
  std::vector<double> z(static_cast<std::size_t>(d_));
  for (int tries = 0; tries < 1000000; ++tries) {
    const double r = R * rng.uniform();
    const double f = model_->h(r) * std::pow(r, d_ - 1);
    if (rng.uniform() * radial_envelope_ >= f) continue;
    if (d_ == 1) {
      z[0] = rng.uniform() < 0.5 ? -r : r;
      return z;
    }
    std::normal_distribution<double> n;
    double s = 0.0;
    do {
      s = 0.0;
      for (auto& v : z) {
        v = n(rng);
        s += v * v;
      }
    } while (!(s > 0.0));
    const double k = r / std::sqrt(s);
    for (auto& v : z) v *= k;
    return z;
  }
  throw SamplerFailure("rejection sampler for h on B_{M+1} did not accept");
}

std::vector<double> TruncatedLaw::sample_bump(Philox4x32& rng) const {
  std::vector<double> w(static_cast<std::size_t>(d_));
  for (int tries = 0; tries < 1000000; ++tries) {
    double s = 0.0;
    for (auto& v : w) {
      v = 2.0 * rng.uniform() - 1.0;
      s += v * v;
    }
    if (s >= 1.0) continue;
    // density exp(-1/(1-s)) against the envelope e^{-1}
    if (rng.uniform() < std::exp(1.0 - 1.0 / (1.0 - s))) return w;
  }
  throw SamplerFailure("bump sampler did not accept");
}

JumpDraw TruncatedLaw::sample(const double* x, Philox4x32& rng) const {
  JumpDraw out;
  out.z = sample_base(rng);
  const double u = 2.0 * model_->rate_sup() * rng.uniform();
  if (u < model_->rate(out.z.data(), x)) return out;
  out.ghost = true;
  out.z = sample_bump(rng);
  for (int r = 0; r < d_; ++r) out.z[static_cast<std::size_t>(r)] += z_star_[static_cast<std::size_t>(r)];
  return out;
}

void flow(const JumpModel& m, double* x, double dt, double h_max) { rk4(m, x, dt, h_max); }
void flow(const JumpModel& m, Jet* x, double dt, double h_max) { rk4(m, x, dt, h_max); }

int PathDraws::active_jumps() const {
  return static_cast<int>(std::count(ghost.begin(), ghost.end(), std::uint8_t{0}));
}

PathDraws simulate_draws(const TruncatedLaw& law, const SimConfig& cfg, std::uint64_t path) {
  const JumpModel& m = law.model();
  const int d = law.dim();
  Philox4x32 rng(cfg.seed, path);
  PathDraws p;
  p.t = cfg.t;
  p.d = d;
  p.lambda = law.lambda();
  long n = 0;
  if (p.lambda > 0.0) n = std::poisson_distribution<long>(p.lambda * cfg.t)(rng);
  p.times.resize(static_cast<std::size_t>(n));
  for (auto& s : p.times) s = cfg.t * rng.uniform();
  std::sort(p.times.begin(), p.times.end());
  std::vector<double> x = initial_state(cfg, d), c(static_cast<std::size_t>(d));
  double prev = 0.0;
  for (long k = 0; k < n; ++k) {
    flow(m, x.data(), p.times[static_cast<std::size_t>(k)] - prev, cfg.step());
    prev = p.times[static_cast<std::size_t>(k)];
    p.x_pre.insert(p.x_pre.end(), x.begin(), x.end());
    const JumpDraw draw = law.sample(x.data(), rng);
    p.z.insert(p.z.end(), draw.z.begin(), draw.z.end());
    p.ghost.push_back(draw.ghost ? 1 : 0);
    if (!draw.ghost) {
      law.jump_m(draw.z.data(), x.data(), c.data());
      for (int r = 0; r < d; ++r) x[static_cast<std::size_t>(r)] += c[static_cast<std::size_t>(r)];
    }
    p.x_post.insert(p.x_post.end(), x.begin(), x.end());
  }
  flow(m, x.data(), cfg.t - prev, cfg.step());
  p.x_end = x;
  std::normal_distribution<double> normal;
  p.delta.resize(static_cast<std::size_t>(d));
  for (auto& v : p.delta) v = normal(rng);
  return p;
}

PathRecord build_path(const TruncatedLaw& law, const SimConfig& cfg, PathDraws draws) {
  const JumpModel& m = law.model();
  const int d = law.dim(), jumps = draws.jumps();
  PathRecord rec;
  const int blocks = 1 + (cfg.differentiate_ghosts ? jumps : draws.active_jumps());
  if (d * blocks > kMaxVars)
    throw CoordinateBudgetExceeded("path needs " + std::to_string(d * blocks) + " coordinates, cap is " +
                                   std::to_string(kMaxVars));
  for (int r = 1; r <= d; ++r) rec.coords.add(CoordinateId::gaussian(r));
  rec.jump_var.assign(static_cast<std::size_t>(jumps), -1);
  for (int k = 0; k < jumps; ++k)
    if (cfg.differentiate_ghosts || !draws.ghost[static_cast<std::size_t>(k)]) {
      rec.jump_var[static_cast<std::size_t>(k)] = rec.coords.size();
      for (int r = 1; r <= d; ++r) rec.coords.add(CoordinateId::jump(k + 1, r));
    }
  const auto space = JetSpace::get(rec.coords.size(), cfg.jet_order);
  rec.weights.assign(static_cast<std::size_t>(rec.coords.size()), Jet(1.0));
  Jet lp(-0.5 * d * kLn2Pi);
  for (int r = 0; r < d; ++r) {
    rec.delta.push_back(Jet::variable(space, r, draws.delta[static_cast<std::size_t>(r)]));
    lp -= 0.5 * rec.delta.back() * rec.delta.back();
  }
  std::vector<Jet> x;
  for (double v : initial_state(cfg, d)) x.emplace_back(v);
  std::vector<Jet> c(static_cast<std::size_t>(d));
  double prev = 0.0;
  for (int k = 0; k < jumps; ++k) {
    const double tk = draws.times[static_cast<std::size_t>(k)];
    flow(m, x.data(), tk - prev, cfg.step());
    prev = tk;
    rec.x_pre.push_back(x);
    std::vector<Jet> z;
    const int v0 = rec.jump_var[static_cast<std::size_t>(k)];
    for (int r = 0; r < d; ++r) {
      const double zr = draws.z_at(k)[r];
      z.push_back(v0 >= 0 ? Jet::variable(space, v0 + r, zr) : Jet(zr));
    }
    if (v0 >= 0) {
      const Jet pi = mollified_indicator(z.data(), d, law.M());
      for (int r = 0; r < d; ++r) rec.weights[static_cast<std::size_t>(v0 + r)] = pi;
    }
    lp += law.log_q(z.data(), x.data());
    if (!draws.ghost[static_cast<std::size_t>(k)]) {
      law.jump_m(z.data(), x.data(), c.data());
      for (int r = 0; r < d; ++r) x[static_cast<std::size_t>(r)] += c[static_cast<std::size_t>(r)];
    }
    rec.z.push_back(std::move(z));
  }
  flow(m, x.data(), cfg.t - prev, cfg.step());
  rec.x_end = std::move(x);
  rec.log_density = std::move(lp);
  rec.draws = std::move(draws);
  return rec;
}

PathRecord simulate_path(const TruncatedLaw& law, const SimConfig& cfg, std::uint64_t path) {
  return build_path(law, cfg, simulate_draws(law, cfg, path));
}

Jet path_log_density(const PathRecord& rec, const TruncatedLaw& law) {
  const int d = law.dim();
  Jet lp(-0.5 * d * kLn2Pi);
  for (const Jet& v : rec.delta) lp -= 0.5 * v * v;
  for (std::size_t k = 0; k < rec.z.size(); ++k) lp += law.log_q(rec.z[k].data(), rec.x_pre[k].data());
  return lp;
}

std::vector<Jet> regularize(const PathRecord& rec, double variance) {
  const double s = std::sqrt(variance);
  std::vector<Jet> f;
  for (std::size_t r = 0; r < rec.x_end.size(); ++r) f.push_back(rec.x_end[r] + s * rec.delta[r]);
  return f;
}

std::vector<double> regularize(const PathDraws& draws, double variance) {
  const double s = std::sqrt(variance);
  std::vector<double> f;
  for (std::size_t r = 0; r < draws.x_end.size(); ++r) f.push_back(draws.x_end[r] + s * draws.delta[r]);
  return f;
}

double u_m(const JumpModel& m, double M, double t) {
  if (!m.has_jumps()) return 0.0;
  auto f = [&](double r) {
    const double c = m.jump_lower(r);
    return c * c * m.rate_lower(r) * m.h(r);
  };
  return t * radial_integral(f, m.dim(), M - 1.0, kInf);
}

double truncation_error(const JumpModel& m, double M, double t, double lipschitz) {
  if (!m.has_jumps()) return 0.0;
  auto f = [&](double r) { return m.jump_upper(r) * m.rate_upper(r) * m.h(r); };
  return t * std::exp(lipschitz * t) * radial_integral(f, m.dim(), M, kInf);
}

double truncation_error(const JumpModel& m, double M, double t) {
  return truncation_error(m, M, t, lipschitz_aggregate(m));
}

FlowMatrices tangent_flows(const PathDraws& draws, const TruncatedLaw& law, const SimConfig& cfg) {
  const JumpModel& m = law.model();
  const int d = law.dim();
  using Mat = Eigen::MatrixXd;
  const Mat id = Mat::Identity(d, d);
  FlowMatrices out;
  Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(initial_state(cfg, d).data(), d);
  Mat y = id, yi = id;
  auto g = [&](const Eigen::VectorXd& s) {
    Eigen::VectorXd v(d);
    m.drift(s.data(), v.data());
    return v;
  };
  auto advance = [&](double dt) {
    if (!m.has_drift() || dt <= 0.0) return;
    const long steps = std::max(1L, static_cast<long>(std::ceil(dt / cfg.step())));
    const double h = dt / static_cast<double>(steps);
    for (long s = 0; s < steps; ++s) {
      const Eigen::VectorXd k1 = g(x);
      const Mat g1 = drift_jacobian(m, x.data());
      const Mat ky1 = g1 * y, ki1 = -yi * g1;
      const Eigen::VectorXd x2 = x + 0.5 * h * k1;
      const Mat y2 = y + 0.5 * h * ky1, yi2 = yi + 0.5 * h * ki1;
      const Eigen::VectorXd k2 = g(x2);
      const Mat g2 = drift_jacobian(m, x2.data());
      const Mat ky2 = g2 * y2, ki2 = -yi2 * g2;
      const Eigen::VectorXd x3 = x + 0.5 * h * k2;
      const Mat y3 = y + 0.5 * h * ky2, yi3 = yi + 0.5 * h * ki2;
      const Eigen::VectorXd k3 = g(x3);
      const Mat g3 = drift_jacobian(m, x3.data());
      const Mat ky3 = g3 * y3, ki3 = -yi3 * g3;
      const Eigen::VectorXd x4 = x + h * k3;
      const Mat y4 = y + h * ky3, yi4 = yi + h * ki3;
      const Eigen::VectorXd k4 = g(x4);
      const Mat g4 = drift_jacobian(m, x4.data());
      const Mat ky4 = g4 * y4, ki4 = -yi4 * g4;
      x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      y += (h / 6.0) * (ky1 + 2.0 * ky2 + 2.0 * ky3 + ky4);
      yi += (h / 6.0) * (ki1 + 2.0 * ki2 + 2.0 * ki3 + ki4);
    }
  };
  double prev = 0.0;
  Eigen::VectorXd c(d);
  for (int k = 0; k < draws.jumps(); ++k) {
    const double tk = draws.times[static_cast<std::size_t>(k)];
    advance(tk - prev);
    prev = tk;
    if (draws.ghost[static_cast<std::size_t>(k)]) {
      out.grad_z.push_back(Mat::Zero(d, d));
    } else {
      const JumpJacobians j = truncated_jacobians(law, draws.z_at(k), x.data());
      const Mat a = id + j.dx;
      Eigen::FullPivLU<Mat> lu(a);
      if (!lu.isInvertible() || std::abs(lu.determinant()) < 1e-12)
        throw NonInvertibleJump("I + grad_x c_M is singular at jump " + std::to_string(k + 1));
      law.jump_m(draws.z_at(k), x.data(), c.data());
      x += c;
      y = a * y;
      yi = yi * lu.inverse();
      out.grad_z.push_back(j.dz);
    }
    out.y.push_back(y);
    out.y_inv.push_back(yi);
  }
  advance(draws.t - prev);
  out.y.push_back(y);
  out.y_inv.push_back(yi);
  return out;
}

void check_coordinate_budget(const TruncatedLaw& law, const SimConfig& cfg) {
  if (!law.model().has_jumps()) return;
  const double rate = cfg.differentiate_ghosts ? law.lambda() : law.model().rate_sup() * law.mu_ball();
  const double mean = rate * cfg.t;
  const double need = law.dim() * (1.0 + mean + 6.0 * std::sqrt(mean));
  if (need > kMaxVars)
    throw CoordinateBudgetExceeded("expected coordinate count " + std::to_string(need) + " exceeds the cap " +
                                   std::to_string(kMaxVars) + "; lower M or t");
}

CoupledSample simulate_coupled(const TruncatedLaw& outer, double M, const SimConfig& cfg, std::uint64_t path) {
  const JumpModel& m = outer.model();
  const int d = outer.dim();
  const double M2 = outer.M();
  Philox4x32 rng(cfg.seed, path);
  CoupledSample out{initial_state(cfg, d), initial_state(cfg, d)};
  long n = 0;
  if (outer.lambda() > 0.0) n = std::poisson_distribution<long>(outer.lambda() * cfg.t)(rng);
  std::vector<double> times(static_cast<std::size_t>(n));
  for (auto& s : times) s = cfg.t * rng.uniform();
  std::sort(times.begin(), times.end());
  std::vector<double> c(static_cast<std::size_t>(d));
  auto step = [&](std::vector<double>& x, const std::vector<double>& z, double u, double level) {
    if (!(u < m.rate(z.data(), x.data()))) return;
    m.jump(z.data(), x.data(), c.data());
    const double phi = mollified_indicator(z.data(), d, level);
    for (int r = 0; r < d; ++r) x[static_cast<std::size_t>(r)] += phi * c[static_cast<std::size_t>(r)];
  };
  double prev = 0.0;
  for (double tk : times) {
    flow(m, out.x_m.data(), tk - prev, cfg.step());
    flow(m, out.x_m2.data(), tk - prev, cfg.step());
    prev = tk;
    const std::vector<double> z = outer.sample_base(rng);
    const double u = 2.0 * m.rate_sup() * rng.uniform();
    step(out.x_m, z, u, M);
    step(out.x_m2, z, u, M2);
  }
  flow(m, out.x_m.data(), cfg.t - prev, cfg.step());
  flow(m, out.x_m2.data(), cfg.t - prev, cfg.step());
  return out;
}

}  // namespace jm
