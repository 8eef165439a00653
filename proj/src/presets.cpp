#include "jm/presets.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "jm/errors.hpp"
#include "jm/quadrature.hpp"

namespace jm {

namespace {

using nlohmann::json;

// Reads numeric parameters with defaults and rejects unknown names.
class Params {
 public:
  Params(const std::string& preset, const json& j) : preset_(preset), j_(j.is_null() ? json::object() : j) {
    if (!j_.is_object()) throw ConfigError(preset_ + ": params must be an object");
  }
  double get(const std::string& key, double def) {
    used_.insert(key);
    if (!j_.contains(key)) return def;
    const json& v = j_.at(key);
    if (!v.is_number()) throw ConfigError(preset_ + ": parameter '" + key + "' must be a number");
    return v.get<double>();
  }
  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!used_.count(k)) throw ConfigError(preset_ + ": unknown parameter '" + k + "'");
  }

 private:
  std::string preset_;
  json j_;
  std::set<std::string> used_;
};

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

class GaussianOnly final : public ModelBase<GaussianOnly> {
 public:
  GaussianOnly(int d, Params& p) : d_(d), u_(p.get("U", 1.0)) { require(u_ > 0.0, "gaussian-only: U must be > 0"); }
  std::string name() const override { return "gaussian-only"; }
  int dim() const override { return d_; }
  bool has_jumps() const override { return false; }
  template <class T> void jump_t(const T*, const T*, T* out) const {
    for (int r = 0; r < d_; ++r) out[r] = T(0.0);
  }
  template <class T> T rate_t(const T*, const T*) const { return T(0.0); }
  template <class T> T log_h_t(const T&) const { return T(0.0); }
  double rate_sup() const override { return 0.0; }
  double rate_upper(double) const override { return 0.0; }
  double rate_lower(double) const override { return 0.0; }
  double jump_upper(double) const override { return 0.0; }
  double jump_lower(double) const override { return 0.0; }
  double rate_x_lipschitz() const override { return 0.0; }
  std::optional<double> variance_override() const override { return u_; }

 private:
  int d_;
  double u_;
};

// Shared pieces of the exponential amplitude c^r = beta(x) z_r exp(-a <z>^c).
struct ExpAmplitude {
  double a, b, c, beta;
  template <class T> void apply(int d, const T* z, const T* x, T* out) const {
    const T br2 = 1.0 + sc::sq_norm(z, d);
    const T amp = (1.0 + beta * sc::cos(x[0])) * sc::exp(-a * sc::pow(br2, 0.5 * c));
    for (int r = 0; r < d; ++r) out[r] = amp * z[r];
  }
  double upper(double r) const {
    const double k = std::pow(1.0 / (c * (a - b)), 1.0 / c) * std::exp(-1.0 / c);
    return (1.0 + beta) * (1.0 + k) * std::exp(-b * std::pow(r, c));
  }
  double lower(double r) const {
    const double br = std::sqrt(1.0 + r * r);
    return (1.0 - beta) * std::exp(-a * std::pow(br, c)) *
           std::min(1.0, std::abs(1.0 - a * c * std::pow(br, c - 2.0) * r * r));
  }
};

ExpAmplitude read_exp_amplitude(const std::string& preset, Params& p, double a_def, double c_def, double b_def) {
  ExpAmplitude e{p.get("a", a_def), 0.0, p.get("c_exp", c_def), p.get("beta", 0.25)};
  e.b = p.get("b", b_def < 0 ? 0.5 * e.a : b_def);
  require(e.a > 0 && e.c > 0, preset + ": a and c_exp must be > 0");
  require(e.b > 0 && e.b < e.a, preset + ": need 0 < b < a");
  require(e.beta >= 0 && e.beta < 1, preset + ": beta must be in [0, 1)");
  return e;
}

double theta_exponential(int d, double c, double lower_rate, double a) {
  if (c < d) return kInf;
  if (c > d) return 0.0;
  return lower_rate * unit_ball_volume(d) / (2.0 * a);
}

class Example1Exp final : public ModelBase<Example1Exp> {
 public:
  Example1Exp(int d, Params& p)
      : d_(d), amp_(read_exp_amplitude("example1-exp", p, 1.0, 1.0, 0.5)), glo_(p.get("gamma_low", 0.5)),
        ghi_(p.get("gamma_high", 1.0)), kappa_(p.get("kappa", 0.5)) {
    require(glo_ > 0 && ghi_ >= glo_, "example1-exp: need 0 < gamma_low <= gamma_high");
  }
  std::string name() const override { return "example1-exp"; }
  int dim() const override { return d_; }
  bool has_drift() const override { return kappa_ != 0.0; }
  template <class T> void jump_t(const T* z, const T* x, T* out) const { amp_.apply(d_, z, x, out); }
  template <class T> T rate_t(const T*, const T* x) const {
    return glo_ + (ghi_ - glo_) * 0.5 * (1.0 + sc::sin(x[0]));
  }
  template <class T> T log_h_t(const T&) const { return T(0.0); }
  template <class T> void drift_t(const T* x, T* out) const {
    for (int r = 0; r < d_; ++r) out[r] = -kappa_ * sc::tanh(x[r]);
  }
  double rate_sup() const override { return ghi_; }
  double rate_upper(double) const override { return ghi_; }
  double rate_lower(double) const override { return glo_; }
  double jump_upper(double r) const override { return amp_.upper(r); }
  double jump_lower(double r) const override { return amp_.lower(r); }
  double rate_x_lipschitz() const override { return 0.5 * (ghi_ - glo_); }
  double drift_lipschitz() const override { return std::abs(kappa_); }
  bool rate_z_independent() const override { return true; }
  std::optional<double> mu_ball(double radius) const override { return unit_ball_volume(d_) * std::pow(radius, d_); }
  std::optional<RegularityDecl> regularity() const override {
    return RegularityDecl{'b', theta_exponential(d_, amp_.c, glo_, amp_.a), static_cast<double>(d_), kInf, kInf};
  }

 private:
  int d_;
  ExpAmplitude amp_;
  double glo_, ghi_, kappa_;
};

class Example1Poly final : public ModelBase<Example1Poly> {
 public:
  Example1Poly(int d, Params& p)
      : d_(d), p_(p.get("p", 8.0)), beta_(p.get("beta", 0.25)), glo_(p.get("gamma_low", 0.5)),
        ghi_(p.get("gamma_high", 1.0)), kappa_(p.get("kappa", 0.0)) {
    require(p_ > d_, "example1-poly: need p > d");
    require(beta_ >= 0 && beta_ < 1, "example1-poly: beta must be in [0, 1)");
    require(glo_ > 0 && ghi_ >= glo_, "example1-poly: need 0 < gamma_low <= gamma_high");
  }
  std::string name() const override { return "example1-poly"; }
  int dim() const override { return d_; }
  bool has_drift() const override { return kappa_ != 0.0; }
  template <class T> void jump_t(const T* z, const T* x, T* out) const {
    const T amp = (1.0 + beta_ * sc::cos(x[0])) * sc::pow(1.0 + sc::sq_norm(z, d_), -0.5 * (p_ + 1.0));
    for (int r = 0; r < d_; ++r) out[r] = amp * z[r];
  }
  template <class T> T rate_t(const T*, const T* x) const {
    return glo_ + (ghi_ - glo_) * 0.5 * (1.0 + sc::sin(x[0]));
  }
  template <class T> T log_h_t(const T&) const { return T(0.0); }
  template <class T> void drift_t(const T* x, T* out) const {
    for (int r = 0; r < d_; ++r) out[r] = -kappa_ * sc::tanh(x[r]);
  }
  double rate_sup() const override { return ghi_; }
  double rate_upper(double) const override { return ghi_; }
  double rate_lower(double) const override { return glo_; }
  double jump_upper(double r) const override { return 2.0 * (1.0 + beta_) / (1.0 + std::pow(r, p_)); }
  double jump_lower(double r) const override {
    const double br2 = 1.0 + r * r;
    return (1.0 - beta_) * std::pow(br2, -0.5 * (p_ + 1.0)) * std::min(1.0, std::abs(1.0 - (p_ + 1.0) * r * r / br2));
  }
  double rate_x_lipschitz() const override { return 0.5 * (ghi_ - glo_); }
  double drift_lipschitz() const override { return std::abs(kappa_); }
  bool rate_z_independent() const override { return true; }
  std::optional<double> mu_ball(double radius) const override { return unit_ball_volume(d_) * std::pow(radius, d_); }
  std::optional<RegularityDecl> regularity() const override {
    return RegularityDecl{'b', kInf, static_cast<double>(d_), p_ - d_, 2.0 * p_ - d_};
  }

 private:
  int d_;
  double p_, beta_, glo_, ghi_, kappa_;
};

class Example2 final : public ModelBase<Example2> {
 public:
  Example2(int d, Params& p)
      : d_(d), amp_(read_exp_amplitude("example2", p, 0.01, static_cast<double>(d), -1.0)),
        alo_(p.get("alpha_low", 0.5)), ahi_(p.get("alpha_high", 1.0)), q_(p.get("q", d + 1.0)),
        kappa_(p.get("kappa", 0.0)) {
    require(alo_ > 0 && ahi_ >= alo_, "example2: need 0 < alpha_low <= alpha_high");
    require(q_ > d_, "example2: need q > d");
  }
  std::string name() const override { return "example2"; }
  int dim() const override { return d_; }
  bool has_drift() const override { return kappa_ != 0.0; }
  template <class T> void jump_t(const T* z, const T* x, T* out) const { amp_.apply(d_, z, x, out); }
  template <class T> T rate_t(const T* z, const T* x) const {
    const T alpha = alo_ + (ahi_ - alo_) * 0.5 * (1.0 + sc::sin(x[0]));
    return sc::exp(-alpha * sc::pow(1.0 + sc::sq_norm(z, d_), -0.5 * q_));
  }
  template <class T> T log_h_t(const T&) const { return T(0.0); }
  template <class T> void drift_t(const T* x, T* out) const {
    for (int r = 0; r < d_; ++r) out[r] = -kappa_ * sc::tanh(x[r]);
  }
  double rate_sup() const override { return 1.0; }
  double rate_upper(double r) const override { return std::exp(-alo_ * std::pow(1.0 + r * r, -0.5 * q_)); }
  double rate_lower(double r) const override { return std::exp(-ahi_ * std::pow(1.0 + r * r, -0.5 * q_)); }
  double jump_upper(double r) const override { return amp_.upper(r); }
  double jump_lower(double r) const override { return amp_.lower(r); }
  double rate_x_lipschitz() const override { return 0.5 * (ahi_ - alo_); }
  double drift_lipschitz() const override { return std::abs(kappa_); }
  std::optional<double> mu_ball(double radius) const override { return unit_ball_volume(d_) * std::pow(radius, d_); }
  std::optional<RegularityDecl> regularity() const override {
    return RegularityDecl{'a', theta_exponential(d_, amp_.c, 1.0, amp_.a), static_cast<double>(d_), kInf, kInf};
  }

 private:
  int d_;
  ExpAmplitude amp_;
  double alo_, ahi_, q_, kappa_;
};

// dX = f(X) z / (1 + z^2) with intensity (1 + z^2)^{(rho - 1)/2} dz, accepted
// at rate g(X).
class Example3Levy final : public ModelBase<Example3Levy> {
 public:
  Example3Levy(Params& p)
      : rho_(p.get("rho", 0.5)), f0_(p.get("f0", 1.0)), f1_(p.get("f1", 0.3)), g0_(p.get("g0", 0.75)),
        g1_(p.get("g1", 0.2)) {
    require(rho_ > 0 && rho_ < 1, "example3-levy: rho must be in (0, 1)");
    require(f0_ > std::abs(f1_), "example3-levy: need f0 > |f1|");
    require(g0_ > std::abs(g1_), "example3-levy: need g0 > |g1|");
  }
  std::string name() const override { return "example3-levy"; }
  int dim() const override { return 1; }
  template <class T> void jump_t(const T* z, const T* x, T* out) const {
    out[0] = (f0_ + f1_ * sc::sin(x[0])) * z[0] / (1.0 + z[0] * z[0]);
  }
  template <class T> T rate_t(const T*, const T* x) const { return g0_ + g1_ * sc::cos(x[0]); }
  template <class T> T log_h_t(const T& r2) const { return 0.5 * (rho_ - 1.0) * sc::log(1.0 + r2); }
  double rate_sup() const override { return g0_ + std::abs(g1_); }
  double rate_upper(double) const override { return g0_ + std::abs(g1_); }
  double rate_lower(double) const override { return g0_ - std::abs(g1_); }
  double jump_upper(double r) const override { return 2.0 * (f0_ + std::abs(f1_)) / (1.0 + r); }
  double jump_lower(double r) const override {
    const double br2 = 1.0 + r * r;
    return (f0_ - std::abs(f1_)) * std::abs(1.0 - r * r) / (br2 * br2);
  }
  double rate_x_lipschitz() const override { return std::abs(g1_); }
  bool rate_z_independent() const override { return true; }
  std::optional<RegularityDecl> regularity() const override {
    return RegularityDecl{'b', kInf, rho_, 1.0 - rho_, 2.0 - rho_};
  }

 private:
  double rho_, f0_, f1_, g0_, g1_;
};

// Finite Gaussian intensity with at most a handful of jumps per path.
class OneJump final : public ModelBase<OneJump> {
 public:
  OneJump(Params& p) : mass_(p.get("mass", 1.0)), beta_(p.get("beta", 0.25)), kappa_(p.get("kappa", 0.5)) {
    require(mass_ > 0, "one-jump: mass must be > 0");
    require(beta_ >= 0 && beta_ < 1, "one-jump: beta must be in [0, 1)");
  }
  std::string name() const override { return "one-jump"; }
  int dim() const override { return 1; }
  bool has_drift() const override { return kappa_ != 0.0; }
  template <class T> void jump_t(const T* z, const T* x, T* out) const {
    out[0] = (1.0 + beta_ * sc::cos(x[0])) * sc::tanh(z[0]);
  }
  template <class T> T rate_t(const T* z, const T* x) const { return 0.5 + 0.25 * sc::sin(x[0] + z[0]); }
  template <class T> T log_h_t(const T& r2) const {
    return (std::log(mass_) - 0.5 * std::log(2.0 * std::numbers::pi)) - 0.5 * r2;
  }
  template <class T> void drift_t(const T* x, T* out) const { out[0] = -kappa_ * sc::tanh(x[0]); }
  double rate_sup() const override { return 0.75; }
  double rate_upper(double) const override { return 0.75; }
  double rate_lower(double) const override { return 0.25; }
  double jump_upper(double) const override { return 1.0 + beta_; }
  double jump_lower(double r) const override {
    const double s = 1.0 / std::cosh(r);
    return (1.0 - beta_) * s * s;
  }
  double rate_x_lipschitz() const override { return 0.25; }
  double drift_lipschitz() const override { return std::abs(kappa_); }
  std::optional<double> mu_ball(double radius) const override {
    return mass_ * std::erf(radius / std::numbers::sqrt2);
  }

 private:
  double mass_, beta_, kappa_;
};

struct PresetDefaults {
  double M, t, h_max;
  int jet_order;
};

const std::map<std::string, PresetDefaults>& defaults() {
  static const std::map<std::string, PresetDefaults> m{
      {"gaussian-only", {8.0, 1.0, 0.0, 3}}, {"example1-exp", {4.0, 1.0, 1e-2, 2}},
      {"example1-poly", {4.0, 1.0, 1e-2, 2}}, {"example2", {3.0, 1.0, 1e-2, 2}},
      {"example3-levy", {8.0, 1.0, 0.0, 2}},  {"one-jump", {1.5, 1.0, 1e-2, 2}},
  };
  return m;
}

template <class T>
T field(const json& doc, const char* key, T def) {
  if (!doc.contains(key) || doc.at(key).is_null()) return def;
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("field '") + key + "': " + e.what());
  }
}

}  // namespace

std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  for (const auto& [k, v] : defaults()) out.push_back(k);
  return out;
}

std::shared_ptr<const JumpModel> make_preset(const std::string& name, int d, const json& params) {
  if (!defaults().count(name)) throw ConfigError("unknown preset '" + name + "'");
  require(d >= 1 && d <= 3, name + ": d must be 1, 2 or 3");
  Params p(name, params);
  std::shared_ptr<const JumpModel> m;
  if (name == "gaussian-only") m = std::make_shared<GaussianOnly>(d, p);
  else if (name == "example1-exp") m = std::make_shared<Example1Exp>(d, p);
  else if (name == "example1-poly") m = std::make_shared<Example1Poly>(d, p);
  else if (name == "example2") m = std::make_shared<Example2>(d, p);
  else {
    require(d == 1, name + ": only d = 1 is supported");
    if (name == "example3-levy") m = std::make_shared<Example3Levy>(p);
    else m = std::make_shared<OneJump>(p);
  }
  p.finish();
  return m;
}

ModelConfig default_config(const std::string& preset, int d) {
  const auto it = defaults().find(preset);
  if (it == defaults().end()) throw ConfigError("unknown preset '" + preset + "'");
  ModelConfig c;
  c.preset = preset;
  c.d = d;
  c.sim.M = it->second.M;
  c.sim.t = it->second.t;
  c.sim.h_max = it->second.h_max;
  c.sim.jet_order = it->second.jet_order;
  rebuild_model(c);
  return c;
}

void rebuild_model(ModelConfig& cfg) {
  require(cfg.sim.t > 0, "t must be > 0");
  require(cfg.sim.M >= 1, "M must be >= 1");
  require(cfg.sim.h_max >= 0, "h_max must be >= 0");
  require(cfg.sim.jet_order >= 1 && cfg.sim.jet_order <= kMaxOrder, "jet_order must be in 1..6");
  require(!cfg.sim.variance || *cfg.sim.variance >= 0, "variance must be >= 0");
  require(cfg.sim.x0.empty() || static_cast<int>(cfg.sim.x0.size()) == cfg.d, "x0 must have d entries");
  cfg.model = make_preset(cfg.preset, cfg.d, cfg.params);
}

ModelConfig load_config(const json& doc) {
  require(doc.is_object(), "config must be a JSON object");
  static const std::set<std::string> known{"d", "t", "M", "h_max", "jet_order", "seed", "x0",
                                           "variance", "differentiate_ghosts", "coefficients"};
  for (const auto& [k, v] : doc.items())
    if (!known.count(k)) throw ConfigError("unknown config field '" + k + "'");
  require(doc.contains("coefficients"), "missing field 'coefficients'");
  const json& coef = doc.at("coefficients");
  std::string preset;
  json params = json::object();
  if (coef.is_string()) {
    preset = coef.get<std::string>();
  } else {
    require(coef.is_object() && coef.contains("preset") && coef.at("preset").is_string(),
            "field 'coefficients' must be a preset name or {preset, params}");
    preset = coef.at("preset").get<std::string>();
    if (coef.contains("params")) params = coef.at("params");
  }
  const int d = field<int>(doc, "d", 1);
  ModelConfig c = default_config(preset, d);
  c.params = params;
  c.sim.t = field<double>(doc, "t", c.sim.t);
  c.sim.M = field<double>(doc, "M", c.sim.M);
  c.sim.h_max = field<double>(doc, "h_max", c.sim.h_max);
  c.sim.jet_order = field<int>(doc, "jet_order", c.sim.jet_order);
  c.sim.seed = field<std::uint64_t>(doc, "seed", c.sim.seed);
  c.sim.x0 = field<std::vector<double>>(doc, "x0", {});
  if (doc.contains("variance") && !doc.at("variance").is_null()) c.sim.variance = field<double>(doc, "variance", 0.0);
  c.sim.differentiate_ghosts = field<bool>(doc, "differentiate_ghosts", false);
  rebuild_model(c);
  return c;
}

ModelConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  json doc;
  try {
    doc = json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return load_config(doc);
}

json to_json(const ModelConfig& c) {
  json j;
  j["d"] = c.d;
  j["t"] = c.sim.t;
  j["M"] = c.sim.M;
  j["h_max"] = c.sim.step();
  j["jet_order"] = c.sim.jet_order;
  j["seed"] = c.sim.seed;
  j["x0"] = c.sim.x0.empty() ? std::vector<double>(static_cast<std::size_t>(c.d), 0.0) : c.sim.x0;
  j["variance"] = c.sim.variance ? json(*c.sim.variance) : json(nullptr);
  j["differentiate_ghosts"] = c.sim.differentiate_ghosts;
  j["coefficients"] = {{"preset", c.preset}, {"params", c.params}};
  return j;
}

}  // namespace jm
