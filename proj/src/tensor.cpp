#include "jm/tensor.hpp"

#include <cmath>
#include <numeric>

namespace jm {

WeightField unit_weights(int nvars) { return WeightField(static_cast<std::size_t>(nvars), Jet(1.0)); }

double DerivTensor::at(std::initializer_list<int> alpha) const {
  std::size_t idx = 0;
  for (int a : alpha) idx = idx * static_cast<std::size_t>(nvars) + static_cast<std::size_t>(a);
  return entries[idx];
}

double DerivTensor::frobenius() const {
  double s = 0.0;
  for (double v : entries) s += v * v;
  return std::sqrt(s);
}

Jet weighted_derivative(const Jet& g, const WeightField& w, int var) {
  const Jet& pi = w[static_cast<std::size_t>(var)];
  if (g.is_constant() || (pi.is_constant() && pi.value() == 0.0)) return Jet(0.0);
  if (pi.is_constant()) return g.derivative(var) * pi.value();
  return pi * g.derivative(var);
}

namespace {

void require_order(const Jet& f, int k) {
  if (!f.is_constant() && f.order() < k)
    throw InsufficientOrder("need jet order " + std::to_string(k) + ", have " + std::to_string(f.order()));
}

// Visits every level 0..l of the recursive derivative, passing the jets of that level.
template <class Visit>
void for_each_level(const Jet& f, const WeightField& w, int l, Visit&& visit) {
  require_order(f, l);
  const int n = static_cast<int>(w.size());
  std::vector<Jet> level{f};
  visit(0, level);
  for (int k = 1; k <= l; ++k) {
    std::vector<Jet> next;
    next.reserve(level.size() * static_cast<std::size_t>(n));
    for (const Jet& g : level)
      for (int j = 0; j < n; ++j) next.push_back(weighted_derivative(g, w, j));
    level = std::move(next);
    visit(k, level);
  }
}

double sum_squares(const std::vector<Jet>& level) {
  double s = 0.0;
  for (const Jet& g : level) s += g.value() * g.value();
  return s;
}

}  // namespace

DerivTensor derive_tensor(const Jet& f, const WeightField& w, int k) {
  DerivTensor t;
  t.k = k;
  t.nvars = static_cast<int>(w.size());
  for_each_level(f, w, k, [&](int level, const std::vector<Jet>& jets) {
    if (level != k) return;
    t.entries.reserve(jets.size());
    for (const Jet& g : jets) t.entries.push_back(g.value());
  });
  return t;
}

std::vector<double> derivative_norms(const Jet& f, const WeightField& w, int l) {
  std::vector<double> out;
  for_each_level(f, w, l, [&](int, const std::vector<Jet>& jets) { out.push_back(std::sqrt(sum_squares(jets))); });
  return out;
}

double sobolev_norm(const Jet& f, const WeightField& w, int l) {
  const auto n = derivative_norms(f, w, l);
  return std::accumulate(n.begin(), n.end(), 0.0);
}

double sobolev_norm(const std::vector<Jet>& f, const WeightField& w, int l) {
  double s = 0.0;
  for (const Jet& c : f) s += sobolev_norm(c, w, l);
  return s;
}

double sobolev_norm1(const Jet& f, const WeightField& w, int l) {
  const auto n = derivative_norms(f, w, l);
  return std::accumulate(n.begin() + 1, n.end(), 0.0);
}

double sobolev_norm1(const std::vector<Jet>& f, const WeightField& w, int l) {
  double s = 0.0;
  for (const Jet& c : f) s += sobolev_norm1(c, w, l);
  return s;
}

namespace {

std::vector<double> process_level_norms(const SimpleProcess& u, const WeightField& w, int l) {
  std::vector<double> sq(static_cast<std::size_t>(l + 1), 0.0);
  for (const Jet& ui : u)
    for_each_level(ui, w, l, [&](int k, const std::vector<Jet>& jets) { sq[static_cast<std::size_t>(k)] += sum_squares(jets); });
  for (double& v : sq) v = std::sqrt(v);
  return sq;
}

// Cumulative sums of level norms: full[l'] = |.|_{l'}, from1[l'] = |.|_{1,l'}.
struct Cumulative {
  std::vector<double> full, from1;
  explicit Cumulative(const std::vector<double>& levels) {
    double a = 0.0, b = 0.0;
    for (std::size_t k = 0; k < levels.size(); ++k) {
      a += levels[k];
      if (k > 0) b += levels[k];
      full.push_back(a);
      from1.push_back(b);
    }
  }
};

}  // namespace

double process_norm(const SimpleProcess& u, const WeightField& w, int l) {
  const auto n = process_level_norms(u, w, l);
  return std::accumulate(n.begin(), n.end(), 0.0);
}

SimpleProcess gradient(const Jet& f, const WeightField& w) {
  require_order(f, 1);
  SimpleProcess d;
  d.reserve(w.size());
  for (int j = 0; j < static_cast<int>(w.size()); ++j) d.push_back(weighted_derivative(f, w, j));
  return d;
}

Jet scalar_product(const SimpleProcess& u, const SimpleProcess& v) {
  Jet s(0.0);
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (u[i].is_constant() && u[i].value() == 0.0) continue;
    if (v[i].is_constant() && v[i].value() == 0.0) continue;
    s += u[i] * v[i];
  }
  return s;
}

double NormMarginReport::min_margin() const {
  return std::min({prod.margin(), scal_p.margin(), scal1.margin(), scal3.margin()});
}

NormMarginReport norm_inequality_margin(const Jet& f, const Jet& g, const Jet& h, const WeightField& w, int l) {
  require_order(f, l + 1);
  require_order(g, l + 1);
  require_order(h, l);
  const double two_l = std::ldexp(1.0, l);
  const Cumulative nf(derivative_norms(f, w, l + 1));
  const Cumulative ng(derivative_norms(g, w, l + 1));
  const Cumulative nh(derivative_norms(h, w, l));
  const SimpleProcess df = gradient(f, w), dg = gradient(g, w);

  NormMarginReport r;
  r.prod.lhs = sobolev_norm(f * g, w, l);
  for (int a = 0; a <= l; ++a)
    for (int b = 0; a + b <= l; ++b) r.prod.rhs += nf.full[a] * ng.full[b];
  r.prod.rhs *= two_l;

  SimpleProcess u(df.size()), v(dg.size());
  for (std::size_t i = 0; i < df.size(); ++i) {
    u[i] = g * df[i];
    v[i] = f * dg[i];
  }
  const Cumulative nu(process_level_norms(u, w, l));
  const Cumulative nv(process_level_norms(v, w, l));
  r.scal_p.lhs = sobolev_norm(scalar_product(u, v), w, l);
  for (int a = 0; a <= l; ++a)
    for (int b = 0; a + b <= l; ++b) r.scal_p.rhs += nu.full[a] * nv.full[b];
  r.scal_p.rhs *= two_l;

  const Jet dfdg = scalar_product(df, dg);
  r.scal1.lhs = sobolev_norm(dfdg, w, l);
  for (int a = 0; a <= l; ++a)
    for (int b = 0; a + b <= l; ++b) r.scal1.rhs += nf.from1[a + 1] * ng.from1[b + 1];
  r.scal1.rhs *= two_l;

  r.scal3.lhs = sobolev_norm(h * dfdg, w, l);
  for (int a = 0; a <= l; ++a)
    for (int b = 0; a + b <= l; ++b)
      for (int c = 0; a + b + c <= l; ++c) r.scal3.rhs += nf.from1[a + 1] * ng.from1[b + 1] * nh.full[c];
  r.scal3.rhs *= two_l * two_l;
  return r;
}

NormMarginReport norm_inequality_margin(const Jet& f, const Jet& g, const WeightField& w, int l) {
  return norm_inequality_margin(f, g, f * g, w, l);
}

}  // namespace jm
