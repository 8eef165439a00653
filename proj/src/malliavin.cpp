#include "jm/malliavin.hpp"

#include <cmath>

namespace jm {

namespace {

bool is_zero(const Jet& j) { return j.is_constant() && j.value() == 0.0; }

Eigen::MatrixXd values(const JetMatrix& m) {
  const auto d = static_cast<Eigen::Index>(m.size());
  Eigen::MatrixXd v(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) v(i, j) = m[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].value();
  return v;
}

int max_order(const JetMatrix& m) {
  int k = 0;
  for (const auto& row : m)
    for (const Jet& j : row)
      if (!j.is_constant()) k = std::max(k, j.order());
  return k;
}

}  // namespace

CovarianceMatrix make_covariance(const Eigen::MatrixXd& sigma) {
  CovarianceMatrix c;
  c.sigma = sigma;
  c.det = sigma.rows() == 0 ? 1.0 : sigma.determinant();
  if (sigma.rows() > 0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma, Eigen::EigenvaluesOnly);
    c.min_eigenvalue = es.eigenvalues().minCoeff();
  }
  return c;
}

bool is_singular(const CovarianceMatrix& c) {
  const auto d = static_cast<double>(c.sigma.rows());
  const double scale = std::pow(c.sigma.trace() / d, d);
  return !(c.det > 1e-12 * scale) || !(c.det > 0.0);
}

std::vector<SimpleProcess> gradient(const std::vector<Jet>& f, const WeightField& w) {
  std::vector<SimpleProcess> d;
  d.reserve(f.size());
  for (const Jet& c : f) d.push_back(gradient(c, w));
  return d;
}

JetMatrix covariance_jets(const std::vector<SimpleProcess>& df) {
  const std::size_t d = df.size();
  JetMatrix s(d, std::vector<Jet>(d));
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = a; b < d; ++b) {
      s[a][b] = scalar_product(df[a], df[b]);
      if (b != a) s[b][a] = s[a][b];
    }
  return s;
}

CovarianceMatrix covariance(const std::vector<Jet>& f, const WeightField& w) {
  const auto df = gradient(f, w);
  const auto d = static_cast<Eigen::Index>(f.size());
  Eigen::MatrixXd s(d, d);
  for (Eigen::Index a = 0; a < d; ++a)
    for (Eigen::Index b = 0; b < d; ++b) {
      double acc = 0.0;
      const auto& u = df[static_cast<std::size_t>(a)];
      const auto& v = df[static_cast<std::size_t>(b)];
      for (std::size_t i = 0; i < u.size(); ++i) acc += u[i].value() * v[i].value();
      s(a, b) = acc;
    }
  return make_covariance(s);
}

Eigen::MatrixXd inverse_covariance(const CovarianceMatrix& c) {
  if (is_singular(c)) throw Singular("covariance matrix is singular (det = " + std::to_string(c.det) + ")");
  return c.sigma.inverse();
}

JetMatrix inverse_jets(const JetMatrix& sigma) {
  const std::size_t d = sigma.size();
  const CovarianceMatrix c = make_covariance(values(sigma));
  const Eigen::MatrixXd inv0 = inverse_covariance(c);
  JetMatrix out(d, std::vector<Jet>(d));
  if (d == 1) {
    out[0][0] = recip(sigma[0][0]);
    return out;
  }
  // sigma = A0 + N with N nilpotent in the truncated algebra:
  // sigma^{-1} = sum_k (-A0^{-1} N)^k A0^{-1}.
  JetMatrix p(d, std::vector<Jet>(d));
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      Jet acc(0.0);
      for (std::size_t l = 0; l < d; ++l) {
        Jet n = sigma[l][j] - sigma[l][j].value();
        acc -= inv0(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(l)) * n;
      }
      p[i][j] = acc;
    }
  JetMatrix term(d, std::vector<Jet>(d));
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      term[i][j] = Jet(inv0(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
      out[i][j] = term[i][j];
    }
  const int k = max_order(sigma);
  for (int it = 0; it < k; ++it) {
    JetMatrix next(d, std::vector<Jet>(d));
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) {
        Jet acc(0.0);
        for (std::size_t l = 0; l < d; ++l) acc += p[i][l] * term[l][j];
        next[i][j] = acc;
        out[i][j] += acc;
      }
    term = std::move(next);
  }
  return out;
}

Jet divergence(const SimpleProcess& u, const WeightField& w, const Jet& log_density) {
  if (!std::isfinite(log_density.value())) throw DegenerateDensity("path density vanishes at the sample");
  Jet acc(0.0);
  for (int i = 0; i < static_cast<int>(u.size()); ++i) {
    const Jet& ui = u[static_cast<std::size_t>(i)];
    const Jet& pi = w[static_cast<std::size_t>(i)];
    if (is_zero(ui) || is_zero(pi)) continue;
    const Jet piu = pi * ui;
    acc += piu.derivative(i);
    acc += piu * log_density.derivative(i);
  }
  return -acc;
}

std::vector<Jet> ou_operator(const std::vector<Jet>& f, const WeightField& w, const Jet& log_density) {
  std::vector<Jet> out;
  out.reserve(f.size());
  for (const Jet& c : f) out.push_back(divergence(gradient(c, w), w, log_density));
  return out;
}

IbpContext::IbpContext(std::vector<Jet> f, WeightField w, Jet log_density)
    : f_(std::move(f)), w_(std::move(w)), lp_(std::move(log_density)) {
  df_ = gradient(f_, w_);
  const JetMatrix sigma = covariance_jets(df_);
  cov_ = make_covariance(values(sigma));
  gamma_ = inverse_jets(sigma);
  const std::size_t d = f_.size(), n = w_.size();
  gdf_.assign(d, SimpleProcess(n));
  for (std::size_t r = 0; r < d; ++r)
    for (std::size_t i = 0; i < n; ++i) {
      Jet acc(0.0);
      for (std::size_t rp = 0; rp < d; ++rp)
        if (!is_zero(df_[rp][i])) acc += gamma_[rp][r] * df_[rp][i];
      gdf_[r][i] = acc;
    }
  for (std::size_t r = 0; r < d; ++r) l_gamma_.push_back(divergence(gdf_[r], w_, lp_));
}

Jet IbpContext::weight(int r, const Jet& g) const {
  const auto& proc = gdf_[static_cast<std::size_t>(r - 1)];
  SimpleProcess u(proc.size());
  for (std::size_t i = 0; i < proc.size(); ++i) u[i] = is_zero(proc[i]) ? Jet(0.0) : g * proc[i];
  return divergence(u, w_, lp_);
}

Jet IbpContext::weight_expanded(int r, const Jet& g) const {
  const auto& proc = gdf_[static_cast<std::size_t>(r - 1)];
  return g * l_gamma(r) - scalar_product(gradient(g, w_), proc);
}

namespace {

template <class Step>
IbpWeight iterate_weight(const IbpContext& ctx, std::span<const int> beta, const Jet& g, Step&& step) {
  for (int r : beta)
    if (r < 1 || r > ctx.dim()) throw std::invalid_argument("multi-index component out of range");
  Jet h = g;
  for (auto it = beta.rbegin(); it != beta.rend(); ++it) h = step(*it, h);
  IbpWeight out;
  out.beta.assign(beta.begin(), beta.end());
  out.value = h.value();
  out.jet = std::move(h);
  for (int r = 1; r <= ctx.dim(); ++r) out.l_gamma.push_back(ctx.l_gamma(r).value());
  return out;
}

}  // namespace

IbpWeight IbpContext::ibp_weight(std::span<const int> beta, const Jet& g) const {
  return iterate_weight(*this, beta, g, [&](int r, const Jet& h) { return weight(r, h); });
}

IbpWeight IbpContext::ibp_weight_expanded(std::span<const int> beta, const Jet& g) const {
  return iterate_weight(*this, beta, g, [&](int r, const Jet& h) { return weight_expanded(r, h); });
}

IbpWeight ibp_weight(const std::vector<Jet>& f, const Jet& g, std::span<const int> beta, const WeightField& w,
                     const Jet& log_density) {
  return IbpContext(f, w, log_density).ibp_weight(beta, g);
}

BoundReport bound_report(const std::vector<Jet>& f, const Jet& g, std::span<const int> beta, const WeightField& w,
                         const Jet& log_density) {
  const IbpContext ctx(f, w, log_density);
  const int q = static_cast<int>(beta.size());
  const double d = static_cast<double>(f.size());
  BoundReport r;
  r.h_abs = std::abs(ctx.ibp_weight(beta, g).value);
  const double lf = q >= 1 ? sobolev_norm(ou_operator(f, w, log_density), w, q - 1) : 0.0;
  r.structural_factor = sobolev_norm(g, w, q) * std::pow(1.0 + sobolev_norm(f, w, q + 1), (6 * d + 1) * q) /
                        std::pow(ctx.covariance().det, 3 * q - 1) * (1.0 + std::pow(lf, q));
  r.implied_constant = r.h_abs / r.structural_factor;
  return r;
}

BoundReport gamma_bound_report(const std::vector<Jet>& f, const WeightField& w, int l) {
  const auto df = gradient(f, w);
  const JetMatrix sigma = covariance_jets(df);
  const CovarianceMatrix c = make_covariance(values(sigma));
  const JetMatrix gamma = inverse_jets(sigma);
  BoundReport r;
  for (const auto& row : gamma)
    for (const Jet& e : row) r.h_abs += sobolev_norm(e, w, l);
  const double d = static_cast<double>(f.size());
  r.structural_factor =
      (1.0 + std::pow(sobolev_norm1(f, w, l + 1), 2 * d * (l + 1))) / std::pow(c.det, l + 1);
  r.implied_constant = r.h_abs / r.structural_factor;
  return r;
}

}  // namespace jm
