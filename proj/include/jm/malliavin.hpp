#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "jm/tensor.hpp"

namespace jm {

using JetMatrix = std::vector<std::vector<Jet>>;

struct CovarianceMatrix {
  Eigen::MatrixXd sigma;
  double det = 0.0;
  double min_eigenvalue = 0.0;
};

CovarianceMatrix make_covariance(const Eigen::MatrixXd& sigma);
// det <= 1e-12 (trace/d)^d
bool is_singular(const CovarianceMatrix& c);

std::vector<SimpleProcess> gradient(const std::vector<Jet>& f, const WeightField& w);
JetMatrix covariance_jets(const std::vector<SimpleProcess>& df);
CovarianceMatrix covariance(const std::vector<Jet>& f, const WeightField& w);
Eigen::MatrixXd inverse_covariance(const CovarianceMatrix& c);
// Inverse of a matrix of jets, truncated at the jets' order.
JetMatrix inverse_jets(const JetMatrix& sigma);

Jet divergence(const SimpleProcess& u, const WeightField& w, const Jet& log_density);
std::vector<Jet> ou_operator(const std::vector<Jet>& f, const WeightField& w, const Jet& log_density);

struct IbpWeight {
  std::vector<int> beta;  // components in 1..d
  double value = 0.0;
  Jet jet;
  std::vector<double> l_gamma;  // L^gamma_r(F), r = 1..d
};

// Per-path operator state for a fixed F: DF, sigma, gamma and the processes
// (gamma DF)^r, shared by all weights built on F.
class IbpContext {
 public:
  IbpContext(std::vector<Jet> f, WeightField w, Jet log_density);

  int dim() const { return static_cast<int>(f_.size()); }
  const std::vector<Jet>& functional() const { return f_; }
  const WeightField& weights() const { return w_; }
  const Jet& log_density() const { return lp_; }
  const std::vector<SimpleProcess>& df() const { return df_; }
  const CovarianceMatrix& covariance() const { return cov_; }
  const JetMatrix& gamma() const { return gamma_; }
  const Jet& l_gamma(int r) const { return l_gamma_[static_cast<std::size_t>(r - 1)]; }

  // H_r(F, G) = sum_r' delta(G gamma^{r' r} DF^{r'})
  Jet weight(int r, const Jet& g) const;
  // Same weight through G L^gamma_r(F) - <DG, (gamma DF)^r>.
  Jet weight_expanded(int r, const Jet& g) const;
  IbpWeight ibp_weight(std::span<const int> beta, const Jet& g) const;
  IbpWeight ibp_weight_expanded(std::span<const int> beta, const Jet& g) const;

 private:
  std::vector<Jet> f_;
  WeightField w_;
  Jet lp_;
  std::vector<SimpleProcess> df_;
  CovarianceMatrix cov_;
  JetMatrix gamma_;
  std::vector<SimpleProcess> gdf_;
  std::vector<Jet> l_gamma_;
};

IbpWeight ibp_weight(const std::vector<Jet>& f, const Jet& g, std::span<const int> beta, const WeightField& w,
                     const Jet& log_density);

struct BoundReport {
  double h_abs = 0.0;
  double structural_factor = 0.0;
  double implied_constant = 0.0;
};

// |H| against |G|_q (1+|F|_{q+1})^{(6d+1)q} det^{-(3q-1)} (1+|LF|_{q-1}^q).
BoundReport bound_report(const std::vector<Jet>& f, const Jet& g, std::span<const int> beta, const WeightField& w,
                         const Jet& log_density);

// |gamma(F)|_l against det^{-(l+1)} (1 + |F|_{1,l+1}^{2d(l+1)}).
BoundReport gamma_bound_report(const std::vector<Jet>& f, const WeightField& w, int l);

}  // namespace jm
