#pragma once

#include <vector>

#include "jm/jet.hpp"

namespace jm {

// One weight pi per jet variable.
using WeightField = std::vector<Jet>;
using SimpleProcess = std::vector<Jet>;

WeightField unit_weights(int nvars);

// D^k F with entries indexed by ordered tuples (a_1..a_k), a_k varying fastest.
struct DerivTensor {
  int k = 0;
  int nvars = 0;
  std::vector<double> entries;

  double at(std::initializer_list<int> alpha) const;
  double frobenius() const;
};

// D_j G = pi_j d_j G, one order lower than min(G, pi_j + 1).
Jet weighted_derivative(const Jet& g, const WeightField& w, int var);

DerivTensor derive_tensor(const Jet& f, const WeightField& w, int k);

// |D^k F| for k = 0..l, from the recursive assembly.
std::vector<double> derivative_norms(const Jet& f, const WeightField& w, int l);

double sobolev_norm(const Jet& f, const WeightField& w, int l);
double sobolev_norm(const std::vector<Jet>& f, const WeightField& w, int l);
// |F|_{1,l} = sum_{k=1..l} |D^k F|.
double sobolev_norm1(const Jet& f, const WeightField& w, int l);
double sobolev_norm1(const std::vector<Jet>& f, const WeightField& w, int l);
// |U|_l for a simple process: sum_k sqrt(sum_i |D^k U_i|^2).
double process_norm(const SimpleProcess& u, const WeightField& w, int l);

struct InequalityMargin {
  double lhs = 0.0, rhs = 0.0;
  double margin() const { return rhs - lhs; }
};

// Product, scalar-product, gradient-pairing and triple inequalities for
// Sobolev norms. The processes are U = G DF and V = F DG; the third factor of
// the triple inequality is H.
struct NormMarginReport {
  InequalityMargin prod, scal_p, scal1, scal3;
  double min_margin() const;
};

NormMarginReport norm_inequality_margin(const Jet& f, const Jet& g, const Jet& h, const WeightField& w, int l);
NormMarginReport norm_inequality_margin(const Jet& f, const Jet& g, const WeightField& w, int l);

SimpleProcess gradient(const Jet& f, const WeightField& w);
Jet scalar_product(const SimpleProcess& u, const SimpleProcess& v);

}  // namespace jm
