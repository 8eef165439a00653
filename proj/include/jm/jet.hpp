#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "jm/errors.hpp"

namespace jm {

inline constexpr int kMaxVars = 64;
inline constexpr int kMaxOrder = 6;

// Identifies one random coordinate of a path: the Gaussian block (k = 0) or
// component r of the k-th jump amplitude. Components are 1-based.
struct CoordinateId {
  enum class Kind : std::uint8_t { gaussian, jump };
  Kind kind = Kind::gaussian;
  int k = 0;
  int r = 1;

  static CoordinateId gaussian(int r) { return {Kind::gaussian, 0, r}; }
  static CoordinateId jump(int k, int r) { return {Kind::jump, k, r}; }
  friend bool operator==(const CoordinateId&, const CoordinateId&) = default;
};

std::string to_string(const CoordinateId& c);

// Variable index -> coordinate. Jets only know variable indices.
class CoordinateMap {
 public:
  int add(CoordinateId c);
  int size() const { return static_cast<int>(ids_.size()); }
  const CoordinateId& operator[](int var) const { return ids_[var]; }
  int find(const CoordinateId& c) const;  // -1 if absent

 private:
  std::vector<CoordinateId> ids_;
};

// Monomial bookkeeping for dense truncated Taylor polynomials in n variables
// up to total degree K. Monomials are ordered by degree, then lexicographically.
class JetSpace {
 public:
  struct Term {
    std::uint32_t out, a, b;
  };

  static std::shared_ptr<const JetSpace> get(int nvars, int order);

  JetSpace(int nvars, int order);

  int nvars() const { return n_; }
  int order() const { return k_; }
  std::size_t size(int k) const { return size_by_degree_[static_cast<std::size_t>(k)]; }
  std::size_t size() const { return size(k_); }
  int degree(std::size_t m) const { return degree_[m]; }
  std::span<const std::uint8_t> vars(std::size_t m) const {
    return {vars_[m].data(), static_cast<std::size_t>(degree_[m])};
  }
  // Index of the monomial with the given (unsorted) variable list.
  std::size_t index(std::span<const int> vars) const;
  std::size_t shift(std::size_t m, int v) const { return shift_[m * n_ + v]; }
  double shift_factor(std::size_t m, int v) const { return shift_factor_[m * n_ + v]; }
  double factorial(std::size_t m) const { return factorial_[m]; }
  std::span<const Term> products(int k) const {
    return {products_.data(), product_end_[static_cast<std::size_t>(k)]};
  }
  // out += a * b truncated at order k, skipping zero coefficients of the sparser factor.
  void multiply_add(const double* a, const double* b, double* out, int k) const;

 private:
  int n_, k_;
  std::vector<std::size_t> size_by_degree_;
  std::vector<std::uint8_t> degree_;
  std::vector<std::array<std::uint8_t, kMaxOrder>> vars_;
  std::vector<double> factorial_;
  std::vector<std::uint32_t> shift_;
  std::vector<double> shift_factor_;
  std::vector<Term> products_;
  std::vector<std::size_t> product_end_;
  std::vector<Term> by_left_;                  // products sorted by (a, degree of out)
  std::vector<std::uint32_t> left_end_;        // end of a's terms with degree(out) <= s, at a * (k + 1) + s
  std::vector<std::pair<std::uint64_t, std::uint32_t>> lookup_;
};

// Truncated multivariate Taylor expansion. Coefficients are Taylor
// coefficients (partial derivative / multi-index factorial). A Jet without a
// space is an exact constant of unbounded order.
class Jet {
 public:
  static constexpr int kConstantOrder = 1 << 20;

  Jet() : c_(1, 0.0) {}
  Jet(double v) : c_(1, v) {}  // NOLINT(google-explicit-constructor)
  Jet(std::shared_ptr<const JetSpace> space, int order);

  static Jet variable(const std::shared_ptr<const JetSpace>& space, int var, double value);
  static Jet constant(const std::shared_ptr<const JetSpace>& space, double value);

  double value() const { return c_[0]; }
  int order() const { return space_ ? order_ : kConstantOrder; }
  bool is_constant() const { return !space_; }
  const std::shared_ptr<const JetSpace>& space() const { return space_; }
  std::span<const double> coefficients() const { return c_; }
  std::span<double> coefficients() { return c_; }

  // Raw partial derivative over the listed variables (repetition allowed).
  double partial(std::span<const int> vars) const;
  double partial(std::initializer_list<int> vars) const {
    return partial(std::span<const int>(vars.begin(), vars.size()));
  }
  // d/dv, one order lower.
  Jet derivative(int var) const;
  Jet truncated(int order) const;

  Jet operator-() const;
  Jet& operator+=(const Jet& o);
  Jet& operator-=(const Jet& o);
  Jet& operator*=(const Jet& o);
  Jet& operator/=(const Jet& o);
  Jet& operator+=(double v) { c_[0] += v; return *this; }
  Jet& operator-=(double v) { c_[0] -= v; return *this; }
  Jet& operator*=(double v);
  Jet& operator/=(double v);

  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator*(const Jet& a, const Jet& b);
  friend Jet operator/(const Jet& a, const Jet& b);
  friend Jet operator+(Jet a, double b) { return a += b; }
  friend Jet operator+(double a, Jet b) { return b += a; }
  friend Jet operator-(Jet a, double b) { return a -= b; }
  friend Jet operator-(double a, const Jet& b) { return (-b) += a; }
  friend Jet operator*(Jet a, double b) { return a *= b; }
  friend Jet operator*(double a, Jet b) { return b *= a; }
  friend Jet operator/(Jet a, double b) { return a /= b; }
  friend Jet operator/(double a, const Jet& b);

 private:
  friend Jet compose(const Jet& u, std::span<const double> derivs);
  void check_compatible(const Jet& o) const;

  std::shared_ptr<const JetSpace> space_;
  int order_ = 0;
  std::vector<double> c_;
};

// phi(u) given phi^{(j)}(u.value()) for j = 0..u.order() (extra entries ignored).
Jet compose(const Jet& u, std::span<const double> derivs);

Jet recip(const Jet& u);
Jet exp(const Jet& u);
Jet log(const Jet& u);
Jet sin(const Jet& u);
Jet cos(const Jet& u);
Jet sqrt(const Jet& u);
Jet pow(const Jet& u, double a);
Jet tanh(const Jet& u);

inline double value_of(double v) { return v; }
inline double value_of(const Jet& v) { return v.value(); }

}  // namespace jm
