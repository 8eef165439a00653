#include "jm/jet.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>

namespace jm {

std::string to_string(const CoordinateId& c) {
  if (c.kind == CoordinateId::Kind::gaussian) return "g" + std::to_string(c.r);
  return "z" + std::to_string(c.k) + "." + std::to_string(c.r);
}

int CoordinateMap::add(CoordinateId c) {
  if (find(c) >= 0) throw std::invalid_argument("duplicate coordinate " + to_string(c));
  ids_.push_back(c);
  return size() - 1;
}

int CoordinateMap::find(const CoordinateId& c) const {
  for (int i = 0; i < size(); ++i)
    if (ids_[i] == c) return i;
  return -1;
}

namespace {

std::uint64_t encode(std::span<const std::uint8_t> sorted) {
  std::uint64_t key = sorted.size();
  for (std::size_t i = 0; i < sorted.size(); ++i)
    key |= static_cast<std::uint64_t>(sorted[i] + 1) << (3 + 7 * i);
  return key;
}

void enumerate(int n, int degree, int start, std::vector<std::uint8_t>& cur,
               std::vector<std::array<std::uint8_t, kMaxOrder>>& out) {
  if (static_cast<int>(cur.size()) == degree) {
    std::array<std::uint8_t, kMaxOrder> a{};
    std::copy(cur.begin(), cur.end(), a.begin());
    out.push_back(a);
    return;
  }
  for (int v = start; v < n; ++v) {
    cur.push_back(static_cast<std::uint8_t>(v));
    enumerate(n, degree, v, cur, out);
    cur.pop_back();
  }
}

}  // namespace

std::shared_ptr<const JetSpace> JetSpace::get(int nvars, int order) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::shared_ptr<const JetSpace>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[{nvars, order}];
  if (!slot) slot = std::make_shared<const JetSpace>(nvars, order);
  return slot;
}

JetSpace::JetSpace(int nvars, int order) : n_(nvars), k_(order) {
  if (nvars < 0 || nvars > kMaxVars)
    throw CoordinateBudgetExceeded("jet space supports at most " + std::to_string(kMaxVars) +
                                   " coordinates, requested " + std::to_string(nvars));
  if (order < 0 || order > kMaxOrder)
    throw InsufficientOrder("jet order must lie in [0, " + std::to_string(kMaxOrder) + "]");

  std::vector<std::uint8_t> cur;
  for (int s = 0; s <= k_; ++s) {
    enumerate(n_, s, 0, cur, vars_);
    size_by_degree_.push_back(vars_.size());
  }
  const std::size_t total = vars_.size();
  degree_.resize(total);
  factorial_.resize(total);
  lookup_.reserve(total);
  for (std::size_t m = 0, s = 0; m < total; ++m) {
    while (m >= size_by_degree_[s]) ++s;
    degree_[m] = static_cast<std::uint8_t>(s);
    double f = 1.0;
    int run = 1;
    for (std::size_t i = 1; i < s; ++i) {
      run = vars_[m][i] == vars_[m][i - 1] ? run + 1 : 1;
      f *= run;
    }
    factorial_[m] = f;
    lookup_.emplace_back(encode(vars(m)), static_cast<std::uint32_t>(m));
  }
  std::sort(lookup_.begin(), lookup_.end());

  const std::size_t lower = k_ > 0 ? size(k_ - 1) : 0;
  shift_.assign(lower * n_, 0);
  shift_factor_.assign(lower * n_, 0.0);
  std::array<int, kMaxOrder> buf{};
  for (std::size_t m = 0; m < lower; ++m) {
    const int s = degree_[m];
    for (int v = 0; v < n_; ++v) {
      int mult = 0;
      for (int i = 0; i < s; ++i) {
        buf[i] = vars_[m][i];
        mult += buf[i] == v;
      }
      buf[s] = v;
      shift_[m * n_ + v] = static_cast<std::uint32_t>(index({buf.data(), static_cast<std::size_t>(s + 1)}));
      shift_factor_[m * n_ + v] = mult + 1;
    }
  }

  // Convolution terms: every out monomial paired with each distinct sub-multiset.
  for (std::size_t m = 0; m < total; ++m) {
    const int s = degree_[m];
    std::vector<std::pair<int, int>> groups;  // (var, multiplicity)
    for (int i = 0; i < s; ++i) {
      if (!groups.empty() && groups.back().first == vars_[m][i])
        ++groups.back().second;
      else
        groups.emplace_back(vars_[m][i], 1);
    }
    std::vector<int> take(groups.size(), 0);
    while (true) {
      std::array<int, kMaxOrder> va{}, vb{};
      int na = 0, nb = 0;
      for (std::size_t g = 0; g < groups.size(); ++g) {
        for (int j = 0; j < take[g]; ++j) va[na++] = groups[g].first;
        for (int j = take[g]; j < groups[g].second; ++j) vb[nb++] = groups[g].first;
      }
      products_.push_back({static_cast<std::uint32_t>(m),
                           static_cast<std::uint32_t>(index({va.data(), static_cast<std::size_t>(na)})),
                           static_cast<std::uint32_t>(index({vb.data(), static_cast<std::size_t>(nb)}))});
      std::size_t g = 0;
      while (g < groups.size() && take[g] == groups[g].second) take[g++] = 0;
      if (g == groups.size()) break;
      ++take[g];
    }
  }
  for (int s = 0; s <= k_; ++s) {
    const auto bound = static_cast<std::uint32_t>(size(s));
    auto it = std::lower_bound(products_.begin(), products_.end(), bound,
                               [](const Term& t, std::uint32_t b) { return t.out < b; });
    product_end_.push_back(static_cast<std::size_t>(it - products_.begin()));
  }
  by_left_ = products_;
  std::stable_sort(by_left_.begin(), by_left_.end(), [&](const Term& x, const Term& y) {
    return x.a != y.a ? x.a < y.a : degree_[x.out] < degree_[y.out];
  });
  left_end_.assign(total * (k_ + 1), 0);
  std::size_t pos = 0;
  for (std::size_t a = 0; a < total; ++a)
    for (int s = 0; s <= k_; ++s) {
      while (pos < by_left_.size() && by_left_[pos].a == a && degree_[by_left_[pos].out] <= s) ++pos;
      left_end_[a * (k_ + 1) + s] = static_cast<std::uint32_t>(pos);
    }
}

void JetSpace::multiply_add(const double* a, const double* b, double* out, int k) const {
  const std::size_t len = size(k);
  std::size_t na = 0, nb = 0;
  for (std::size_t i = 0; i < len; ++i) {
    na += a[i] != 0.0;
    nb += b[i] != 0.0;
  }
  if (nb < na) std::swap(a, b);
  const std::size_t stride = static_cast<std::size_t>(k_) + 1;
  for (std::size_t i = 0; i < len; ++i) {
    const double ai = a[i];
    if (ai == 0.0) continue;
    const std::size_t begin = i == 0 ? 0 : left_end_[i * stride - 1];
    const std::size_t end = left_end_[i * stride + static_cast<std::size_t>(k)];
    for (std::size_t t = begin; t < end; ++t) out[by_left_[t].out] += ai * b[by_left_[t].b];
  }
}

std::size_t JetSpace::index(std::span<const int> vars) const {
  if (static_cast<int>(vars.size()) > k_) throw InsufficientOrder("monomial degree exceeds jet order");
  std::array<std::uint8_t, kMaxOrder> s{};
  for (std::size_t i = 0; i < vars.size(); ++i) {
    if (vars[i] < 0 || vars[i] >= n_) throw std::out_of_range("jet variable index out of range");
    s[i] = static_cast<std::uint8_t>(vars[i]);
  }
  std::sort(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(vars.size()));
  const std::uint64_t key = encode({s.data(), vars.size()});
  auto it = std::lower_bound(lookup_.begin(), lookup_.end(), std::make_pair(key, std::uint32_t{0}));
  return it->second;
}

Jet::Jet(std::shared_ptr<const JetSpace> space, int order)
    : space_(std::move(space)), order_(order), c_(space_->size(order), 0.0) {}

Jet Jet::variable(const std::shared_ptr<const JetSpace>& space, int var, double value) {
  Jet j(space, space->order());
  j.c_[0] = value;
  if (space->order() >= 1) j.c_[1 + static_cast<std::size_t>(var)] = 1.0;
  return j;
}

Jet Jet::constant(const std::shared_ptr<const JetSpace>& space, double value) {
  Jet j(space, space->order());
  j.c_[0] = value;
  return j;
}

double Jet::partial(std::span<const int> vars) const {
  if (vars.empty()) return value();
  if (!space_) return 0.0;
  if (static_cast<int>(vars.size()) > order_)
    throw InsufficientOrder("partial of degree " + std::to_string(vars.size()) + " from jet of order " +
                            std::to_string(order_));
  const std::size_t m = space_->index(vars);
  return c_[m] * space_->factorial(m);
}

Jet Jet::derivative(int var) const {
  if (!space_) return Jet(0.0);
  if (order_ < 1) throw InsufficientOrder("derivative of an order-0 jet");
  Jet r(space_, order_ - 1);
  const std::size_t sz = r.c_.size();
  for (std::size_t m = 0; m < sz; ++m) r.c_[m] = space_->shift_factor(m, var) * c_[space_->shift(m, var)];
  return r;
}

Jet Jet::truncated(int order) const {
  if (!space_ || order >= order_) return *this;
  Jet r(*this);
  r.order_ = order;
  r.c_.resize(space_->size(order));
  return r;
}

void Jet::check_compatible(const Jet& o) const {
  if (space_ && o.space_ && space_ != o.space_) throw std::invalid_argument("jets from different spaces");
}

Jet Jet::operator-() const {
  Jet r(*this);
  for (double& v : r.c_) v = -v;
  return r;
}

Jet& Jet::operator+=(const Jet& o) {
  check_compatible(o);
  if (!o.space_) {
    c_[0] += o.c_[0];
    return *this;
  }
  if (!space_) {
    const double v = c_[0];
    *this = o;
    c_[0] += v;
    return *this;
  }
  if (o.order_ < order_) *this = truncated(o.order_);
  for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
  return *this;
}

Jet& Jet::operator-=(const Jet& o) { return *this += -o; }

Jet& Jet::operator*=(double v) {
  for (double& x : c_) x *= v;
  return *this;
}

Jet& Jet::operator/=(double v) {
  if (v == 0.0) throw DomainError("division of a jet by zero");
  for (double& x : c_) x /= v;
  return *this;
}

Jet operator*(const Jet& a, const Jet& b) {
  a.check_compatible(b);
  if (!b.space_) return a * b.c_[0];
  if (!a.space_) return b * a.c_[0];
  const int k = std::min(a.order_, b.order_);
  Jet r(a.space_, k);
  double* out = r.c_.data();
  const double* pa = a.c_.data();
  const double* pb = b.c_.data();
  a.space_->multiply_add(pa, pb, out, k);
  return r;
}

Jet& Jet::operator*=(const Jet& o) { return *this = *this * o; }
Jet& Jet::operator/=(const Jet& o) { return *this = *this * recip(o); }
Jet operator/(const Jet& a, const Jet& b) { return a * recip(b); }
Jet operator/(double a, const Jet& b) { return recip(b) * a; }

Jet compose(const Jet& u, std::span<const double> derivs) {
  if (!u.space_) return Jet(derivs[0]);
  const int k = u.order_;
  if (static_cast<int>(derivs.size()) < k + 1) throw InsufficientOrder("not enough derivatives for composition");
  Jet h(u);
  h.c_[0] = 0.0;
  // Horner in h = u - u0 with Taylor coefficients phi^{(j)}/j!.
  double fact = 1.0;
  for (int j = 2; j <= k; ++j) fact *= j;
  Jet r(u.space_, k), next(u.space_, k);
  r.c_[0] = derivs[static_cast<std::size_t>(k)] / fact;
  for (int j = k - 1; j >= 0; --j) {
    fact /= (j + 1);
    std::fill(next.c_.begin(), next.c_.end(), 0.0);
    u.space_->multiply_add(r.c_.data(), h.c_.data(), next.c_.data(), k);
    std::swap(r.c_, next.c_);
    r.c_[0] += derivs[static_cast<std::size_t>(j)] / fact;
  }
  return r;
}

namespace {

int order_of(const Jet& u) { return u.is_constant() ? 0 : u.order(); }

}  // namespace

Jet recip(const Jet& u) {
  const double x = u.value();
  if (x == 0.0) throw DomainError("reciprocal of zero");
  const int k = order_of(u);
  std::array<double, kMaxOrder + 1> d{};
  d[0] = 1.0 / x;
  for (int j = 1; j <= k; ++j) d[j] = -d[j - 1] * j / x;
  return compose(u, d);
}

Jet exp(const Jet& u) {
  std::array<double, kMaxOrder + 1> d;
  d.fill(std::exp(u.value()));
  return compose(u, d);
}

Jet log(const Jet& u) {
  const double x = u.value();
  if (!(x > 0.0)) throw DomainError("log of non-positive value");
  const int k = order_of(u);
  std::array<double, kMaxOrder + 1> d{};
  d[0] = std::log(x);
  double p = 1.0 / x;
  for (int j = 1; j <= k; ++j) {
    d[j] = p;
    p *= -static_cast<double>(j) / x;
  }
  return compose(u, d);
}

Jet sin(const Jet& u) {
  const double s = std::sin(u.value()), c = std::cos(u.value());
  const std::array<double, 4> cyc{s, c, -s, -c};
  std::array<double, kMaxOrder + 1> d{};
  for (int j = 0; j <= kMaxOrder; ++j) d[j] = cyc[j % 4];
  return compose(u, d);
}

Jet cos(const Jet& u) {
  const double s = std::sin(u.value()), c = std::cos(u.value());
  const std::array<double, 4> cyc{c, -s, -c, s};
  std::array<double, kMaxOrder + 1> d{};
  for (int j = 0; j <= kMaxOrder; ++j) d[j] = cyc[j % 4];
  return compose(u, d);
}

Jet pow(const Jet& u, double a) {
  const double x = u.value();
  const int k = order_of(u);
  if (x < 0.0 || (x == 0.0 && k > 0)) throw DomainError("pow of non-positive value");
  std::array<double, kMaxOrder + 1> d{};
  double coef = 1.0;
  for (int j = 0; j <= k; ++j) {
    d[j] = coef * std::pow(x, a - j);
    coef *= a - j;
  }
  if (a == 0.5) d[0] = std::sqrt(x);
  return compose(u, d);
}

Jet sqrt(const Jet& u) { return pow(u, 0.5); }

Jet tanh(const Jet& u) {
  // d^j tanh = P_j(tanh) with P_0(t) = t and P_{j+1} = P_j' (1 - t^2).
  const double t = std::tanh(u.value());
  const int k = order_of(u);
  std::array<double, kMaxOrder + 2> p{}, q{};
  p[1] = 1.0;
  std::array<double, kMaxOrder + 1> d{};
  d[0] = t;
  for (int j = 1; j <= k; ++j) {
    q.fill(0.0);
    for (int i = 1; i <= j; ++i) {
      q[i - 1] += i * p[i];
      q[i + 1] -= i * p[i];
    }
    p = q;
    double v = 0.0;
    for (int i = j + 1; i >= 0; --i) v = v * t + p[i];
    d[j] = v;
  }
  return compose(u, d);
}

}  // namespace jm
