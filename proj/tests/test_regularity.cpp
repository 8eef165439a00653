#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "jm/errors.hpp"
#include "jm/presets.hpp"
#include "jm/quadrature.hpp"
#include "jm/regularity.hpp"

using namespace jm;

namespace {

// Radial amplitude with cbar = e^{-b r} and cunder = e^{-a r} exactly, constant rate.
class ExpBounds final : public ModelBase<ExpBounds> {
 public:
  ExpBounds(double a, double b, double glo, double ghi) : a_(a), b_(b), glo_(glo), ghi_(ghi) {}
  std::string name() const override { return "exp-bounds"; }
  int dim() const override { return 1; }
  template <class T> void jump_t(const T* z, const T*, T* out) const { out[0] = sc::exp(-a_ * z[0]); }
  template <class T> T rate_t(const T*, const T* x) const { return glo_ + (ghi_ - glo_) * 0.5 * (1.0 + sc::sin(x[0])); }
  template <class T> T log_h_t(const T&) const { return T(0.0); }
  double rate_sup() const override { return ghi_; }
  double rate_upper(double) const override { return ghi_; }
  double rate_lower(double) const override { return glo_; }
  double jump_upper(double r) const override { return std::exp(-b_ * r); }
  double jump_lower(double r) const override { return std::exp(-a_ * r); }
  double rate_x_lipschitz() const override { return 0.5 * (ghi_ - glo_); }
  std::optional<double> mu_ball(double radius) const override { return 2.0 * radius; }

 private:
  double a_, b_, glo_, ghi_;
};

RegularityInputs preset_inputs(const std::string& preset, int d, const nlohmann::json& params, double t) {
  return regularity_inputs(*make_preset(preset, d, params), t);
}

}  // namespace

TEST(QStar, HandArithmetic) {
  // t theta / (4 d) = 8 and 2.
  EXPECT_EQ(q_star(32.0, 1.0, 1), 3);
  EXPECT_EQ(q_star(1.0, 16.0, 2), 1);
  EXPECT_EQ(q_star(1e-6, 1.0, 1), 0);
  EXPECT_THROW(q_star(1.0, kInf, 1), ValidityViolation);
}

TEST(Smoothness, LevyExampleClosedForm) {
  // k < 1/rho - 3 with rho = 0.2.
  const auto in = preset_inputs("example3-levy", 1, {{"rho", 0.2}}, 1.0);
  const auto s = predicted_smoothness(in);
  ASSERT_TRUE(s.result);
  EXPECT_EQ(s.k, 1);
  for (double rho : {0.1, 0.15, 0.24, 0.3}) {
    const auto sr = predicted_smoothness(preset_inputs("example3-levy", 1, {{"rho", rho}}, 1.0));
    const double x = 1.0 / rho - 3.0;
    EXPECT_EQ(sr.result, x >= 1.0) << rho;
    if (x >= 1.0) EXPECT_EQ(sr.k, static_cast<int>(std::ceil(x)) - 1) << rho;
  }
}

TEST(Smoothness, PolynomialExampleClosedForm) {
  for (int d : {1, 2, 3}) {
    for (double p = d + 1.0; p <= 40.0; p += 1.0) {
      const auto s = predicted_smoothness(preset_inputs("example1-poly", d, {{"p", p}}, 1.0));
      if (p >= d * (d + 3.0)) {
        ASSERT_TRUE(s.result) << d << " " << p;
        // Largest integer below p/d - d - 2.
        int k = 0;
        while (k + 1 < p / d - d - 2.0) ++k;
        EXPECT_EQ(s.k, k) << d << " " << p;
      } else {
        EXPECT_FALSE(s.result) << d << " " << p;
      }
    }
  }
}

TEST(Smoothness, RateDegenerateExampleClosedForm) {
  for (int d : {1, 2}) {
    for (double a : {0.005, 0.01, 0.02}) {
      for (double t : {0.5, 1.0, 3.0}) {
        const auto s = predicted_smoothness(preset_inputs("example2", d, {{"a", a}}, t));
        const double rd = unit_ball_volume(d);
        int k = -1;
        while (t > 8.0 * a * d * (3.0 * (k + 1) + 3.0 * d - 1.0) / rd) ++k;
        EXPECT_EQ(s.result, k >= 0);
        if (k >= 0) EXPECT_EQ(s.k, k) << d << " " << a << " " << t;
      }
    }
  }
}

TEST(Smoothness, InfiniteThetaModeAIsSmooth) {
  RegularityInputs in;
  in.mode = 'a';
  in.theta = kInf;
  const auto s = predicted_smoothness(in);
  EXPECT_TRUE(s.result);
  EXPECT_TRUE(s.infinite);
}

TEST(Smoothness, MonotoneInHorizonAndTailExponents) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.1, 40.0);
  auto rank = [](const Smoothness& s) { return !s.result ? -1.0 : s.infinite ? 1e9 : s.k; };
  for (int trial = 0; trial < 200; ++trial) {
    RegularityInputs a;
    a.mode = 'a';
    a.d = 1 + trial % 3;
    a.theta = u(rng);
    a.t = u(rng);
    RegularityInputs a2 = a;
    a2.t *= 1.5;
    EXPECT_LE(rank(predicted_smoothness(a)), rank(predicted_smoothness(a2)));

    RegularityInputs b;
    b.mode = 'b';
    b.d = 1 + trial % 3;
    b.rho = 0.2 + u(rng) / 20.0;
    b.p1 = u(rng);
    b.p2 = u(rng);
    b.theta = trial % 2 ? kInf : u(rng);
    b.t = u(rng);
    RegularityInputs b2 = b;
    b2.p1 *= 1.3;
    RegularityInputs b3 = b;
    b3.p2 *= 1.3;
    EXPECT_LE(rank(predicted_smoothness(b)), rank(predicted_smoothness(b2)));
    EXPECT_LE(rank(predicted_smoothness(b)), rank(predicted_smoothness(b3)));
  }
}

TEST(Smoothness, QStarSatisfiesEnvelopeValidity) {
  const ExpBounds m(1.0, 0.5, 0.5, 1.0);
  for (double t : {1.0, 5.0, 40.0, 0.37})
    for (double theta : {0.5, 2.0, 10.0, 3.3}) {
      const int q = q_star(t, theta, 1);
      if (q < 1) continue;
      // The floor gives 4d(3q* - 1)/t <= theta, with equality only when
      // (t theta / (4d) + 1) / 3 is an integer.
      const double lhs = 4.0 * (3.0 * q - 1.0) / t;
      EXPECT_LE(lhs, theta * (1.0 + 1e-12));
      const double x = (t * theta / 4.0 + 1.0) / 3.0;
      if (std::abs(x - std::round(x)) > 1e-9) EXPECT_NO_THROW(fourier_envelope(5.0, 4.0, m, q, t, 'b', theta));
      else EXPECT_THROW(fourier_envelope(5.0, 4.0, m, q, t, 'b', theta), ValidityViolation);
    }
}

TEST(Envelope, ExponentialTermsMatchClosedForms) {
  const double a = 1.0, b = 0.5, glo = 0.5, ghi = 1.0, t = 0.8, M = 5.0, xi = 7.0;
  const ExpBounds m(a, b, glo, ghi);
  const auto e = fourier_envelope(xi, M, m, 1, t, 'a', 100.0);
  const double C = 2.0 * ghi / b + 0.5 * (ghi - glo) * 2.0 / b;
  EXPECT_NEAR(e.lipschitz, C, 1e-10 * C);
  const double t1 = t * glo * std::exp(-2.0 * a * (M - 1.0)) / a * 0.5 * xi * xi;
  const double t2 = xi * t * std::exp(C * t) * 2.0 * ghi * std::exp(-b * M) / b;
  EXPECT_NEAR(e.term1, t1, 1e-8 * t1);
  EXPECT_NEAR(e.term2, t2, 1e-8 * t2);
  EXPECT_NEAR(e.term3, 1.0 / xi, 1e-15);
  const auto eb = fourier_envelope(xi, M, m, 1, t, 'b', 100.0);
  EXPECT_NEAR(eb.term3, (1.0 + 2.0 * (M + 1.0)) / xi, 1e-12);
}

TEST(Envelope, ThirdTermDecaysAsPower) {
  const ExpBounds m(1.0, 0.5, 0.5, 1.0);
  const auto e1 = fourier_envelope(10.0, 4.0, m, 3, 1.0, 'a', 100.0);
  const auto e2 = fourier_envelope(20.0, 4.0, m, 3, 1.0, 'a', 100.0);
  EXPECT_NEAR(e1.term3 / e2.term3, 8.0, 1e-12);
}

TEST(Envelope, ValidityViolation) {
  const ExpBounds m(1.0, 0.5, 0.5, 1.0);
  // 4 d (3q - 1) / t = 8 for q = 1, t = 1.
  EXPECT_THROW(fourier_envelope(5.0, 4.0, m, 1, 1.0, 'a', 8.0), ValidityViolation);
  EXPECT_NO_THROW(fourier_envelope(5.0, 4.0, m, 1, 1.0, 'a', 8.5));
}

TEST(Truncation, EqualTailExponentsBalanceAtCrossing) {
  RegularityInputs in;
  in.p1 = in.p2 = 6.0;
  in.rho = 1.0;
  const int q = 4;
  const auto tr = optimize_truncation(100.0, in, q);
  // With p1 = p2 the binding pair is r p2 - 2 = q (1 - r rho).
  const double r_star = (q + 2.0) / (in.p2 + q * in.rho);
  EXPECT_NEAR(tr.r, r_star, 2.0 / 10000.0);
  EXPECT_NEAR(tr.exponent, in.p2 * r_star - 2.0, 1e-2);
  EXPECT_NEAR(tr.M, std::pow(100.0, tr.r), 1e-9 * tr.M);
}

TEST(Truncation, SmallRhoApproachesQ) {
  RegularityInputs in;
  in.p1 = 10.0;
  in.p2 = 20.0;
  in.rho = 1e-6;
  EXPECT_NEAR(optimize_truncation(50.0, in, 3).exponent, 3.0, 1e-3);
}

TEST(Truncation, LevyExampleConsistentWithSmoothness) {
  const auto in = preset_inputs("example3-levy", 1, {{"rho", 0.2}}, 1.0);
  const auto tr = optimize_truncation(10.0, in);
  const auto s = predicted_smoothness(in);
  EXPECT_NEAR(tr.exponent - in.d, s.bound, 1e-3);
  EXPECT_EQ(static_cast<int>(std::ceil(tr.exponent - in.d - 1e-3)) - 1, s.k);
}

TEST(TailExponents, NumericEstimates) {
  const auto poly = make_preset("example1-poly", 1, {{"p", 8.0}});
  EXPECT_NEAR(estimate_tail_exponents(*poly).p1, 7.0, 0.2);
  const auto ex = make_preset("example1-exp", 1, nlohmann::json::object());
  EXPECT_TRUE(std::isinf(estimate_tail_exponents(*ex).p1));
  EXPECT_NEAR(estimate_rho(*make_preset("example1-exp", 2, nlohmann::json::object())), 2.0, 1e-9);
  EXPECT_NEAR(estimate_rho(*make_preset("example3-levy", 1, {{"rho", 0.4}})), 0.4, 0.05);
}

TEST(Report, JsonFields) {
  const auto j = regularity_report(preset_inputs("example1-poly", 1, nlohmann::json::object(), 1.0));
  EXPECT_EQ(j["schema"], 1);
  EXPECT_EQ(j["k"], 4);
  EXPECT_EQ(j["theta"], "inf");
  for (const char* key : {"theta", "q_star", "p1", "p2", "rho", "mode", "k", "r_opt", "validity"})
    EXPECT_TRUE(j.contains(key)) << key;
  const auto j2 = regularity_report(preset_inputs("example2", 1, nlohmann::json::object(), 1.0));
  EXPECT_EQ(j2["k"], 7);
  EXPECT_EQ(j2["q_star"], 8);
  EXPECT_TRUE(j2["validity"]["holds"].get<bool>());
}

TEST(Report, EstimatedInputsForUndeclaredModel) {
  const auto in = preset_inputs("one-jump", 1, nlohmann::json::object(), 1.0);
  // Finite intensity: nothing to gain from broadness.
  EXPECT_LT(in.theta, 1e-6);
  EXPECT_THROW(preset_inputs("gaussian-only", 1, nlohmann::json::object(), 1.0), DomainError);
}
