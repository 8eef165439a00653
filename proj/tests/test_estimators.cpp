#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <numbers>

#include "jm/errors.hpp"
#include "jm/estimators.hpp"

using namespace jm;

namespace {

Experiment make(const std::string& preset, std::int64_t n, std::uint64_t seed, int workers = 1,
                void (*tweak)(ModelConfig&) = nullptr) {
  ModelConfig cfg = default_config(preset, 1);
  if (tweak) tweak(cfg);
  return Experiment(cfg, {n, seed, workers});
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof(double)) == 0; }

}  // namespace

TEST(Stats, MergeMatchesTwoPass) {
  std::vector<double> xs, ys;
  for (int i = 0; i < 1000; ++i) {
    xs.push_back(std::sin(0.37 * i) + 1e3);
    ys.push_back(std::cos(0.11 * i) * 2.0 + 0.1 * xs.back());
  }
  Stats all(2, true), a(2, true), b(2, true);
  for (int i = 0; i < 1000; ++i) {
    const double v[2] = {xs[i], ys[i]};
    all.add(v);
    (i < 377 ? a : b).add(v);
  }
  a.merge(b);
  double mx = 0, my = 0;
  for (int i = 0; i < 1000; ++i) mx += xs[i], my += ys[i];
  mx /= 1000;
  my /= 1000;
  double vx = 0, cxy = 0;
  for (int i = 0; i < 1000; ++i) vx += (xs[i] - mx) * (xs[i] - mx), cxy += (xs[i] - mx) * (ys[i] - my);
  for (const Stats* s : {&all, &a}) {
    EXPECT_NEAR(s->mean(0), mx, 1e-10);
    EXPECT_NEAR(s->variance(0), vx / 999, 1e-10);
    EXPECT_NEAR(s->covariance(0), cxy / 999, 1e-10);
  }
}

TEST(MapReduce, SerialAndParallelAreBitIdentical) {
  const PathKernel kernel = [](std::uint64_t i, double* out) {
    Philox4x32 rng(5, i);
    out[0] = rng.uniform();
    out[1] = out[0] * out[0] + rng.uniform();
    return i % 97 != 3;
  };
  for (std::int64_t block : {1, 7, 256}) {
    MapReduceOptions opt{2, true, 1, block};
    const Stats ref = map_reduce_serial(5000, kernel, opt);
    EXPECT_EQ(ref.rejected(), 52);
    for (int workers : {2, 3, 8}) {
      opt.workers = workers;
      const Stats par = map_reduce_parallel(5000, kernel, opt);
      EXPECT_EQ(par.count(), ref.count());
      for (int k = 0; k < 2; ++k) {
        EXPECT_TRUE(same_bits(par.mean(k), ref.mean(k)));
        EXPECT_TRUE(same_bits(par.variance(k), ref.variance(k)));
      }
      EXPECT_TRUE(same_bits(par.covariance(0), ref.covariance(0)));
    }
  }
}

TEST(MapReduce, ErrorsPropagateFromFirstFailingBlock) {
  const PathKernel kernel = [](std::uint64_t i, double* out) {
    if (i == 300 || i == 900) throw DomainError("path " + std::to_string(i));
    out[0] = 1.0;
    return true;
  };
  MapReduceOptions opt{1, false, 4, 100};
  try {
    map_reduce_parallel(1000, kernel, opt);
    FAIL();
  } catch (const DomainError& e) {
    EXPECT_STREQ(e.what(), "path 300");
  }
}

TEST(MapReduce, WorkerResolution) {
  EXPECT_EQ(resolve_workers(3), 3);
  setenv("JM_WORKERS", "5", 1);
  EXPECT_EQ(resolve_workers(0), 5);
  setenv("JM_WORKERS", "zero", 1);
  EXPECT_THROW(resolve_workers(0), ConfigError);
  unsetenv("JM_WORKERS");
  EXPECT_GE(resolve_workers(0), 1);
}

TEST(Expectation, ConstantFunctional) {
  const auto ex = make("one-jump", 500, 3);
  const auto e = mc_expectation(PathFunctional([](const PathRecord&, const std::vector<Jet>&) { return 1.0; }), ex);
  EXPECT_EQ(e.mean, 1.0);
  EXPECT_EQ(e.standard_error, 0.0);
  EXPECT_EQ(e.n_paths, 500);
  EXPECT_EQ(e.rejected_paths, 0);
}

TEST(Expectation, JumpCountAndGaussianMoment) {
  const auto ex = make("example1-exp", 20000, 8);
  const auto j = mc_expectation(DrawFunctional([](const PathDraws& d, const std::vector<double>&) {
                                  return static_cast<double>(d.jumps());
                                }),
                                ex);
  EXPECT_LE(std::abs(j.mean - ex.law().lambda() * ex.sim().t), 3.0 * j.standard_error);
  const auto dd = mc_expectation(
      DrawFunctional([](const PathDraws& d, const std::vector<double>&) { return d.delta[0] * d.delta[0]; }), ex);
  EXPECT_LE(std::abs(dd.mean - 1.0), 3.0 * dd.standard_error);
}

TEST(Expectation, TooManyRejections) {
  const auto ex = make("gaussian-only", 100, 1, 1, [](ModelConfig& c) { c.sim.variance = 0.0; });
  EXPECT_THROW(ibp_check(ex, TestFunction::parse("cos"), {1}), TooManyRejections);
}

TEST(Duality, GaussianCoordinate) {
  const auto ex = make("one-jump", 20000, 4);
  const auto r = duality_check(
      ex, [](const PathRecord& rec, const std::vector<Jet>&) { return rec.delta[0]; }, nullptr);
  EXPECT_EQ(r.direct.mean, 1.0);
  EXPECT_LE(r.z, 3.0);
}

TEST(Duality, DefaultFunctionalOnJumpModels) {
  for (const char* preset : {"one-jump", "example3-levy"}) {
    const auto r = duality_check(make(preset, 20000, 6));
    EXPECT_LE(r.z, 3.0) << preset << " " << r.direct.mean << " " << r.weighted.mean;
  }
}

TEST(Duality, GhostSupportedProcessVanishes) {
  const auto ex = make("one-jump", 3000, 2, 1, [](ModelConfig& c) { c.sim.differentiate_ghosts = true; });
  std::int64_t ghosts = 0;
  for (std::uint64_t i = 0; i < 3000; ++i) {
    const auto d = ex.draws(i);
    ghosts += d.jumps() - d.active_jumps();
  }
  ASSERT_GT(ghosts, 100);
  const auto r = duality_check(ex, nullptr, [](const PathRecord& rec, const Jet& F) {
    SimpleProcess u(static_cast<std::size_t>(rec.nvars()), Jet(0.0));
    for (std::size_t k = 0; k < rec.jump_var.size(); ++k)
      if (rec.draws.ghost[k]) u[static_cast<std::size_t>(rec.jump_var[k])] = 1.0 + F;
    return u;
  });
  EXPECT_EQ(r.direct.mean, 0.0);
  EXPECT_EQ(r.weighted.mean, 0.0);
  EXPECT_EQ(r.z, 0.0);
}

TEST(Ibp, GaussianIdentityAndSecondOrder) {
  const auto ex = make("gaussian-only", 20000, 12);
  const auto r1 = ibp_check(ex, TestFunction::parse("identity"), {1});
  EXPECT_EQ(r1.direct.mean, 1.0);
  EXPECT_LE(r1.z, 3.0);
  const auto r2 = ibp_check(ex, TestFunction::parse("cos"), {1, 1});
  EXPECT_LE(r2.z, 3.0);
}

TEST(Ibp, OneJumpFirstOrder) {
  const auto r = ibp_check(make("one-jump", 20000, 13), TestFunction::parse("cos"), {1});
  EXPECT_LE(r.z, 3.0) << r.direct.mean << " " << r.weighted.mean;
  EXPECT_GT(r.mean_abs_weight, 0.0);
}

TEST(Ibp, DeterministicAcrossWorkers) {
  const auto a = ibp_check(make("one-jump", 3000, 21, 1), TestFunction::parse("sin"), {1});
  const auto b = ibp_check(make("one-jump", 3000, 21, 3), TestFunction::parse("sin"), {1});
  EXPECT_TRUE(same_bits(a.direct.mean, b.direct.mean));
  EXPECT_TRUE(same_bits(a.weighted.mean, b.weighted.mean));
  EXPECT_TRUE(same_bits(a.weighted.standard_error, b.weighted.standard_error));
}

TEST(Fourier, GaussianCharacteristicFunction) {
  const auto ex = make("gaussian-only", 50000, 17);
  const std::vector<double> xi{0.0, 0.5, 1.0, 1.5, 2.0, 2.5};
  const auto scan = fourier_estimate(ex, xi);
  EXPECT_EQ(scan.points[0].modulus, 1.0);
  EXPECT_EQ(scan.points[0].standard_error, 0.0);
  for (const auto& p : scan.points) {
    EXPECT_LE(p.modulus, 1.0);
    EXPECT_LE(std::abs(p.modulus - std::exp(-0.5 * p.xi * p.xi)), 3.0 * p.standard_error + 1e-15) << p.xi;
  }
}

TEST(Density, GaussianMatchesNormalPdf) {
  const auto ex = make("gaussian-only", 100000, 19);
  std::vector<double> y;
  for (double v = -4.0; v <= 4.0; v += 0.25) y.push_back(v);
  const auto scan = density_via_ibp(ex, y);
  for (const auto& p : scan.points) {
    const double pdf = std::exp(-0.5 * p.y * p.y) / std::sqrt(2.0 * std::numbers::pi);
    EXPECT_LE(std::abs(p.ibp.mean - pdf), 3.0 * p.ibp.standard_error + 1e-12) << p.y;
    EXPECT_GE(p.ibp.mean, -3.0 * p.ibp.standard_error);
  }
  EXPECT_NEAR(scan.integral, 1.0, 0.03);
}
