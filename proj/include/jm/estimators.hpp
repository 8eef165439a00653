#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "jm/malliavin.hpp"
#include "jm/parallel.hpp"
#include "jm/presets.hpp"
#include "jm/sde.hpp"

namespace jm {

struct McEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
  std::int64_t n_paths = 0;
  std::uint64_t seed = 0;
  std::int64_t rejected_paths = 0;
};

McEstimate to_estimate(const Stats& s, int i, std::uint64_t seed);

struct RunOptions {
  std::int64_t n = 10000;
  std::uint64_t seed = 1;
  int workers = 1;
};

// U_M(t) unless the configuration or the model fixes the variance.
double effective_variance(const TruncatedLaw& law, const SimConfig& sim);

// Shared per-run state: the truncated law and the regularization variance.
class Experiment {
 public:
  Experiment(const ModelConfig& cfg, const RunOptions& run);

  const ModelConfig& config() const { return cfg_; }
  const SimConfig& sim() const { return sim_; }
  const TruncatedLaw& law() const { return law_; }
  const RunOptions& run() const { return run_; }
  double variance() const { return variance_; }

  PathRecord path(std::uint64_t i) const { return simulate_path(law_, sim_, i); }
  PathDraws draws(std::uint64_t i) const { return simulate_draws(law_, sim_, i); }

  // Runs the kernel on paths 0..n-1 and enforces the rejection limit.
  Stats reduce(const PathKernel& kernel, int k, bool paired = false) const;

 private:
  ModelConfig cfg_;
  SimConfig sim_;
  RunOptions run_;
  TruncatedLaw law_;
  double variance_ = 0.0;
};

// Jet-level per-path functional of the record and F_M.
using PathFunctional = std::function<double(const PathRecord&, const std::vector<Jet>& f)>;
// Values-only functional of the draws and F_M.
using DrawFunctional = std::function<double(const PathDraws&, const std::vector<double>& f)>;

McEstimate mc_expectation(const PathFunctional& fn, const Experiment& ex);
McEstimate mc_expectation(const DrawFunctional& fn, const Experiment& ex);

struct IbpReport {
  std::vector<int> beta;
  McEstimate direct;
  McEstimate weighted;
  double z = 0.0;
  double mean_abs_weight = 0.0;  // E |H|
  bool pass() const { return z <= 3.0; }
};

double z_score(const McEstimate& a, const McEstimate& b);

// phi(x) = p(x_1 + ... + x_d) for p in {identity, cos, sin}.
struct TestFunction {
  enum class Kind { identity, cos, sin } kind = Kind::cos;
  double value(const double* x, int d) const;
  // d^m/ds^m p at s = x_1 + ... + x_d; equals the mixed partial for any beta with |beta| = m.
  double derivative(int m, const double* x, int d) const;
  static TestFunction parse(const std::string& name);
  std::string name() const;
};

using FunctionalBuilder = std::function<Jet(const PathRecord&, const std::vector<Jet>& f)>;
using ProcessBuilder = std::function<SimpleProcess(const PathRecord&, const Jet& F)>;

// E <DF, U> against E F delta(U); defaults: F = first component of F_M, U = DF.
IbpReport duality_check(const Experiment& ex, FunctionalBuilder f = nullptr, ProcessBuilder u = nullptr);

// E d_beta phi(F_M) G against E phi(F_M) H_beta(F_M, G), G = 1 unless given.
IbpReport ibp_check(const Experiment& ex, const TestFunction& phi, const std::vector<int>& beta,
                    FunctionalBuilder g = nullptr);

struct FourierPoint {
  double xi = 0.0;
  double modulus = 0.0;
  double standard_error = 0.0;
  double re = 0.0, im = 0.0;
};

struct FourierScan {
  std::vector<FourierPoint> points;
  double noise_floor = 0.0;  // 1 / sqrt(n)
  std::int64_t n = 0;
};

// Empirical characteristic function of <dir, F_M> on the xi grid (values only).
FourierScan fourier_estimate(const Experiment& ex, const std::vector<double>& xi, std::vector<double> dir = {});

// Least-squares slope of ln |p| against ln xi over points above `factor` times the noise floor.
struct SlopeFit {
  double slope = 0.0;
  int points = 0;
};
SlopeFit fourier_slope(const FourierScan& scan, double xi_min, double xi_max, double factor = 3.0);

struct DensityPoint {
  double y = 0.0;
  McEstimate ibp;
  McEstimate kde;
};

struct DensityScan {
  std::vector<DensityPoint> points;
  double width = 0.0;      // smoothed Heaviside width
  double bandwidth = 0.0;  // KDE bandwidth
  double integral = 0.0;   // trapezoid of the IBP estimate over the grid
};

// p(y) = E 1_{F_M >= y} H_(1)(F_M, 1) with a smoothed Heaviside, plus a
// Gaussian KDE on the same sample (d = 1).
DensityScan density_via_ibp(const Experiment& ex, const std::vector<double>& y, double bandwidth = 0.0);

// Standard deviation of F_M from the first min(n, 10^4) paths.
double pilot_std(const Experiment& ex);

}  // namespace jm
