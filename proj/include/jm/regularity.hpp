#pragma once

#include <optional>
#include <string>

#include "json.hpp"
#include "jm/model.hpp"
#include "jm/poisson.hpp"

namespace jm {

struct RegularityInputs {
  double t = 1.0;
  int d = 1;
  double theta = kInf;
  double p1 = kInf;
  double p2 = kInf;
  double rho = 1.0;
  char mode = 'b';
};

// floor((t theta / (4 d) + 1) / 3); throws ValidityViolation for infinite theta.
int q_star(double t, double theta, int d);

struct Smoothness {
  bool result = false;    // false: the admissibility condition fails
  bool infinite = false;  // C^infinity
  int k = 0;
  double bound = 0.0;     // k < bound (mode b) or the largest t-admissible order (mode a)
  double r_opt = 0.0;     // maximizer of the case-2 exponent
};

// Largest integer k of the C^k statement; "k < x" becomes ceil(x) - 1.
Smoothness predicted_smoothness(const RegularityInputs& in);

struct FourierEnvelope {
  double term1 = 0.0;  // t int_{B_{M-1}^c} cunder^2 gammaunder dmu |xi|^2 / 2
  double term2 = 0.0;  // |xi| t e^{Ct} int_{B_M^c} cbar gammabar dmu
  double term3 = 0.0;  // |xi|^{-q}, times (1 + mu(B_{M+1})^q) in mode b; C_q left out
  double lipschitz = 0.0;
};

FourierEnvelope fourier_envelope(double xi, double M, const JumpModel& m, int q, double t, char mode, double theta);

struct Truncation {
  double r = 0.0;
  double M = 0.0;
  double e1 = 0.0, e2 = 0.0, e3 = 0.0;  // r p1 - 1, r p2 - 2, q (1 - r rho)
  double exponent = 0.0;                // min of the three
};

// Scans r on a grid of (0, 1/rho) for the best decay exponent with M = |xi|^r.
// q defaults to q*(t, theta), or is unbounded when theta is infinite.
Truncation optimize_truncation(double xi, const RegularityInputs& in, std::optional<int> q = std::nullopt);

struct TailExponents {
  double p1 = kInf;
  double p2 = kInf;
};

// Log-log slopes of int_{B_M^c} cbar gammabar dmu and int_{B_M^c} cunder^2
// gammaunder dmu over M in [4, 64]; infinite when the decay is faster than
// every power.
TailExponents estimate_tail_exponents(const JumpModel& m);

// Rate rho of mu(B_M) <= C M^rho from M in [4, 64].
double estimate_rho(const JumpModel& m);

// f = cunder^2, nu = gammaunder mu for the broadness exponent.
LevyFunctional broadness_functional(const JumpModel& m);

// Declared values first, numeric estimates for whatever is missing.
RegularityInputs regularity_inputs(const JumpModel& m, double t);

nlohmann::json regularity_report(const RegularityInputs& in, double xi = 10.0);

}  // namespace jm
