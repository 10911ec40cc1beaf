#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>

#include "ellab/assemble.hpp"
#include "ellab/resolvent.hpp"
#include "ellab/spectral.hpp"

namespace ellab {

enum class GFamily { PowerPlus, LogPower, LogPlus, BoundedPositive };

// Catalog of admissible nonlinearities: positive for s > 0, non-decreasing in
// s, superlinear at 0 and sublinear at infinity. An optional bounded gradient
// factor (1 + kappa |p|^2 / (1 + |p|^2)) keeps gradient dependence inside the
// same envelope class.
struct Nonlinearity {
  GFamily family = GFamily::PowerPlus;
  double a0 = 1, b0 = 0, r = 0.5, g0 = 1;
  double grad_kappa = 0;

  bool gradient_dependent() const { return grad_kappa > 0; }
  bool p_independent() const { return grad_kappa == 0; }

  // g(x, s, p): the catalog members carry no explicit x dependence; grad2 is
  // |p|^2. s < 0 is evaluated as s = 0.
  double eval(double s, double grad2 = 0) const;

  // Lattice checks for positivity, monotonicity and the s->0 / s->infinity
  // envelope behaviour; throws on violation.
  void validate_samples() const;

  static Nonlinearity parse(const std::string& text);
  std::string describe() const;
};

struct ProblemParams {
  double eps = 0;
  double delta = 0;
  double A = 1;
};

// Envelope constants of the negative-sign existence construction:
// g <= C + |eps| s / (2|delta|), the supersolution psi, and the subsolution
// scale sigma with sigma*phi1 <= psi and sigma*||phi1||_inf <= s0.
struct NegativeConstants {
  double C_env = 0;  // raw lattice envelope max
  double C = 0;      // inflated constant actually used
  double s0 = 0;     // g >= |eps| s/|delta| on [0, s0]
  double sigma = 0;  // dyadic
  DiscreteField psi;
};

NegativeConstants build_constants_negative(const Nonlinearity& g, const ProblemParams& prm,
                                           const DiscreteOperators& ops, const SpectralData& sp);

// Positive-sign constants: g <= C' + s/(4A |phi1|_L1 |phi1|_inf), g >= 2As on
// [0, s0'], beta and varsigma dyadic, the L^p budget M, the band [a, b] fed to
// the quantified anti-maximum principle, and the empirical eps0 ceiling.
struct PositiveConstants {
  double C_env = 0;
  double C = 0;
  double s0 = 0;
  double beta = 0;
  double varsigma = 0;
  double norm_cap = 0;  // L^p budget
  double p = 4;
  double a = 0, b = 0;
  double eps0 = 0;
};

PositiveConstants build_constants_positive(const Nonlinearity& g, double A,
                                           const DiscreteOperators& ops, const SpectralData& sp);

struct SolveOptions {
  double omega = 0.5;
  double update_tol = 1e-10;
  int max_iterations = 10000;
  enum class Start { Default, BoxUpper, BoxLower };
  Start start = Start::Default;
  bool enforce_band = true;   // A^-1 eps <= delta <= A eps for eps > 0
  bool strict = true;         // throw SolveFailure instead of flagging
  std::optional<double> eps0_override;
  // Called with (iteration, clamped iterate) after every update.
  std::function<void(int, const Vec&)> observer;
};

struct SolveFailure : std::runtime_error {
  enum class Kind { BoxEscape, IterationCap };
  SolveFailure(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
  Kind kind;
};

struct ReportConstants {
  double C = 0, s0 = 0, sigma = 0;
  double beta = 0, varsigma = 0, eps0 = 0;
};

struct SolveReport {
  DiscreteField u;
  int iterations = 0;
  double final_update = 0;
  DiscreteField box_lo, box_hi;
  double box_violation = 0;       // raw breach of the converged iterate
  double max_transient_violation = 0;
  double identity_residual = 0;   // |eps int u phi1 - delta int g phi1|
  double theta = 0;               // int u phi1 / |phi1|_L2^2
  bool converged = false;
  bool box_escaped = false;
  double omega_final = 0;
  ReportConstants constants;
};

SolveReport solve_negative(const DiscreteOperators& ops, const SpectralData& sp,
                           const Nonlinearity& g, const ProblemParams& prm,
                           const SolveOptions& opts = {});

SolveReport solve_positive(const DiscreteOperators& ops, const SpectralData& sp,
                           const Nonlinearity& g, const ProblemParams& prm,
                           const SolveOptions& opts = {},
                           const PositiveConstants* precomputed = nullptr);

double identity_residual(const DiscreteField& u, const Nonlinearity& g, const ProblemParams& prm,
                         const DiscreteOperators& ops, const SpectralData& sp);

// The unique B > 0 with  B |phi1|_L2^2 = c int g(B phi1) phi1, for
// p-independent g with g(s)/s decreasing. Bisection on [1e-8, 1e8].
double limit_coefficient(const Nonlinearity& g, double c, const DiscreteOperators& ops,
                         const SpectralData& sp);

}  // namespace ellab
