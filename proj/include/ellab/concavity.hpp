#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ellab/fields.hpp"

namespace ellab {

// Increasing transforms whose concavity is probed: log u, u^q, the
// exploratory -(-log(u/max u))^q, or u itself.
struct Transform {
  enum class Kind { Log, Power, NegLogPow, Identity };
  Kind kind = Transform::Kind::Log;
  double q = 1;

  static Transform log() { return {Kind::Log, 1}; }
  static Transform power(double q) { return {Kind::Power, q}; }
  static Transform neglogpow(double q) { return {Kind::NegLogPow, q}; }
  static Transform identity() { return {Kind::Identity, 1}; }
  static Transform parse(const std::string& text);
  std::string name() const;
};

// Transformed nodal values; nodes where the transform is undefined get NaN.
Vec apply_transform(const DiscreteField& u, const Transform& t);

// Hessians of the transformed field at admissible nodes (distance >= d0 from
// the boundary), recovered by an inverse-distance-weighted quadratic fit on
// the 2-ring. Nodes with rank-deficient neighborhoods or oversized fit
// residuals are dropped and counted.
struct HessianField {
  std::vector<int> nodes;
  std::vector<double> max_eig;
  std::vector<double> hxx, hxy, hyy;  // hxy = hyy = 0 in 1D
  std::vector<double> fit_residual;
  int dropped = 0;
  double hess_max_eig = 0;  // max over kept nodes
};

HessianField hessian_field(const DiscreteField& u, const Transform& t, double d0);

// Worst sampled value of mu v(x) + (1-mu) v(y) - v(mu x + (1-mu) y) over
// seeded random admissible pairs and the mu grid; <= 0 (+tol) certifies
// sampled concavity of the P1 interpolant.
double concavity_function_scan(const DiscreteField& u, const Transform& t, double d0,
                               int n_triples, const std::vector<double>& mu_grid,
                               std::uint64_t seed);

// Worst relative convexity deficit (hull area - level-set area)/hull area
// over a quantile grid of super-level sets.
double quasi_concavity_check(const DiscreteField& u, int levels);

struct ConcavityReport {
  Transform transform;
  double d0 = 0;
  double hess_max_eig = 0;
  double rho = 0;          // -hess_max_eig when negative, else 0
  double cf_worst = 0;
  int n_admissible = 0;
  int dropped = 0;
  int levels_checked = 0;
  double level_deficit = 0;
  double tol_H = 0;
  double tol_C = 0;
  bool concave = false;
};

ConcavityReport concavity_report(const DiscreteField& u, const Transform& t, double d0,
                                 int n_triples, std::uint64_t seed);

inline ConcavityReport log_concavity_report(const DiscreteField& u, double d0, int n_triples,
                                            std::uint64_t seed) {
  return concavity_report(u, Transform::log(), d0, n_triples, seed);
}

inline ConcavityReport power_concavity(const DiscreteField& u, double q, double d0,
                                       int n_triples, std::uint64_t seed) {
  return concavity_report(u, Transform::power(q), d0, n_triples, seed);
}

}  // namespace ellab
