#pragma once

#include "ellab/assemble.hpp"
#include "ellab/fields.hpp"

namespace ellab {

// First two Dirichlet eigenpairs of -Laplace, M-normalized, phi1 > 0 at every
// interior node. phi2 is kept because resolvent load families and gap checks
// build on it.
struct SpectralData {
  double lambda1 = 0;
  double lambda2 = 0;
  DiscreteField phi1;
  DiscreteField phi2;
  double phi1_sup = 0;  // max nodal value
  double phi1_l1 = 0;   // integral of phi1 (positive field)
};

// Inverse power iteration with sparse factorization of K; lambda2 by the same
// iteration deflated against phi1 in the M inner product. Relative eigenvalue
// change tolerance 1e-12, cap 500 iterations.
SpectralData principal_eigenpair(const DiscreteOperators& ops);
SpectralData principal_eigenpair(const DiscreteOperators& ops, const Vec& start1,
                                 const Vec& start2);

// Rayleigh quotient of w after M-orthogonal projection against phi1; callers
// assert R(w) >= lambda2 (1 - tol). Throws on zero projected field.
double rayleigh_gap_check(const DiscreteOperators& ops, const SpectralData& sp,
                          const DiscreteField& w);

// min over edges (interior i, boundary j) of phi1(i)/|x_i - x_j|, a discrete
// stand-in for the boundary slope of phi1.
double hopf_margin(const DiscreteOperators& ops, const SpectralData& sp);

}  // namespace ellab
