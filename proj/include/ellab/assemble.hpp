#pragma once

#include <memory>

#include "ellab/fields.hpp"
#include "ellab/mesh.hpp"
#include "ellab/types.hpp"

namespace ellab {

// P1 stiffness and mass operators with Dirichlet elimination. The full
// (pre-elimination) matrices are kept for integral identities against fields
// that do not vanish on the boundary.
struct DiscreteOperators {
  MeshPtr mesh;
  SpMat K_full, M_full;  // all nodes
  SpMat K, M;            // interior x interior
  Vec lumped;            // interior row sums of M

  int n_interior() const { return static_cast<int>(K.rows()); }

  Vec restrict_interior(const Vec& full) const;
  Vec extend_zero(const Vec& interior) const;

  // integral of u*v over the mesh via the full mass matrix
  double inner(const Vec& u_full, const Vec& v_full) const {
    return u_full.dot(M_full * v_full);
  }
};

DiscreteOperators assemble(MeshPtr mesh);

// Solves K u = (M rhs)|interior with u = 0 on the boundary. Sparse Cholesky
// up to 200k interior unknowns, preconditioned CG above. Throws if the
// relative interior residual exceeds 1e-10.
DiscreteField solve_dirichlet(const DiscreteOperators& ops, const DiscreteField& rhs);

// Factorization of K - tau*M on interior nodes (symmetric, possibly
// indefinite), with iterative refinement on solve.
class ShiftedSolver {
 public:
  ShiftedSolver(const DiscreteOperators& ops, double tau);
  ~ShiftedSolver();
  ShiftedSolver(ShiftedSolver&&) noexcept;
  // Solves (K - tau M) x = b for interior vectors; refined to a relative
  // residual of 1e-10 (throws when refinement stalls above it).
  Vec solve(const Vec& b) const;
  double tau() const { return tau_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  double tau_ = 0;
};

}  // namespace ellab
