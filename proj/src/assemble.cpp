#include "ellab/assemble.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace ellab {

namespace {
constexpr int kDirectLimit = 200000;
}

Vec DiscreteOperators::restrict_interior(const Vec& full) const {
  Vec out(mesh->num_interior());
  for (int k = 0; k < mesh->num_interior(); ++k) out(k) = full(mesh->interior_nodes[k]);
  return out;
}

Vec DiscreteOperators::extend_zero(const Vec& interior) const {
  Vec out = Vec::Zero(mesh->num_nodes());
  for (int k = 0; k < mesh->num_interior(); ++k) out(mesh->interior_nodes[k]) = interior(k);
  return out;
}

DiscreteOperators assemble(MeshPtr mesh) {
  const Mesh& m = *mesh;
  std::vector<Triplet> tk, tm;
  if (m.dim == 1) {
    for (int c = 0; c < m.segs.rows(); ++c) {
      const int i = m.segs(c, 0), j = m.segs(c, 1);
      const double len = m.cell_area(c);
      const double k = 1.0 / len;
      tk.emplace_back(i, i, k);
      tk.emplace_back(j, j, k);
      tk.emplace_back(i, j, -k);
      tk.emplace_back(j, i, -k);
      tm.emplace_back(i, i, len / 3);
      tm.emplace_back(j, j, len / 3);
      tm.emplace_back(i, j, len / 6);
      tm.emplace_back(j, i, len / 6);
    }
  } else {
    for (int c = 0; c < m.tris.rows(); ++c) {
      const int idx[3] = {m.tris(c, 0), m.tris(c, 1), m.tris(c, 2)};
      const Vec2 a = m.nodes.row(idx[0]), b = m.nodes.row(idx[1]), d = m.nodes.row(idx[2]);
      const double area = m.cell_area(c);
      // Opposite-edge vectors: stiffness entries are dot products / 4|T|.
      const Vec2 e[3] = {d - b, a - d, b - a};
      for (int r = 0; r < 3; ++r)
        for (int s = 0; s < 3; ++s) {
          tk.emplace_back(idx[r], idx[s], e[r].dot(e[s]) / (4 * area));
          tm.emplace_back(idx[r], idx[s], area / 12 * (r == s ? 2 : 1));
        }
    }
  }
  DiscreteOperators ops;
  ops.mesh = std::move(mesh);
  const int n = m.num_nodes();
  ops.K_full.resize(n, n);
  ops.M_full.resize(n, n);
  ops.K_full.setFromTriplets(tk.begin(), tk.end());
  ops.M_full.setFromTriplets(tm.begin(), tm.end());

  const int ni = m.num_interior();
  std::vector<Triplet> ik, im;
  for (int col = 0; col < n; ++col) {
    const int jc = m.interior_index(col);
    if (jc < 0) continue;
    for (SpMat::InnerIterator it(ops.K_full, col); it; ++it) {
      const int jr = m.interior_index(static_cast<int>(it.row()));
      if (jr >= 0) ik.emplace_back(jr, jc, it.value());
    }
    for (SpMat::InnerIterator it(ops.M_full, col); it; ++it) {
      const int jr = m.interior_index(static_cast<int>(it.row()));
      if (jr >= 0) im.emplace_back(jr, jc, it.value());
    }
  }
  ops.K.resize(ni, ni);
  ops.M.resize(ni, ni);
  ops.K.setFromTriplets(ik.begin(), ik.end());
  ops.M.setFromTriplets(im.begin(), im.end());
  ops.lumped = ops.M * Vec::Ones(ni);
  return ops;
}

DiscreteField solve_dirichlet(const DiscreteOperators& ops, const DiscreteField& rhs) {
  if (!rhs.values.allFinite()) throw std::invalid_argument("solve_dirichlet: rhs not finite");
  const Vec b = ops.restrict_interior(ops.M_full * rhs.values);
  Vec x;
  if (ops.n_interior() <= kDirectLimit) {
    Eigen::SimplicialLDLT<SpMat> chol(ops.K);
    if (chol.info() != Eigen::Success) throw std::runtime_error("solve_dirichlet: factorization failed");
    x = chol.solve(b);
  } else {
    Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper> cg(ops.K);
    cg.setTolerance(1e-13);
    cg.setMaxIterations(20000);
    x = cg.solve(b);
  }
  double knorm = 0;
  for (int col = 0; col < ops.K.outerSize(); ++col) {
    double s = 0;
    for (SpMat::InnerIterator it(ops.K, col); it; ++it) s += std::abs(it.value());
    knorm = std::max(knorm, s);
  }
  const double resid = (ops.K * x - b).norm();
  const double scale = std::max(b.norm() + knorm * x.norm(), 1e-300);
  if (!(resid <= 1e-10 * scale))
    throw std::runtime_error("solve_dirichlet: residual " + std::to_string(resid / scale));
  return DiscreteField(ops.mesh, ops.extend_zero(x));
}

struct ShiftedSolver::Impl {
  SpMat A;
  double anorm = 1;  // 1-norm, for backward-error scaling
  Eigen::SparseLU<SpMat> lu;
  Eigen::BiCGSTAB<SpMat> iter;
  bool direct = true;
};

ShiftedSolver::ShiftedSolver(const DiscreteOperators& ops, double tau)
    : impl_(std::make_unique<Impl>()), tau_(tau) {
  impl_->A = ops.K - tau * ops.M;
  impl_->anorm = 0;
  for (int col = 0; col < impl_->A.outerSize(); ++col) {
    double s = 0;
    for (SpMat::InnerIterator it(impl_->A, col); it; ++it) s += std::abs(it.value());
    impl_->anorm = std::max(impl_->anorm, s);
  }
  impl_->direct = ops.n_interior() <= kDirectLimit;
  if (impl_->direct) {
    impl_->lu.compute(impl_->A);
    if (impl_->lu.info() != Eigen::Success)
      throw std::runtime_error("ShiftedSolver: LU factorization failed");
  } else {
    impl_->iter.setTolerance(1e-13);
    impl_->iter.setMaxIterations(20000);
    impl_->iter.compute(impl_->A);
  }
}

ShiftedSolver::~ShiftedSolver() = default;
ShiftedSolver::ShiftedSolver(ShiftedSolver&&) noexcept = default;

Vec ShiftedSolver::solve(const Vec& b) const {
  Vec x = impl_->direct ? impl_->lu.solve(b).eval() : impl_->iter.solve(b).eval();
  auto scale = [&](const Vec& xx) {
    return std::max(b.norm() + impl_->anorm * xx.norm(), 1e-300);
  };
  for (int pass = 0; pass < 4; ++pass) {
    const Vec r = b - impl_->A * x;
    if (r.norm() <= 1e-13 * scale(x)) return x;
    x += impl_->direct ? impl_->lu.solve(r).eval() : impl_->iter.solve(r).eval();
  }
  const double resid = (b - impl_->A * x).norm() / scale(x);
  if (resid > 1e-10)
    throw std::runtime_error("ShiftedSolver: refinement stalled at relative residual " +
                             std::to_string(resid));
  return x;
}

}  // namespace ellab
