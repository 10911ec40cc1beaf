#include "ellab/spectral.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <cmath>
#include <stdexcept>

namespace ellab {

namespace {

constexpr double kEigTol = 1e-12;
constexpr int kEigCap = 500;

struct EigResult {
  double lambda;
  Vec vec;  // M-normalized interior vector
};

// Inverse power iteration for the pencil K x = lambda M x.
EigResult inverse_iteration(const Eigen::SimplicialLDLT<SpMat>& kinv, const SpMat& K,
                            const SpMat& M, Vec x) {
  double nrm = std::sqrt(x.dot(M * x));
  if (!(nrm > 0)) throw std::runtime_error("eigensolver: zero start vector");
  x /= nrm;
  double lambda = x.dot(K * x);
  for (int it = 0; it < kEigCap; ++it) {
    Vec y = kinv.solve(M * x);
    nrm = std::sqrt(y.dot(M * y));
    if (!(nrm > 0)) throw std::runtime_error("eigensolver: iterate collapsed");
    y /= nrm;
    const double lnew = y.dot(K * y);
    const bool lam_ok = std::abs(lnew - lambda) <= kEigTol * std::abs(lnew);
    x = std::move(y);
    lambda = lnew;
    if (lam_ok) {
      const double resid = (K * x - lambda * (M * x)).norm();
      if (resid <= 1e-9 * lambda * (M * x).norm()) return {lambda, std::move(x)};
    }
  }
  throw std::runtime_error("eigensolver: iteration cap reached");
}

// Second eigenpair by a two-vector inverse subspace iteration deflated
// against phi1 in the M inner product, with Rayleigh-Ritz extraction. The
// block handles (near-)degenerate second eigenvalues, where single-vector
// deflated iteration stalls.
EigResult second_eigenpair(const Eigen::SimplicialLDLT<SpMat>& kinv, const SpMat& K,
                           const SpMat& M, const Vec& phi1, Vec x2, Vec x3) {
  auto deflate = [&](Vec& v) { v -= phi1 * (phi1.dot(M * v)); };
  auto orthonormalize = [&](Vec& a, Vec& b) {
    deflate(a);
    double na = std::sqrt(a.dot(M * a));
    if (!(na > 0)) throw std::runtime_error("eigensolver: block column collapsed");
    a /= na;
    deflate(b);
    b -= a * (a.dot(M * b));
    double nb = std::sqrt(b.dot(M * b));
    if (!(nb > 0)) throw std::runtime_error("eigensolver: block columns dependent");
    b /= nb;
  };
  orthonormalize(x2, x3);
  double lambda = x2.dot(K * x2);
  for (int it = 0; it < kEigCap; ++it) {
    Vec y2 = kinv.solve(M * x2);
    Vec y3 = kinv.solve(M * x3);
    orthonormalize(y2, y3);
    // 2x2 Rayleigh-Ritz in the M-orthonormal basis (y2, y3)
    Eigen::Matrix2d A;
    A(0, 0) = y2.dot(K * y2);
    A(0, 1) = A(1, 0) = y2.dot(K * y3);
    A(1, 1) = y3.dot(K * y3);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> ritz(A);
    const Eigen::Vector2d v0 = ritz.eigenvectors().col(0);
    const Eigen::Vector2d v1 = ritz.eigenvectors().col(1);
    Vec r2 = v0(0) * y2 + v0(1) * y3;
    Vec r3 = v1(0) * y2 + v1(1) * y3;
    const double lnew = ritz.eigenvalues()(0);
    const bool lam_ok = std::abs(lnew - lambda) <= kEigTol * std::abs(lnew);
    x2 = std::move(r2);
    x3 = std::move(r3);
    lambda = lnew;
    if (lam_ok) {
      const double resid = (K * x2 - lambda * (M * x2)).norm();
      if (resid <= 1e-9 * lambda * (M * x2).norm()) return {lambda, std::move(x2)};
    }
  }
  throw std::runtime_error("eigensolver: block iteration cap reached");
}

}  // namespace

SpectralData principal_eigenpair(const DiscreteOperators& ops) {
  const int n = ops.n_interior();
  Vec ones = Vec::Ones(n);
  // Deterministic second start with sign structure overlapping phi2.
  Vec alt(n);
  for (int k = 0; k < n; ++k) {
    const int i = ops.mesh->interior_nodes[k];
    alt(k) = ops.mesh->nodes(i, 0) + 0.37 * ops.mesh->nodes(i, 1) + 0.1;
  }
  return principal_eigenpair(ops, ones, alt);
}

SpectralData principal_eigenpair(const DiscreteOperators& ops, const Vec& start1,
                                 const Vec& start2) {
  Eigen::SimplicialLDLT<SpMat> kinv(ops.K);
  if (kinv.info() != Eigen::Success)
    throw std::runtime_error("eigensolver: stiffness factorization failed");

  EigResult e1 = inverse_iteration(kinv, ops.K, ops.M, start1);
  // Fix the sign so the eigenfunction is positive.
  if (e1.vec.sum() < 0) e1.vec = -e1.vec;
  for (int k = 0; k < e1.vec.size(); ++k)
    if (!(e1.vec(k) > 0))
      throw std::runtime_error("eigensolver: phi1 not positive at an interior node");

  // Second block column derived deterministically from the given start.
  Vec start3(ops.n_interior());
  for (int k = 0; k < ops.n_interior(); ++k) {
    const int i = ops.mesh->interior_nodes[k];
    start3(k) = start2(k) * (ops.mesh->nodes(i, 0) + 0.618) -
                0.41 * ops.mesh->nodes(i, 1) * start2(k) + 0.05;
  }
  EigResult e2 = second_eigenpair(kinv, ops.K, ops.M, e1.vec, start2, start3);
  // Clean the deflation once more so certified integrals built on phi2 are
  // orthogonal to machine precision.
  e2.vec -= e1.vec * (e1.vec.dot(ops.M * e2.vec));
  e2.vec /= std::sqrt(e2.vec.dot(ops.M * e2.vec));

  if (!(e2.lambda > e1.lambda))
    throw std::runtime_error("eigensolver: lambda2 <= lambda1");

  SpectralData sp;
  sp.lambda1 = e1.lambda;
  sp.lambda2 = e2.lambda;
  sp.phi1 = DiscreteField(ops.mesh, ops.extend_zero(e1.vec));
  sp.phi2 = DiscreteField(ops.mesh, ops.extend_zero(e2.vec));
  sp.phi1_sup = sp.phi1.values.maxCoeff();
  sp.phi1_l1 = Vec::Ones(ops.mesh->num_nodes()).dot(ops.M_full * sp.phi1.values);
  return sp;
}

double rayleigh_gap_check(const DiscreteOperators& ops, const SpectralData& sp,
                          const DiscreteField& w) {
  Vec v = ops.restrict_interior(w.values);
  const Vec p1 = ops.restrict_interior(sp.phi1.values);
  v -= p1 * (p1.dot(ops.M * v));
  const double m = v.dot(ops.M * v);
  if (!(m > 1e-28 * w.values.squaredNorm()))
    throw std::runtime_error("rayleigh_gap_check: field vanishes after projection");
  return v.dot(ops.K * v) / m;
}

double hopf_margin(const DiscreteOperators& ops, const SpectralData& sp) {
  const Mesh& m = *ops.mesh;
  double margin = std::numeric_limits<double>::max();
  auto visit = [&](int i, int j) {
    // i interior, j boundary
    const double dist = (m.nodes.row(i) - m.nodes.row(j)).norm();
    margin = std::min(margin, sp.phi1.values(i) / dist);
  };
  if (m.dim == 1) {
    for (int c = 0; c < m.segs.rows(); ++c) {
      const int a = m.segs(c, 0), b = m.segs(c, 1);
      if (!m.boundary(a) && m.boundary(b)) visit(a, b);
      if (m.boundary(a) && !m.boundary(b)) visit(b, a);
    }
  } else {
    for (int c = 0; c < m.tris.rows(); ++c)
      for (int e = 0; e < 3; ++e) {
        const int a = m.tris(c, e), b = m.tris(c, (e + 1) % 3);
        if (!m.boundary(a) && m.boundary(b)) visit(a, b);
        if (m.boundary(a) && !m.boundary(b)) visit(b, a);
      }
  }
  if (!(margin > 0) || margin == std::numeric_limits<double>::max())
    throw std::runtime_error("hopf_margin: no boundary-adjacent pairs or nonpositive margin");
  return margin;
}

}  // namespace ellab
