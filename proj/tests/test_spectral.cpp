#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "doctest.h"
#include "ellab/spectral.hpp"
#include "oracles.hpp"

using namespace ellab;

TEST_SUITE_BEGIN("spectral");

namespace {

struct Setup {
  MeshPtr mesh;
  DiscreteOperators ops;
  SpectralData sp;
};

Setup make(const DomainSpec& spec, double h) {
  Setup s;
  s.mesh = make_mesh(spec, h);
  s.ops = assemble(s.mesh);
  s.sp = principal_eigenpair(s.ops);
  return s;
}

}  // namespace

TEST_CASE("unit square eigenvalues approach 2 pi^2 and 5 pi^2") {
  const double l1_ref = 2 * M_PI * M_PI, l2_ref = 5 * M_PI * M_PI;
  std::vector<double> errs, lambdas;
  for (double h : {0.2, 0.1, 0.05}) {
    const Setup s = make(DomainSpec::unit_square(), h);
    errs.push_back(std::abs(s.sp.lambda1 - l1_ref) / l1_ref);
    lambdas.push_back(s.sp.lambda1);
    if (h <= 0.1) CHECK(std::abs(s.sp.lambda2 - l2_ref) / l2_ref < 0.05);
    for (int i : s.mesh->interior_nodes) CHECK(s.sp.phi1.values(i) > 0);
  }
  CHECK(errs.back() < 1e-2);
  const double order = std::log(errs[1] / errs[2]) / std::log(2.0);
  CHECK(order >= 1.8);
  // second-order Richardson from the two finest levels
  const double extrap = (4 * lambdas[2] - lambdas[1]) / 3;
  CHECK(std::abs(extrap - l1_ref) / l1_ref < 1e-3);
}

TEST_CASE("disk eigenvalues approach the Bessel-zero oracle values") {
  const double j01 = oracles::bessel_zero(0);
  const double j11 = oracles::bessel_zero(1);
  const Setup s = make(DomainSpec::disk(1), 0.08);
  CHECK(std::abs(s.sp.lambda1 - j01 * j01) / (j01 * j01) < 5e-3);
  CHECK(std::abs(s.sp.lambda2 - j11 * j11) / (j11 * j11) < 1e-2);
}

TEST_CASE("interval eigenpair matches the 1D closed form") {
  const Setup s = make(DomainSpec::interval(0, M_PI), M_PI / 100);
  CHECK(std::abs(s.sp.lambda1 - 1.0) < 1e-3);
  CHECK(std::abs(s.sp.lambda2 - 4.0) < 5e-3);
  const double amp = std::sqrt(2 / M_PI);
  double err = 0;
  for (int i = 0; i < s.mesh->num_nodes(); ++i)
    err = std::max(err, std::abs(s.sp.phi1.values(i) - amp * std::sin(s.mesh->nodes(i, 0))));
  CHECK(err < 1e-3);
}

TEST_CASE("coarse-mesh eigenpairs match a dense generalized eigensolver") {
  for (auto spec : {DomainSpec::interval(0, M_PI), DomainSpec::unit_square(), DomainSpec::disk(1)}) {
    const Setup s = make(spec, spec.dimension() == 1 ? M_PI / 12 : 0.3);
    const Mat Kd = Mat(s.ops.K);
    const Mat Md = Mat(s.ops.M);
    Eigen::GeneralizedSelfAdjointEigenSolver<Mat> dense(Kd, Md);
    REQUIRE(dense.info() == Eigen::Success);
    CHECK(std::abs(s.sp.lambda1 - dense.eigenvalues()(0)) <= 1e-10 * dense.eigenvalues()(0));
    CHECK(std::abs(s.sp.lambda2 - dense.eigenvalues()(1)) <= 1e-8 * dense.eigenvalues()(1));
    // phi1 direction agreement after sign fix
    Vec dv = dense.eigenvectors().col(0);
    if (dv.sum() < 0) dv = -dv;
    dv /= std::sqrt(dv.dot(Md * dv));
    const Vec mine = s.ops.restrict_interior(s.sp.phi1.values);
    CHECK((dv - mine).cwiseAbs().maxCoeff() < 1e-7 * mine.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("eigenpair residual and normalization invariants") {
  for (auto spec : {DomainSpec::unit_square(), DomainSpec::disk(1)}) {
    const Setup s = make(spec, 0.1);
    const Vec p1 = s.ops.restrict_interior(s.sp.phi1.values);
    const double resid = (s.ops.K * p1 - s.sp.lambda1 * (s.ops.M * p1)).norm();
    CHECK(resid <= 1e-8 * s.sp.lambda1 * (s.ops.M * p1).norm());
    CHECK(p1.dot(s.ops.M * p1) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.sp.lambda2 > s.sp.lambda1);
  }
}

TEST_CASE("recomputation from a different random start matches") {
  const Setup s = make(DomainSpec::unit_square(), 0.1);
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> unif(-1, 1);
  Vec r1(s.ops.n_interior()), r2(s.ops.n_interior());
  for (int i = 0; i < s.ops.n_interior(); ++i) {
    r1(i) = unif(rng);
    r2(i) = unif(rng);
  }
  const SpectralData again = principal_eigenpair(s.ops, r1, r2);
  CHECK(std::abs(again.lambda1 - s.sp.lambda1) <= 1e-8 * s.sp.lambda1);
  CHECK((again.phi1.values - s.sp.phi1.values).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("rayleigh gap check") {
  const Setup s = make(DomainSpec::unit_square(), 0.125);
  SUBCASE("phi2 gives exactly lambda2") {
    const double R = rayleigh_gap_check(s.ops, s.sp, s.sp.phi2);
    CHECK(R == doctest::Approx(s.sp.lambda2).epsilon(1e-10));
  }
  SUBCASE("phi1 vanishes after projection") {
    CHECK_THROWS(rayleigh_gap_check(s.ops, s.sp, s.sp.phi1));
  }
  SUBCASE("seeded random fields sit above the gap") {
    std::mt19937_64 rng(777);
    std::uniform_real_distribution<double> unif(-1, 1);
    for (int trial = 0; trial < 20; ++trial) {
      Vec w = Vec::Zero(s.mesh->num_nodes());
      for (int i : s.mesh->interior_nodes) w(i) = unif(rng);
      const double R = rayleigh_gap_check(s.ops, s.sp, DiscreteField(s.mesh, w));
      CHECK(R >= s.sp.lambda2 * (1 - 1e-8));
    }
  }
}

TEST_CASE("hopf margin: interval tends to the closed-form slope") {
  const double target = std::sqrt(2 / M_PI);
  double prev = 0;
  for (double h : {M_PI / 50, M_PI / 100}) {
    const Setup s = make(DomainSpec::interval(0, M_PI), h);
    const double m = hopf_margin(s.ops, s.sp);
    CHECK(m > 0);
    CHECK(std::abs(m - target) < 0.05);
    if (prev > 0) CHECK(std::abs(m - target) < std::abs(prev - target));
    prev = m;
  }
}

TEST_CASE("hopf margin: positive on the square, increasing toward the Bessel slope on the disk") {
  const Setup sq = make(DomainSpec::unit_square(), 0.1);
  CHECK(hopf_margin(sq.ops, sq.sp) > 0);

  const double j01 = oracles::bessel_zero(0);
  const double norm = std::sqrt(
      2 * M_PI * oracles::adaptive_simpson(
                     [j01](double r) {
                       const double v = std::cyl_bessel_j(0, j01 * r);
                       return v * v * r;
                     },
                     0, 1));
  const double slope = j01 * std::cyl_bessel_j(1, j01) / norm;
  double m_coarse = 0;
  for (double h : {0.2, 0.1}) {
    const Setup s = make(DomainSpec::disk(1), h);
    const double m = hopf_margin(s.ops, s.sp);
    CHECK(m > 0);
    CHECK(m < slope * 1.05);
    if (m_coarse > 0) CHECK(std::abs(m - slope) < std::abs(m_coarse - slope));
    m_coarse = m;
  }
}

TEST_SUITE_END();
