#include <cmath>
#include <random>

#include "doctest.h"
#include "ellab/resolvent.hpp"
#include "oracles.hpp"

using namespace ellab;

TEST_SUITE_BEGIN("resolvent");

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

TEST_CASE("eigenfunction right-hand sides invert exactly") {
  const Setup s = make(DomainSpec::unit_square(), 0.1);
  const double gap = s.sp.lambda2 - s.sp.lambda1;

  SUBCASE("w = phi1 gives phi1/eps") {
    for (double eps : {0.3 * gap, 0.05, -0.5, -3.0}) {
      const DiscreteField v = resolvent(s.ops, s.sp, eps, s.sp.phi1);
      const double err = (v.values - s.sp.phi1.values / eps).cwiseAbs().maxCoeff();
      CHECK(err <= 1e-9 * s.sp.phi1_sup / std::abs(eps));
    }
  }
  SUBCASE("w = phi2 gives phi2/(lambda1+eps-lambda2)") {
    for (double eps : {0.2 * gap, -1.0}) {
      const DiscreteField v = resolvent(s.ops, s.sp, eps, s.sp.phi2);
      const double coeff = 1.0 / (s.sp.lambda1 + eps - s.sp.lambda2);
      const double err = (v.values - coeff * s.sp.phi2.values).cwiseAbs().maxCoeff();
      CHECK(err <= 1e-9 * s.sp.phi2.values.cwiseAbs().maxCoeff() * std::abs(coeff));
    }
  }
  SUBCASE("w = eps a phi1 gives a phi1 for either admissible sign") {
    for (double eps : {0.1, 0.01, -0.1, -0.01}) {
      const double a = 1.7;
      const DiscreteField w(s.mesh, (eps * a) * s.sp.phi1.values);
      const DiscreteField v = resolvent(s.ops, s.sp, eps, w);
      const double err = (v.values - a * s.sp.phi1.values).cwiseAbs().maxCoeff();
      CHECK(err <= 1e-8 * a);
    }
  }
}

TEST_CASE("resolvent linearity on seeded random fields") {
  const Setup s = make(DomainSpec::disk(1), 0.15);
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> unif(-1, 1);
  Vec w1 = Vec::Zero(s.mesh->num_nodes()), w2 = w1;
  for (int i = 0; i < s.mesh->num_nodes(); ++i) {
    w1(i) = unif(rng);
    w2(i) = unif(rng);
  }
  const double eps = 0.4, alpha = 0.3, beta = -1.2;
  const DiscreteField va = resolvent(s.ops, s.sp, eps, DiscreteField(s.mesh, w1));
  const DiscreteField vb = resolvent(s.ops, s.sp, eps, DiscreteField(s.mesh, w2));
  const DiscreteField vc =
      resolvent(s.ops, s.sp, eps, DiscreteField(s.mesh, alpha * w1 + beta * w2));
  const double err =
      (vc.values - alpha * va.values - beta * vb.values).cwiseAbs().maxCoeff();
  CHECK(err <= 1e-10 * vc.values.cwiseAbs().maxCoeff());
}

TEST_CASE("near-resonance shifts are rejected with a diagnostic") {
  const Setup s = make(DomainSpec::unit_square(), 0.2);
  CHECK_THROWS_WITH_AS(resolvent(s.ops, s.sp, 1e-9 * s.sp.lambda1, s.sp.phi1),
                       doctest::Contains("guard"), std::runtime_error);
  CHECK_THROWS(resolvent(s.ops, s.sp, s.sp.lambda2 - s.sp.lambda1, s.sp.phi1));
}

TEST_CASE("ratio bounds") {
  const Setup s = make(DomainSpec::unit_square(), 0.125);
  SUBCASE("multiple of phi1") {
    const DiscreteField v(s.mesh, 2.5 * s.sp.phi1.values);
    const auto [lo, hi] = ratio_bounds(v, s.sp);
    CHECK(lo == doctest::Approx(2.5).epsilon(1e-12));
    CHECK(hi == doctest::Approx(2.5).epsilon(1e-12));
  }
  SUBCASE("phi2 contamination straddles 1") {
    const DiscreteField v(s.mesh, s.sp.phi1.values + 0.1 * s.sp.phi2.values);
    const auto [lo, hi] = ratio_bounds(v, s.sp);
    CHECK(lo < 1);
    CHECK(hi > 1);
  }
  SUBCASE("zero field") {
    const auto [lo, hi] = ratio_bounds(zero_field(s.mesh), s.sp);
    CHECK(lo == 0);
    CHECK(hi == 0);
  }
}

TEST_CASE("load certification") {
  const Setup s = make(DomainSpec::unit_square(), 0.1);
  const double eps = 0.5;

  SUBCASE("aligned: integral eps t exactly") {
    LoadSpec spec;
    spec.family = LoadFamily::AlignedEigen;
    spec.t = 1.3;
    make_load(spec, eps, s.ops, s.sp);
    CHECK(std::abs(spec.int_wphi - eps * 1.3) <= 1e-12);
  }
  SUBCASE("orthogonal part does not move the integral") {
    for (double sval : {0.0, 0.7, 13.0}) {
      LoadSpec spec;
      spec.family = LoadFamily::EigenPlusOrth;
      spec.t = 1.5;
      spec.s = sval;
      make_load(spec, eps, s.ops, s.sp);
      CHECK(std::abs(spec.int_wphi - eps * 1.5) <= 1e-10);
    }
    LoadSpec spec;
    spec.family = LoadFamily::SignChanging;
    spec.t = 1.1;
    spec.s = 2.0;
    const DiscreteField w = make_load(spec, eps, s.ops, s.sp);
    CHECK(std::abs(spec.int_wphi - eps * 1.1) <= 1e-10);
    CHECK(w.values.minCoeff() < 0);  // genuinely sign-changing
    CHECK(w.values.maxCoeff() > 0);
  }
  SUBCASE("bump certification matches an independent quadrature") {
    LoadSpec spec;
    spec.family = LoadFamily::Bump;
    spec.t = 1.0;
    spec.center = Vec2(0.5, 0.5);
    spec.radius = 0.2;
    const DiscreteField w = make_load(spec, eps, s.ops, s.sp);
    CHECK(std::abs(spec.int_wphi - eps) <= 1e-12);
    CellLocator loc(s.mesh);
    double integral = 0;
    const int n = 400;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const Vec2 p((i + 0.5) / n, (j + 0.5) / n);
        integral += loc.eval(w.values, p) * loc.eval(s.sp.phi1.values, p) / (n * n);
      }
    CHECK(std::abs(integral - spec.int_wphi) <= 2e-3 * std::abs(spec.int_wphi));
    CHECK(spec.l1 > 0);
    CHECK(spec.lp > 0);
  }
  SUBCASE("bump outside the domain is rejected") {
    LoadSpec spec;
    spec.family = LoadFamily::Bump;
    spec.center = Vec2(0.95, 0.5);
    spec.radius = 0.2;  // pokes through the right edge
    CHECK_THROWS_AS(make_load(spec, eps, s.ops, s.sp), std::invalid_argument);
  }
}

TEST_CASE("eigen-expansion cross-route for mixed loads") {
  const Setup s = make(DomainSpec::unit_square(), 0.125);
  const double eps = 0.8, t = 1.5, sval = 0.4;
  LoadSpec spec;
  spec.family = LoadFamily::EigenPlusOrth;
  spec.t = t;
  spec.s = sval;
  const DiscreteField w = make_load(spec, eps, s.ops, s.sp);
  const DiscreteField v = resolvent(s.ops, s.sp, eps, w);
  const Vec expansion =
      t * s.sp.phi1.values - sval / (s.sp.lambda2 - s.sp.lambda1 - eps) * s.sp.phi2.values;
  CHECK((v.values - expansion).cwiseAbs().maxCoeff() <= 1e-8);
  const auto [lo, hi] = ratio_bounds(v, s.sp);
  CHECK(lo < t);
  CHECK(hi > t);
}

TEST_CASE("amp sweep: aligned family pins every cell at t = a") {
  const Setup s = make(DomainSpec::unit_square(), 0.125);
  const double gap = s.sp.lambda2 - s.sp.lambda1;
  for (int sign : {+1, -1}) {
    AmpSweepParams params;
    params.a = 1;
    params.b = 2;
    params.sign = sign;
    params.families = {LoadFamily::AlignedEigen};
    params.t_values = {1.0};
    params.eps_grid = {0.1 * gap / 2, 0.05 * gap / 2};
    params.eta_grid = {10, 5};
    const AmpSweepResult res = amp_sweep(s.ops, s.sp, params);
    for (const auto& cell : res.cells) {
      REQUIRE_FALSE(cell.empty);
      CHECK(cell.inf_ratio == doctest::Approx(1.0).epsilon(1e-8));
      CHECK(cell.sup_ratio == doctest::Approx(1.0).epsilon(1e-8));
    }
  }
}

TEST_CASE("amp sweep: orthogonal contamination shrinks toward the band") {
  const Setup s = make(DomainSpec::unit_square(), 0.125);
  const double gap = s.sp.lambda2 - s.sp.lambda1;
  AmpSweepParams params;
  params.a = 1;
  params.b = 2;
  params.families = {LoadFamily::EigenPlusOrth};
  params.t_values = {1.5};
  params.eps_grid = {0.2 * gap / 2, 0.0125 * gap / 2};
  params.eta_grid = {4, 1, 0.3};
  const AmpSweepResult res = amp_sweep(s.ops, s.sp, params);
  const AmpCell& big = res.cell(0, 0);
  const AmpCell& small = res.cell(1, 2);
  REQUIRE_FALSE(big.empty);
  REQUIRE_FALSE(small.empty);
  CHECK(std::abs(small.sup_ratio - 1.5) < std::abs(big.sup_ratio - 1.5));
  CHECK(std::abs(small.inf_ratio - 1.5) < std::abs(big.inf_ratio - 1.5));
  CHECK(std::abs(small.sup_ratio - 1.5) < 0.05);
}

TEST_CASE("amp sweep: starving the norm budget empties cells, which are skipped") {
  const Setup s = make(DomainSpec::unit_square(), 0.2);
  const double gap = s.sp.lambda2 - s.sp.lambda1;
  AmpSweepParams params;
  params.families = {LoadFamily::AlignedEigen};
  params.t_values = {1.0, 2.0};
  params.eps_grid = {0.2 * gap / 2};
  params.eta_grid = {10, 1e-9};
  const AmpSweepResult res = amp_sweep(s.ops, s.sp, params);
  CHECK_FALSE(res.cell(0, 0).empty);
  CHECK(res.cell(0, 1).empty);
}

TEST_CASE("band excess is monotone along both grid directions") {
  const Setup s = make(DomainSpec::unit_square(), 0.125);
  const double gap = s.sp.lambda2 - s.sp.lambda1;
  AmpSweepParams params;
  params.eps_grid = {0.2 * gap / 2, 0.1 * gap / 2, 0.05 * gap / 2};
  params.eta_grid = {2, 1, 0.5};
  const AmpSweepResult res = amp_sweep(s.ops, s.sp, params);
  // Paths toward (0, 0) shrink both coordinates: excess must not grow along
  // eta steps or joint (eps, eta) steps. (At fixed eta, shrinking eps alone
  // enlarges the relative orthogonal budget, which is why the proposition is
  // a joint limit.)
  const int ne = 3, nh = 3;
  for (int ie = 0; ie < ne; ++ie)
    for (int ih = 0; ih < nh; ++ih) {
      if (res.cell(ie, ih).empty) continue;
      if (ih + 1 < nh && !res.cell(ie, ih + 1).empty)
        CHECK(res.excess(ie, ih + 1) <= res.excess(ie, ih) + 1e-3);
      if (ie + 1 < ne && ih + 1 < nh && !res.cell(ie + 1, ih + 1).empty)
        CHECK(res.excess(ie + 1, ih + 1) <= res.excess(ie, ih) + 1e-3);
    }
}

TEST_CASE("classical anti-maximum positivity at small eps") {
  const Setup s = make(DomainSpec::unit_square(), 0.1);
  const double gap = s.sp.lambda2 - s.sp.lambda1;
  AmpSweepParams params;
  params.eps_grid = {0.025 * gap / 2};
  params.eta_grid = {0.5};
  const AmpSweepResult res = amp_sweep(s.ops, s.sp, params);
  const AmpCell& cell = res.cell(0, 0);
  REQUIRE_FALSE(cell.empty);
  CHECK(cell.inf_ratio > 0);  // T_eps(w) > 0 at all interior nodes
}

TEST_CASE("amp limit check") {
  const Setup s = make(DomainSpec::unit_square(), 0.1);
  SUBCASE("f = phi1 has zero deviation") {
    const AmpLimitResult res =
        amp_limit_check(s.ops, s.sp, s.sp.phi1, {0.5, 0.25, 0.125});
    for (const auto& row : res.rows) CHECK(row.sup_dev <= 1e-8);
  }
  SUBCASE("f = phi1 + phi2 deviates exactly by the expansion term") {
    const DiscreteField f(s.mesh, s.sp.phi1.values + s.sp.phi2.values);
    const std::vector<double> eps_seq = {0.5, 0.25};
    const AmpLimitResult res = amp_limit_check(s.ops, s.sp, f, eps_seq);
    for (std::size_t k = 0; k < eps_seq.size(); ++k) {
      double ratio_sup = 0;
      for (int i : s.mesh->interior_nodes)
        ratio_sup = std::max(ratio_sup,
                             std::abs(s.sp.phi2.values(i) / s.sp.phi1.values(i)));
      const double expected =
          eps_seq[k] * ratio_sup / (s.sp.lambda2 - s.sp.lambda1 - eps_seq[k]);
      CHECK(res.rows[k].sup_dev == doctest::Approx(expected).epsilon(1e-6));
    }
  }
  SUBCASE("f = 1 on the unit square approaches 8/pi^2") {
    const AmpLimitResult res = amp_limit_check(s.ops, s.sp, constant_field(s.mesh, 1.0),
                                               {1.0, 0.5, 0.25, 0.125, 0.0625});
    const double target = 8 / (M_PI * M_PI);
    CHECK(std::abs(res.int_fphi - target) <= 0.01 * target);
    CHECK(res.fitted_slope == doctest::Approx(1.0).epsilon(0.2));
    for (std::size_t k = 1; k < res.rows.size(); ++k)
      CHECK(res.rows[k].sup_dev < res.rows[k - 1].sup_dev);
  }
  SUBCASE("nonpositive alignment rejected") {
    const DiscreteField f(s.mesh, -s.sp.phi1.values);
    CHECK_THROWS_AS(amp_limit_check(s.ops, s.sp, f, {0.5}), std::invalid_argument);
  }
}

TEST_SUITE_END();
