#include <cmath>

#include "doctest.h"
#include "ellab/assemble.hpp"

using namespace ellab;

TEST_SUITE_BEGIN("assemble");

TEST_CASE("full stiffness rows sum to zero (constants in the kernel)") {
  for (auto spec : {DomainSpec::unit_square(), DomainSpec::disk(1)}) {
    const auto ops = assemble(make_mesh(spec, 0.2));
    const Vec rowsum = ops.K_full * Vec::Ones(ops.mesh->num_nodes());
    CHECK(rowsum.cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("mass entries sum to the mesh area") {
  {
    const auto ops = assemble(make_mesh(DomainSpec::unit_square(), 0.25));
    const double total = Vec::Ones(ops.mesh->num_nodes())
                             .dot(ops.M_full * Vec::Ones(ops.mesh->num_nodes()));
    CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
  }
  {
    const auto ops = assemble(make_mesh(DomainSpec::disk(1), 0.2));
    const double total = Vec::Ones(ops.mesh->num_nodes())
                             .dot(ops.M_full * Vec::Ones(ops.mesh->num_nodes()));
    CHECK(total == doctest::Approx(ops.mesh->total_area()).epsilon(1e-10));
  }
  {
    const auto ops = assemble(make_mesh(DomainSpec::interval(0, M_PI), M_PI / 16));
    const double total = Vec::Ones(ops.mesh->num_nodes())
                             .dot(ops.M_full * Vec::Ones(ops.mesh->num_nodes()));
    CHECK(total == doctest::Approx(M_PI).epsilon(1e-12));
  }
}

TEST_CASE("structured square interior row is the 5-point stencil") {
  // Hand assembly of the two-triangle patch around an interior node gives
  // diagonal 4, the four axis neighbors -1, and zero on the split diagonals.
  const auto mesh = make_mesh(DomainSpec::unit_square(), 0.25);
  const auto ops = assemble(mesh);
  int center = -1;
  for (int i : mesh->interior_nodes) {
    if (std::abs(mesh->nodes(i, 0) - 0.5) < 1e-12 && std::abs(mesh->nodes(i, 1) - 0.5) < 1e-12)
      center = i;
  }
  REQUIRE(center >= 0);
  const Mat K = Mat(ops.K_full);
  CHECK(K(center, center) == doctest::Approx(4.0).epsilon(1e-12));
  int minus_ones = 0, zeros = 0;
  for (int j = 0; j < mesh->num_nodes(); ++j) {
    if (j == center) continue;
    const double dx = mesh->nodes(j, 0) - 0.5, dy = mesh->nodes(j, 1) - 0.5;
    const double d = std::hypot(dx, dy);
    if (d < 0.26) {
      CHECK(K(center, j) == doctest::Approx(-1.0).epsilon(1e-12));
      ++minus_ones;
    } else if (d < 0.4) {
      CHECK(std::abs(K(center, j)) <= 1e-13);
      ++zeros;
    }
  }
  CHECK(minus_ones == 4);
  CHECK(zeros == 4);
}

TEST_CASE("solve_dirichlet: zero rhs gives zero") {
  const auto ops = assemble(make_mesh(DomainSpec::unit_square(), 0.25));
  const DiscreteField u = solve_dirichlet(ops, zero_field(ops.mesh));
  CHECK(u.max_abs() == 0.0);
}

TEST_CASE("disk torsion: max u -> 1/4 with the radial closed form") {
  // u = (1 - r^2)/4 solves -Delta u = 1 on the unit disk.
  double prev_err = 0;
  int level = 0;
  for (double h : {0.2, 0.1}) {
    const auto ops = assemble(make_mesh(DomainSpec::disk(1), h));
    const DiscreteField u = solve_dirichlet(ops, constant_field(ops.mesh, 1.0));
    double err = 0;
    for (int i = 0; i < ops.mesh->num_nodes(); ++i) {
      const double r2 = ops.mesh->nodes.row(i).squaredNorm();
      err = std::max(err, std::abs(u.values(i) - 0.25 * (1 - r2)));
    }
    CHECK(std::abs(u.values.maxCoeff() - 0.25) < 0.02);
    if (level++ > 0) CHECK(err < 0.6 * prev_err);
    prev_err = err;
  }
}

TEST_CASE("square separable source reproduces sin(pi x) sin(pi y)") {
  const auto mesh = make_mesh(DomainSpec::unit_square(), 0.05);
  const auto ops = assemble(mesh);
  const DiscreteField rhs = sample_field(mesh, [](const Vec2& p) {
    return 2 * M_PI * M_PI * std::sin(M_PI * p.x()) * std::sin(M_PI * p.y());
  });
  const DiscreteField u = solve_dirichlet(ops, rhs);
  double err = 0;
  for (int i = 0; i < mesh->num_nodes(); ++i)
    err = std::max(err, std::abs(u.values(i) - std::sin(M_PI * mesh->nodes(i, 0)) *
                                                    std::sin(M_PI * mesh->nodes(i, 1))));
  CHECK(err < 1e-2);
}

TEST_CASE("discrete maximum principle on non-obtuse meshes") {
  for (auto spec : {DomainSpec::unit_square(), DomainSpec::interval(0, M_PI)}) {
    const auto mesh = make_mesh(spec, spec.dimension() == 1 ? M_PI / 20 : 0.1);
    const auto ops = assemble(mesh);
    const DiscreteField rhs = sample_field(mesh, [](const Vec2& p) {
      return std::max(0.0, 0.25 - (p - Vec2(0.3, 0.3)).squaredNorm());
    });
    REQUIRE(rhs.values.maxCoeff() > 0);
    const DiscreteField u = solve_dirichlet(ops, rhs);
    for (int i : mesh->interior_nodes) CHECK(u.values(i) > 0);
  }
}

TEST_CASE("reference triangle element: stiffness rows sum to zero") {
  Mesh m;
  m.dim = 2;
  m.nodes.resize(3, 2);
  m.nodes << 0, 0, 1, 0, 0, 1;
  m.tris.resize(1, 3);
  m.tris << 0, 1, 2;
  m.boundary.resize(3);
  m.boundary << false, true, true;  // one nominal interior node so assembly has a block
  m.interior_index = Eigen::VectorXi::Constant(3, -1);
  m.interior_index(0) = 0;
  m.interior_nodes = {0};
  m.h_target = 1;
  const auto ops = assemble(std::make_shared<const Mesh>(std::move(m)));
  const Vec rowsum = ops.K_full * Vec::Ones(3);
  CHECK(rowsum.cwiseAbs().maxCoeff() <= 1e-14);
  const Mat K = Mat(ops.K_full);
  CHECK(K(0, 0) == doctest::Approx(1.0));
  CHECK(K(1, 1) == doctest::Approx(0.5));
  CHECK(K(2, 2) == doctest::Approx(0.5));
}

TEST_SUITE_END();
