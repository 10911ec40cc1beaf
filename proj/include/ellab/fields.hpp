#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "ellab/mesh.hpp"
#include "ellab/types.hpp"

namespace ellab {

// Nodal scalar field on a shared mesh.
struct DiscreteField {
  MeshPtr mesh;
  Vec values;

  DiscreteField() = default;
  DiscreteField(MeshPtr m, Vec v) : mesh(std::move(m)), values(std::move(v)) {}

  int size() const { return static_cast<int>(values.size()); }
  double max_abs() const { return values.size() ? values.cwiseAbs().maxCoeff() : 0.0; }

  void write_file(const std::string& path) const;
  static DiscreteField read_file(const std::string& path, MeshPtr mesh);
};

DiscreteField zero_field(MeshPtr mesh);
DiscreteField constant_field(MeshPtr mesh, double value);
// Samples f at the nodes; if dirichlet, boundary nodes are set to exactly 0.
DiscreteField sample_field(MeshPtr mesh, const std::function<double(const Vec2&)>& f,
                           bool dirichlet = false);

void enforce_dirichlet(DiscreteField& f);

// P1 gradient per cell, area-averaged to nodes. Column 1 is zero in 1D.
NodeMatrix nodal_gradients(const Mesh& mesh, const Vec& values);

// Point location accelerator for P1 interpolation (uniform bucket grid).
class CellLocator {
 public:
  explicit CellLocator(MeshPtr mesh);
  // Containing cell index (barycentric tolerance 1e-12), or -1.
  int locate(const Vec2& p) const;
  double eval(const Vec& values, const Vec2& p) const;  // throws if p outside
  const Mesh& mesh() const { return *mesh_; }

 private:
  MeshPtr mesh_;
  double x0_ = 0, y0_ = 0, dx_ = 1, dy_ = 1;
  int nx_ = 1, ny_ = 1;
  std::vector<std::vector<int>> buckets_;
};

// Per-cell quadrature of g(w) with the edge-midpoint rule (degree 2 exact);
// midpoint rule in 1D is replaced by two-point Gauss on the P1 interpolant.
double quadrature(const Mesh& mesh, const Vec& values, const std::function<double(double)>& g);

double l1_norm(const Mesh& mesh, const Vec& values);
double lp_norm(const Mesh& mesh, const Vec& values, double p);

}  // namespace ellab
