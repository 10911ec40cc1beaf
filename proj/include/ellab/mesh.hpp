#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "ellab/domain.hpp"
#include "ellab/types.hpp"

namespace ellab {

// Conforming P1 mesh: segments in 1D, positively oriented triangles in 2D.
// Immutable after construction and safe to share read-only across workers.
struct Mesh {
  int dim = 2;
  NodeMatrix nodes;          // 1D meshes use column 0 only
  TriMatrix tris;            // 2D cells
  SegMatrix segs;            // 1D cells
  BoolArray boundary;        // per-node Dirichlet boundary flag
  Eigen::VectorXi interior_index;  // dense interior renumbering, -1 on boundary
  std::vector<int> interior_nodes;
  double h_target = 0;

  int num_nodes() const { return static_cast<int>(nodes.rows()); }
  int num_cells() const { return dim == 1 ? static_cast<int>(segs.rows()) : static_cast<int>(tris.rows()); }
  int num_interior() const { return static_cast<int>(interior_nodes.size()); }

  double cell_area(int c) const;  // length in 1D, signed area in 2D
  double total_area() const;
  double cell_diameter(int c) const;
  double diameter() const;

  // Euclidean distance from each node to the mesh boundary (endpoints in 1D,
  // boundary edge polyline in 2D).
  Vec node_boundary_distance() const;

  // Mesh edges lying on exactly one cell (2D); the two endpoints in 1D.
  std::vector<std::pair<int, int>> boundary_edges() const;
  // Distance of an arbitrary point to the mesh boundary polyline.
  double boundary_distance(const Vec2& p) const;

  void write(std::ostream& os) const;
  void write_file(const std::string& path) const;
  static Mesh read(std::istream& is);
  static Mesh read_file(const std::string& path);
};

struct QualityReport {
  double min_angle_deg = 0;
  double max_aspect = 1;
  double h_actual = 0;
};

// Triangulates the domain at target size h. Structured right-triangle split
// for rectangles, uniform subdivision in 1D, boundary ring plus interior
// triangular lattice fed to Delaunay for curved and polygonal shapes.
// Boundary nodes of curved shapes sit exactly on the analytic curve.
Mesh build_mesh(const DomainSpec& spec, double h);

QualityReport mesh_quality(const Mesh& mesh);

// Validates mesh invariants (positive areas, connected interior graph,
// boundary flags consistent with cell structure); throws on violation.
void check_mesh(const Mesh& mesh);

using MeshPtr = std::shared_ptr<const Mesh>;

inline MeshPtr make_mesh(const DomainSpec& spec, double h) {
  return std::make_shared<const Mesh>(build_mesh(spec, h));
}

}  // namespace ellab
