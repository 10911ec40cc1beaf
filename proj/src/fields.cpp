#include "ellab/fields.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "ellab/io.hpp"

namespace ellab {

void DiscreteField::write_file(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << values.size() << "\n";
  for (Eigen::Index i = 0; i < values.size(); ++i) os << format_double(values(i)) << "\n";
}

DiscreteField DiscreteField::read_file(const std::string& path, MeshPtr mesh) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open field file: " + path);
  int n = 0;
  is >> n;
  if (n != mesh->num_nodes()) throw std::runtime_error("field/mesh size mismatch");
  Vec v(n);
  std::string tok;
  for (int i = 0; i < n; ++i) {
    if (!(is >> tok)) throw std::runtime_error("field file truncated");
    v(i) = parse_double(tok);
  }
  return DiscreteField(std::move(mesh), std::move(v));
}

DiscreteField zero_field(MeshPtr mesh) {
  Vec v = Vec::Zero(mesh->num_nodes());
  return DiscreteField(std::move(mesh), std::move(v));
}

DiscreteField constant_field(MeshPtr mesh, double value) {
  Vec v = Vec::Constant(mesh->num_nodes(), value);
  return DiscreteField(std::move(mesh), std::move(v));
}

DiscreteField sample_field(MeshPtr mesh, const std::function<double(const Vec2&)>& f,
                           bool dirichlet) {
  Vec v(mesh->num_nodes());
  for (int i = 0; i < mesh->num_nodes(); ++i) {
    if (dirichlet && mesh->boundary(i))
      v(i) = 0;
    else
      v(i) = f(mesh->nodes.row(i).transpose());
  }
  return DiscreteField(std::move(mesh), std::move(v));
}

void enforce_dirichlet(DiscreteField& f) {
  for (int i = 0; i < f.mesh->num_nodes(); ++i)
    if (f.mesh->boundary(i)) f.values(i) = 0;
}

NodeMatrix nodal_gradients(const Mesh& mesh, const Vec& values) {
  NodeMatrix g = NodeMatrix::Zero(mesh.num_nodes(), 2);
  Vec weight = Vec::Zero(mesh.num_nodes());
  if (mesh.dim == 1) {
    for (int c = 0; c < mesh.segs.rows(); ++c) {
      const int i = mesh.segs(c, 0), j = mesh.segs(c, 1);
      const double len = mesh.nodes(j, 0) - mesh.nodes(i, 0);
      const double slope = (values(j) - values(i)) / len;
      g(i, 0) += slope * len;
      g(j, 0) += slope * len;
      weight(i) += len;
      weight(j) += len;
    }
  } else {
    for (int c = 0; c < mesh.tris.rows(); ++c) {
      const int i0 = mesh.tris(c, 0), i1 = mesh.tris(c, 1), i2 = mesh.tris(c, 2);
      const Vec2 a = mesh.nodes.row(i0), b = mesh.nodes.row(i1), d = mesh.nodes.row(i2);
      const double area2 = (b.x() - a.x()) * (d.y() - a.y()) - (b.y() - a.y()) * (d.x() - a.x());
      // grad of P1 on the triangle from rotated edge vectors
      const Vec2 gl0(b.y() - d.y(), d.x() - b.x());
      const Vec2 gl1((d.y() - a.y()), (a.x() - d.x()));
      const Vec2 gl2((a.y() - b.y()), (b.x() - a.x()));
      Vec2 grad = (values(i0) * gl0 + values(i1) * gl1 + values(i2) * gl2) / area2;
      const double area = 0.5 * area2;
      for (int k = 0; k < 3; ++k) {
        const int idx = mesh.tris(c, k);
        g.row(idx) += area * grad.transpose();
        weight(idx) += area;
      }
    }
  }
  for (int i = 0; i < mesh.num_nodes(); ++i)
    if (weight(i) > 0) g.row(i) /= weight(i);
  return g;
}

CellLocator::CellLocator(MeshPtr mesh) : mesh_(std::move(mesh)) {
  const Mesh& m = *mesh_;
  if (m.dim == 1) {
    nx_ = 1;
    ny_ = 1;
    buckets_.resize(1);
    return;
  }
  x0_ = m.nodes.col(0).minCoeff();
  y0_ = m.nodes.col(1).minCoeff();
  const double x1 = m.nodes.col(0).maxCoeff();
  const double y1 = m.nodes.col(1).maxCoeff();
  const int target = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(m.num_cells()))));
  nx_ = ny_ = target;
  dx_ = std::max((x1 - x0_) / nx_, 1e-300);
  dy_ = std::max((y1 - y0_) / ny_, 1e-300);
  buckets_.assign(static_cast<std::size_t>(nx_) * ny_, {});
  for (int c = 0; c < m.tris.rows(); ++c) {
    double cx0 = 1e300, cy0 = 1e300, cx1 = -1e300, cy1 = -1e300;
    for (int e = 0; e < 3; ++e) {
      cx0 = std::min(cx0, m.nodes(m.tris(c, e), 0));
      cx1 = std::max(cx1, m.nodes(m.tris(c, e), 0));
      cy0 = std::min(cy0, m.nodes(m.tris(c, e), 1));
      cy1 = std::max(cy1, m.nodes(m.tris(c, e), 1));
    }
    const int bx0 = std::clamp(static_cast<int>((cx0 - x0_) / dx_), 0, nx_ - 1);
    const int bx1 = std::clamp(static_cast<int>((cx1 - x0_) / dx_), 0, nx_ - 1);
    const int by0 = std::clamp(static_cast<int>((cy0 - y0_) / dy_), 0, ny_ - 1);
    const int by1 = std::clamp(static_cast<int>((cy1 - y0_) / dy_), 0, ny_ - 1);
    for (int by = by0; by <= by1; ++by)
      for (int bx = bx0; bx <= bx1; ++bx)
        buckets_[static_cast<std::size_t>(by) * nx_ + bx].push_back(c);
  }
}

int CellLocator::locate(const Vec2& p) const {
  const Mesh& m = *mesh_;
  if (m.dim == 1) {
    for (int c = 0; c < m.segs.rows(); ++c) {
      const double a = m.nodes(m.segs(c, 0), 0), b = m.nodes(m.segs(c, 1), 0);
      if (p.x() >= a - 1e-12 && p.x() <= b + 1e-12) return c;
    }
    return -1;
  }
  const int bx = std::clamp(static_cast<int>((p.x() - x0_) / dx_), 0, nx_ - 1);
  const int by = std::clamp(static_cast<int>((p.y() - y0_) / dy_), 0, ny_ - 1);
  for (int c : buckets_[static_cast<std::size_t>(by) * nx_ + bx]) {
    const Vec2 a = m.nodes.row(m.tris(c, 0));
    const Vec2 b = m.nodes.row(m.tris(c, 1));
    const Vec2 d = m.nodes.row(m.tris(c, 2));
    const double area2 = (b.x() - a.x()) * (d.y() - a.y()) - (b.y() - a.y()) * (d.x() - a.x());
    const double l0 = ((b.x() - p.x()) * (d.y() - p.y()) - (b.y() - p.y()) * (d.x() - p.x())) / area2;
    const double l1 = ((d.x() - p.x()) * (a.y() - p.y()) - (d.y() - p.y()) * (a.x() - p.x())) / area2;
    const double l2 = 1 - l0 - l1;
    if (l0 >= -1e-12 && l1 >= -1e-12 && l2 >= -1e-12) return c;
  }
  return -1;
}

double CellLocator::eval(const Vec& values, const Vec2& p) const {
  const Mesh& m = *mesh_;
  const int c = locate(p);
  if (c < 0) throw std::runtime_error("CellLocator::eval: point outside mesh");
  if (m.dim == 1) {
    const int i = m.segs(c, 0), j = m.segs(c, 1);
    const double a = m.nodes(i, 0), b = m.nodes(j, 0);
    const double t = (p.x() - a) / (b - a);
    return (1 - t) * values(i) + t * values(j);
  }
  const Vec2 a = m.nodes.row(m.tris(c, 0));
  const Vec2 b = m.nodes.row(m.tris(c, 1));
  const Vec2 d = m.nodes.row(m.tris(c, 2));
  const double area2 = (b.x() - a.x()) * (d.y() - a.y()) - (b.y() - a.y()) * (d.x() - a.x());
  const double l0 = ((b.x() - p.x()) * (d.y() - p.y()) - (b.y() - p.y()) * (d.x() - p.x())) / area2;
  const double l1 = ((d.x() - p.x()) * (a.y() - p.y()) - (d.y() - p.y()) * (a.x() - p.x())) / area2;
  const double l2 = 1 - l0 - l1;
  return l0 * values(m.tris(c, 0)) + l1 * values(m.tris(c, 1)) + l2 * values(m.tris(c, 2));
}

double quadrature(const Mesh& mesh, const Vec& values, const std::function<double(double)>& g) {
  double total = 0;
  if (mesh.dim == 1) {
    const double gp = 1.0 / std::sqrt(3.0);
    for (int c = 0; c < mesh.segs.rows(); ++c) {
      const double v0 = values(mesh.segs(c, 0)), v1 = values(mesh.segs(c, 1));
      const double len = mesh.cell_area(c);
      const double vm = 0.5 * (v0 + v1), dv = 0.5 * (v1 - v0);
      total += 0.5 * len * (g(vm - gp * dv) + g(vm + gp * dv));
    }
    return total;
  }
  for (int c = 0; c < mesh.tris.rows(); ++c) {
    const double v0 = values(mesh.tris(c, 0));
    const double v1 = values(mesh.tris(c, 1));
    const double v2 = values(mesh.tris(c, 2));
    const double area = mesh.cell_area(c);
    total += area / 3.0 * (g(0.5 * (v0 + v1)) + g(0.5 * (v1 + v2)) + g(0.5 * (v2 + v0)));
  }
  return total;
}

double l1_norm(const Mesh& mesh, const Vec& values) {
  return quadrature(mesh, values, [](double v) { return std::abs(v); });
}

double lp_norm(const Mesh& mesh, const Vec& values, double p) {
  const double s = quadrature(mesh, values, [p](double v) { return std::pow(std::abs(v), p); });
  return std::pow(s, 1.0 / p);
}

}  // namespace ellab
