#include "ellab/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <queue>
#include <set>
#include <sstream>
#include <stdexcept>

#include "ellab/delaunay.hpp"
#include "ellab/io.hpp"

namespace ellab {

namespace {

void finalize(Mesh& m) {
  m.interior_index = Eigen::VectorXi::Constant(m.num_nodes(), -1);
  m.interior_nodes.clear();
  for (int i = 0; i < m.num_nodes(); ++i) {
    if (!m.boundary(i)) {
      m.interior_index(i) = static_cast<int>(m.interior_nodes.size());
      m.interior_nodes.push_back(i);
    }
  }
  // Orient 2D cells positively.
  for (int c = 0; c < m.tris.rows(); ++c) {
    if (m.cell_area(c) < 0) std::swap(m.tris(c, 1), m.tris(c, 2));
  }
  check_mesh(m);
}

Mesh structured_rectangle(double w, double h_dom, double h, const DomainSpec& spec) {
  const int nx = std::max(1, static_cast<int>(std::lround(w / h)));
  const int ny = std::max(1, static_cast<int>(std::lround(h_dom / h)));
  Mesh m;
  m.dim = 2;
  m.h_target = h;
  m.nodes.resize((nx + 1) * (ny + 1), 2);
  m.boundary.resize(m.nodes.rows());
  auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) {
      m.nodes(id(i, j), 0) = w * i / nx;
      m.nodes(id(i, j), 1) = h_dom * j / ny;
      m.boundary(id(i, j)) = (i == 0 || i == nx || j == 0 || j == ny);
    }
  m.tris.resize(2 * nx * ny, 3);
  int c = 0;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      m.tris.row(c++) << id(i, j), id(i + 1, j), id(i + 1, j + 1);
      m.tris.row(c++) << id(i, j), id(i + 1, j + 1), id(i, j + 1);
    }
  (void)spec;
  finalize(m);
  return m;
}

Mesh interval_mesh(double a, double b, double h) {
  const int n = std::max(1, static_cast<int>(std::lround((b - a) / h)));
  Mesh m;
  m.dim = 1;
  m.h_target = h;
  m.nodes.resize(n + 1, 2);
  m.nodes.setZero();
  m.boundary.resize(n + 1);
  for (int i = 0; i <= n; ++i) {
    m.nodes(i, 0) = a + (b - a) * i / n;
    m.boundary(i) = (i == 0 || i == n);
  }
  m.segs.resize(n, 2);
  for (int i = 0; i < n; ++i) m.segs.row(i) << i, i + 1;
  finalize(m);
  return m;
}

// Boundary nodes for curved/polygonal shapes, placed exactly on the curve.
std::vector<Vec2> boundary_ring(const DomainSpec& spec, double h) {
  std::vector<Vec2> ring;
  switch (spec.shape) {
    case Shape::Disk: {
      const int m = 2 * std::max(4, static_cast<int>(std::lround(M_PI * spec.radius / h)));
      for (int i = 0; i < m; ++i) {
        const double t = 2 * M_PI * i / m;
        ring.emplace_back(spec.radius * std::cos(t), spec.radius * std::sin(t));
      }
      break;
    }
    case Shape::Ellipse: {
      // Equal arc-length placement via a cumulative arc-length table.
      const int fine = 8192;
      std::vector<double> s(fine + 1, 0.0);
      auto gamma = [&spec](double t) {
        return Vec2(spec.rx * std::cos(t), spec.ry * std::sin(t));
      };
      for (int i = 1; i <= fine; ++i)
        s[i] = s[i - 1] + (gamma(2 * M_PI * i / fine) - gamma(2 * M_PI * (i - 1) / fine)).norm();
      const double per = s[fine];
      const int m = 2 * std::max(4, static_cast<int>(std::lround(per / (2 * h))));
      int k = 0;
      for (int i = 0; i < m; ++i) {
        const double target = per * i / m;
        while (k < fine && s[k + 1] < target) ++k;
        const double seg = s[k + 1] - s[k];
        const double f = seg > 0 ? (target - s[k]) / seg : 0.0;
        const double t = 2 * M_PI * (k + f) / fine;
        ring.push_back(gamma(t));
      }
      break;
    }
    case Shape::RegularPolygon:
    case Shape::ConvexPolygon: {
      std::vector<Vec2> vs = spec.vertices;
      if (spec.shape == Shape::RegularPolygon) {
        vs.clear();
        for (int i = 0; i < spec.sides; ++i) {
          const double t = 2 * M_PI * i / spec.sides;
          vs.emplace_back(spec.radius * std::cos(t), spec.radius * std::sin(t));
        }
      }
      for (std::size_t i = 0; i < vs.size(); ++i) {
        const Vec2& p0 = vs[i];
        const Vec2& p1 = vs[(i + 1) % vs.size()];
        const int n = std::max(1, static_cast<int>(std::lround((p1 - p0).norm() / h)));
        for (int j = 0; j < n; ++j) ring.push_back(p0 + (p1 - p0) * (static_cast<double>(j) / n));
      }
      break;
    }
    case Shape::Stadium: {
      const double l = spec.half_length, r = spec.radius;
      auto arc = [&ring, r, h](const Vec2& center, double t0, double t1) {
        const int n = std::max(2, static_cast<int>(std::lround(r * (t1 - t0) / h)));
        for (int j = 0; j < n; ++j) {
          const double t = t0 + (t1 - t0) * j / n;
          ring.push_back(center + r * Vec2(std::cos(t), std::sin(t)));
        }
      };
      auto seg = [&ring, h](const Vec2& p0, const Vec2& p1) {
        const int n = std::max(1, static_cast<int>(std::lround((p1 - p0).norm() / h)));
        for (int j = 0; j < n; ++j) ring.push_back(p0 + (p1 - p0) * (static_cast<double>(j) / n));
      };
      arc(Vec2(l, 0), -M_PI / 2, M_PI / 2);
      seg(Vec2(l, r), Vec2(-l, r));
      arc(Vec2(-l, 0), M_PI / 2, 3 * M_PI / 2);
      seg(Vec2(-l, -r), Vec2(l, -r));
      break;
    }
    default:
      throw std::logic_error("boundary_ring: structured shape");
  }
  return ring;
}

Mesh delaunay_mesh(const DomainSpec& spec, double h) {
  std::vector<Vec2> pts = boundary_ring(spec, h);
  const int n_bnd = static_cast<int>(pts.size());

  // Interior points on a triangular lattice, kept clear of the boundary so
  // Delaunay produces a clean strip of boundary cells.
  const double gap = 0.55 * h;
  const double dy = h * std::sqrt(3.0) / 2.0;
  Vec2 lo = pts[0], hi = pts[0];
  for (const auto& p : pts) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const Vec2 center = 0.5 * (lo + hi);
  const int jmax = static_cast<int>(std::ceil((hi.y() - lo.y()) / (2 * dy))) + 1;
  const int imax = static_cast<int>(std::ceil((hi.x() - lo.x()) / (2 * h))) + 1;
  for (int j = -jmax; j <= jmax; ++j) {
    const double y = center.y() + j * dy;
    const double off = (j & 1) ? 0.5 * h : 0.0;
    for (int i = -imax; i <= imax; ++i) {
      const Vec2 p(center.x() + i * h + off, y);
      if (spec.contains(p) && spec.inner_distance(p) >= gap) pts.push_back(p);
    }
  }

  Mesh m;
  m.dim = 2;
  m.h_target = h;
  m.nodes.resize(static_cast<int>(pts.size()), 2);
  for (std::size_t i = 0; i < pts.size(); ++i) m.nodes.row(static_cast<int>(i)) = pts[i].transpose();
  m.tris = delaunay_triangulate(pts);
  m.boundary.resize(m.num_nodes());
  for (int i = 0; i < m.num_nodes(); ++i) m.boundary(i) = (i < n_bnd);
  finalize(m);
  return m;
}

}  // namespace

double Mesh::cell_area(int c) const {
  if (dim == 1) return nodes(segs(c, 1), 0) - nodes(segs(c, 0), 0);
  const Vec2 a = nodes.row(tris(c, 0));
  const Vec2 b = nodes.row(tris(c, 1));
  const Vec2 d = nodes.row(tris(c, 2));
  return 0.5 * ((b.x() - a.x()) * (d.y() - a.y()) - (b.y() - a.y()) * (d.x() - a.x()));
}

double Mesh::total_area() const {
  double s = 0;
  for (int c = 0; c < num_cells(); ++c) s += cell_area(c);
  return s;
}

double Mesh::cell_diameter(int c) const {
  if (dim == 1) return std::abs(cell_area(c));
  double d = 0;
  for (int e = 0; e < 3; ++e) {
    const Vec2 a = nodes.row(tris(c, e));
    const Vec2 b = nodes.row(tris(c, (e + 1) % 3));
    d = std::max(d, (a - b).norm());
  }
  return d;
}

double Mesh::diameter() const {
  const Vec2 lo(nodes.col(0).minCoeff(), nodes.col(1).minCoeff());
  const Vec2 hi(nodes.col(0).maxCoeff(), nodes.col(1).maxCoeff());
  return (hi - lo).norm();
}

std::vector<std::pair<int, int>> Mesh::boundary_edges() const {
  std::vector<std::pair<int, int>> bedges;
  if (dim == 1) {
    for (int i = 0; i < num_nodes(); ++i)
      if (boundary(i)) bedges.emplace_back(i, i);
    return bedges;
  }
  std::map<std::pair<int, int>, int> edge_count;
  for (int c = 0; c < tris.rows(); ++c)
    for (int e = 0; e < 3; ++e) {
      int a = tris(c, e), b = tris(c, (e + 1) % 3);
      if (a > b) std::swap(a, b);
      edge_count[{a, b}]++;
    }
  for (const auto& [edge, cnt] : edge_count)
    if (cnt == 1) bedges.push_back(edge);
  return bedges;
}

double Mesh::boundary_distance(const Vec2& p) const {
  double best = std::numeric_limits<double>::max();
  if (dim == 1) {
    for (int i = 0; i < num_nodes(); ++i)
      if (boundary(i)) best = std::min(best, std::abs(p.x() - nodes(i, 0)));
    return best;
  }
  for (const auto& [a, b] : boundary_edges()) {
    const Vec2 s0 = nodes.row(a), s1 = nodes.row(b);
    const Vec2 e = s1 - s0;
    double t = e.squaredNorm() > 0 ? (p - s0).dot(e) / e.squaredNorm() : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    best = std::min(best, (p - (s0 + t * e)).norm());
  }
  return best;
}

Vec Mesh::node_boundary_distance() const {
  Vec d(num_nodes());
  if (dim == 1) {
    double xmin = std::numeric_limits<double>::max(), xmax = -xmin;
    for (int i = 0; i < num_nodes(); ++i)
      if (boundary(i)) {
        xmin = std::min(xmin, nodes(i, 0));
        xmax = std::max(xmax, nodes(i, 0));
      }
    for (int i = 0; i < num_nodes(); ++i)
      d(i) = std::min(nodes(i, 0) - xmin, xmax - nodes(i, 0));
    return d;
  }
  const auto bedges = boundary_edges();
  for (int i = 0; i < num_nodes(); ++i) {
    if (boundary(i)) {
      d(i) = 0;
      continue;
    }
    const Vec2 p = nodes.row(i);
    double best = std::numeric_limits<double>::max();
    for (const auto& [a, b] : bedges) {
      const Vec2 s0 = nodes.row(a), s1 = nodes.row(b);
      const Vec2 e = s1 - s0;
      double t = e.squaredNorm() > 0 ? (p - s0).dot(e) / e.squaredNorm() : 0.0;
      t = std::clamp(t, 0.0, 1.0);
      best = std::min(best, (p - (s0 + t * e)).norm());
    }
    d(i) = best;
  }
  return d;
}

void Mesh::write(std::ostream& os) const {
  os << "N " << num_nodes() << "\n";
  for (int i = 0; i < num_nodes(); ++i) {
    if (dim == 1)
      os << format_double(nodes(i, 0)) << " " << (boundary(i) ? 1 : 0) << "\n";
    else
      os << format_double(nodes(i, 0)) << " " << format_double(nodes(i, 1)) << " "
         << (boundary(i) ? 1 : 0) << "\n";
  }
  os << "T " << num_cells() << "\n";
  for (int c = 0; c < num_cells(); ++c) {
    if (dim == 1)
      os << segs(c, 0) << " " << segs(c, 1) << "\n";
    else
      os << tris(c, 0) << " " << tris(c, 1) << " " << tris(c, 2) << "\n";
  }
}

void Mesh::write_file(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  write(os);
}

Mesh Mesh::read(std::istream& is) {
  std::string tag;
  int n = 0;
  is >> tag >> n;
  if (tag != "N" || n <= 0) throw std::runtime_error("mesh read: bad node header");
  std::vector<std::vector<std::string>> node_lines;
  std::string line;
  std::getline(is, line);  // eat end of header line
  int dim = 0;
  Mesh m;
  m.nodes.resize(n, 2);
  m.nodes.setZero();
  m.boundary.resize(n);
  for (int i = 0; i < n; ++i) {
    if (!std::getline(is, line)) throw std::runtime_error("mesh read: truncated nodes");
    std::istringstream ls(line);
    std::vector<std::string> toks;
    std::string t;
    while (ls >> t) toks.push_back(t);
    if (toks.size() == 2) {
      if (dim == 0) dim = 1;
      if (dim != 1) throw std::runtime_error("mesh read: mixed node dimension");
      m.nodes(i, 0) = parse_double(toks[0]);
      m.boundary(i) = toks[1] == "1";
    } else if (toks.size() == 3) {
      if (dim == 0) dim = 2;
      if (dim != 2) throw std::runtime_error("mesh read: mixed node dimension");
      m.nodes(i, 0) = parse_double(toks[0]);
      m.nodes(i, 1) = parse_double(toks[1]);
      m.boundary(i) = toks[2] == "1";
    } else {
      throw std::runtime_error("mesh read: bad node line");
    }
  }
  m.dim = dim;
  int nc = 0;
  is >> tag >> nc;
  if (tag != "T" || nc < 0) throw std::runtime_error("mesh read: bad cell header");
  if (dim == 1) {
    m.segs.resize(nc, 2);
    for (int c = 0; c < nc; ++c) is >> m.segs(c, 0) >> m.segs(c, 1);
  } else {
    m.tris.resize(nc, 3);
    for (int c = 0; c < nc; ++c) is >> m.tris(c, 0) >> m.tris(c, 1) >> m.tris(c, 2);
  }
  finalize(m);
  return m;
}

Mesh Mesh::read_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open mesh file: " + path);
  return read(is);
}

Mesh build_mesh(const DomainSpec& spec, double h) {
  if (!(h > 0)) throw std::invalid_argument("build_mesh: h must be positive");
  spec.validate();
  switch (spec.shape) {
    case Shape::Interval:
      return interval_mesh(spec.a, spec.b, h);
    case Shape::UnitSquare:
      return structured_rectangle(1, 1, h, spec);
    case Shape::Rectangle:
      return structured_rectangle(spec.width, spec.height, h, spec);
    default:
      return delaunay_mesh(spec, h);
  }
}

QualityReport mesh_quality(const Mesh& mesh) {
  QualityReport q;
  q.min_angle_deg = 180;
  q.max_aspect = 1;
  q.h_actual = 0;
  for (int c = 0; c < mesh.num_cells(); ++c) q.h_actual = std::max(q.h_actual, mesh.cell_diameter(c));
  if (mesh.dim == 1) {
    q.min_angle_deg = 180;  // no angles in 1D; aspect 1 by convention
    return q;
  }
  for (int c = 0; c < mesh.tris.rows(); ++c) {
    double emin = std::numeric_limits<double>::max(), emax = 0;
    for (int e = 0; e < 3; ++e) {
      const Vec2 a = mesh.nodes.row(mesh.tris(c, e));
      const Vec2 b = mesh.nodes.row(mesh.tris(c, (e + 1) % 3));
      const Vec2 d = mesh.nodes.row(mesh.tris(c, (e + 2) % 3));
      const Vec2 u = b - a, v = d - a;
      const double ang = std::atan2(std::abs(u.x() * v.y() - u.y() * v.x()), u.dot(v));
      q.min_angle_deg = std::min(q.min_angle_deg, ang * 180 / M_PI);
      const double len = u.norm();
      emin = std::min(emin, len);
      emax = std::max(emax, len);
    }
    q.max_aspect = std::max(q.max_aspect, emax / emin);
  }
  return q;
}

void check_mesh(const Mesh& m) {
  if (m.num_nodes() < 2) throw std::runtime_error("mesh: too few nodes");
  for (int c = 0; c < m.num_cells(); ++c)
    if (!(m.cell_area(c) > 0)) throw std::runtime_error("mesh: non-positive cell area");
  if (m.num_interior() == 0) throw std::runtime_error("mesh: no interior nodes (h too large)");

  // Interior connectivity through cell edges.
  std::vector<std::vector<int>> adj(m.num_nodes());
  auto link = [&adj](int a, int b) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  };
  if (m.dim == 1) {
    for (int c = 0; c < m.segs.rows(); ++c) link(m.segs(c, 0), m.segs(c, 1));
  } else {
    for (int c = 0; c < m.tris.rows(); ++c)
      for (int e = 0; e < 3; ++e) link(m.tris(c, e), m.tris(c, (e + 1) % 3));
  }
  std::vector<char> seen(m.num_nodes(), 0);
  std::queue<int> bfs;
  bfs.push(m.interior_nodes.front());
  seen[m.interior_nodes.front()] = 1;
  int reached = 0;
  while (!bfs.empty()) {
    const int i = bfs.front();
    bfs.pop();
    ++reached;
    for (int j : adj[i]) {
      if (!seen[j] && !m.boundary(j)) {
        seen[j] = 1;
        bfs.push(j);
      }
    }
  }
  if (reached != m.num_interior()) throw std::runtime_error("mesh: interior graph disconnected");
}

}  // namespace ellab
