#include "ellab/delaunay.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <unordered_map>
#include <vector>

namespace ellab {

namespace {

struct Tri {
  int v[3];        // vertex indices, CCW
  int nbr[3];      // nbr[i] is across the edge opposite v[i]; -1 if none
  bool alive = true;
};

double orient(const Vec2& a, const Vec2& b, const Vec2& c) {
  return (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
}

// > 0 when p is strictly inside the circumcircle of CCW triangle (a,b,c).
double incircle(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& p) {
  const double ax = a.x() - p.x(), ay = a.y() - p.y();
  const double bx = b.x() - p.x(), by = b.y() - p.y();
  const double cx = c.x() - p.x(), cy = c.y() - p.y();
  const double a2 = ax * ax + ay * ay;
  const double b2 = bx * bx + by * by;
  const double c2 = cx * cx + cy * cy;
  return ax * (by * c2 - b2 * cy) - ay * (bx * c2 - b2 * cx) + a2 * (bx * cy - by * cx);
}

class Triangulation {
 public:
  explicit Triangulation(const std::vector<Vec2>& pts) {
    Vec2 lo = pts[0], hi = pts[0];
    for (const auto& p : pts) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    scale_ = std::max((hi - lo).norm(), 1e-300);
    const Vec2 mid = 0.5 * (lo + hi);
    const double R = 20.0 * scale_;
    pts_ = pts;
    super_ = static_cast<int>(pts_.size());
    pts_.push_back(mid + Vec2(-2 * R, -R));
    pts_.push_back(mid + Vec2(2 * R, -R));
    pts_.push_back(mid + Vec2(0, 2 * R));
    Tri t;
    t.v[0] = super_;
    t.v[1] = super_ + 1;
    t.v[2] = super_ + 2;
    t.nbr[0] = t.nbr[1] = t.nbr[2] = -1;
    tris_.push_back(t);
  }

  void insert_all() {
    for (int i = 0; i < super_; ++i) insert(i);
  }

  TriMatrix extract() const {
    std::vector<std::array<int, 3>> out;
    for (const auto& t : tris_) {
      if (!t.alive) continue;
      if (t.v[0] >= super_ || t.v[1] >= super_ || t.v[2] >= super_) continue;
      out.push_back({t.v[0], t.v[1], t.v[2]});
    }
    TriMatrix m(static_cast<int>(out.size()), 3);
    for (int i = 0; i < m.rows(); ++i) {
      m(i, 0) = out[i][0];
      m(i, 1) = out[i][1];
      m(i, 2) = out[i][2];
    }
    return m;
  }

 private:
  std::vector<Vec2> pts_;
  std::vector<Tri> tris_;
  int super_ = 0;
  int last_hint_ = 0;
  double scale_ = 1;

  int locate(const Vec2& p) const {
    int cur = last_hint_;
    if (cur < 0 || cur >= static_cast<int>(tris_.size()) || !tris_[cur].alive) cur = -1;
    if (cur < 0) {
      for (int i = static_cast<int>(tris_.size()) - 1; i >= 0; --i)
        if (tris_[i].alive) {
          cur = i;
          break;
        }
    }
    const double tol = -1e-13 * scale_ * scale_;
    for (int steps = 0; steps < 4 * static_cast<int>(tris_.size()) + 16; ++steps) {
      const Tri& t = tris_[cur];
      int exit_edge = -1;
      for (int e = 0; e < 3; ++e) {
        const Vec2& a = pts_[t.v[(e + 1) % 3]];
        const Vec2& b = pts_[t.v[(e + 2) % 3]];
        if (orient(a, b, p) < tol) {
          exit_edge = e;
          break;
        }
      }
      if (exit_edge < 0) return cur;
      const int nxt = t.nbr[exit_edge];
      if (nxt < 0) return cur;  // hull edge; p numerically outside, keep cur
      cur = nxt;
    }
    // Walk cycled (possible on near-degenerate data): brute-force scan.
    for (int i = 0; i < static_cast<int>(tris_.size()); ++i) {
      if (!tris_[i].alive) continue;
      const Tri& t = tris_[i];
      bool inside = true;
      for (int e = 0; e < 3 && inside; ++e)
        inside = orient(pts_[t.v[(e + 1) % 3]], pts_[t.v[(e + 2) % 3]], p) >= tol;
      if (inside) return i;
    }
    throw std::runtime_error("delaunay: point location failed");
  }

  void insert(int pi) {
    const Vec2& p = pts_[pi];
    const int seed = locate(p);

    // Cavity = connected set of triangles whose circumcircle contains p,
    // grown from the containing triangle. Near-cocircular cases count as
    // outside, which keeps the cavity star-shaped.
    const double tol = 1e-12 * std::pow(scale_, 4);
    std::vector<int> cavity;
    std::vector<char> in_cavity(tris_.size(), 0);
    std::vector<int> stack{seed};
    in_cavity[seed] = 1;
    while (!stack.empty()) {
      const int ti = stack.back();
      stack.pop_back();
      cavity.push_back(ti);
      for (int e = 0; e < 3; ++e) {
        const int nb = tris_[ti].nbr[e];
        if (nb < 0 || in_cavity[nb]) continue;
        const Tri& t = tris_[nb];
        if (incircle(pts_[t.v[0]], pts_[t.v[1]], pts_[t.v[2]], p) > tol) {
          in_cavity[nb] = 1;
          stack.push_back(nb);
        }
      }
    }

    struct BEdge {
      int a, b;   // directed edge, CCW around the cavity
      int outer;  // triangle outside the cavity (-1 on hull)
    };
    std::vector<BEdge> boundary;
    for (int ti : cavity) {
      const Tri& t = tris_[ti];
      for (int e = 0; e < 3; ++e) {
        const int nb = t.nbr[e];
        if (nb >= 0 && in_cavity[nb]) continue;
        boundary.push_back({t.v[(e + 1) % 3], t.v[(e + 2) % 3], nb});
      }
    }
    for (int ti : cavity) tris_[ti].alive = false;

    // Fan p to every boundary edge. The boundary is a closed loop, so each
    // vertex appears exactly once as an edge start and once as an edge end.
    std::unordered_map<int, int> tri_of_start, tri_of_end;
    std::vector<int> fresh;
    fresh.reserve(boundary.size());
    for (const BEdge& be : boundary) {
      Tri t;
      t.v[0] = pi;
      t.v[1] = be.a;
      t.v[2] = be.b;
      t.nbr[0] = be.outer;
      t.nbr[1] = t.nbr[2] = -1;
      const int idx = static_cast<int>(tris_.size());
      tris_.push_back(t);
      fresh.push_back(idx);
      tri_of_start[be.a] = idx;
      tri_of_end[be.b] = idx;
      if (be.outer >= 0) {
        Tri& out = tris_[be.outer];
        for (int e = 0; e < 3; ++e) {
          const int oa = out.v[(e + 1) % 3], ob = out.v[(e + 2) % 3];
          if (oa == be.b && ob == be.a) out.nbr[e] = idx;
        }
      }
    }
    for (std::size_t k = 0; k < boundary.size(); ++k) {
      const BEdge& be = boundary[k];
      Tri& t = tris_[fresh[k]];
      t.nbr[1] = tri_of_start.at(be.b);  // across edge (b, p)
      t.nbr[2] = tri_of_end.at(be.a);    // across edge (p, a)
    }
    last_hint_ = fresh.empty() ? last_hint_ : fresh.front();

    for (int idx : fresh) {
      const Tri& t = tris_[idx];
      if (orient(pts_[t.v[0]], pts_[t.v[1]], pts_[t.v[2]]) <= 0)
        throw std::runtime_error("delaunay: degenerate cavity fan (coincident or collinear input?)");
    }
  }
};

}  // namespace

TriMatrix delaunay_triangulate(const std::vector<Vec2>& points) {
  if (points.size() < 3) throw std::invalid_argument("delaunay: needs at least 3 points");
  Triangulation t(points);
  t.insert_all();
  return t.extract();
}

}  // namespace ellab
