#include "ellab/concavity.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <stdexcept>

namespace ellab {

Transform Transform::parse(const std::string& text) {
  if (text == "log") return Transform::log();
  if (text == "identity" || text == "id") return Transform::identity();
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  if (colon != std::string::npos) {
    const double q = std::stod(text.substr(colon + 1));
    if (kind == "pow") return Transform::power(q);
    if (kind == "neglogpow") return Transform::neglogpow(q);
  }
  throw std::invalid_argument("transform: expected log|pow:q|neglogpow:q|identity");
}

std::string Transform::name() const {
  switch (kind) {
    case Kind::Log:
      return "log";
    case Kind::Power:
      return "pow:" + std::to_string(q);
    case Kind::NegLogPow:
      return "neglogpow:" + std::to_string(q);
    case Kind::Identity:
      return "identity";
  }
  return "?";
}

Vec apply_transform(const DiscreteField& u, const Transform& t) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  Vec v(u.values.size());
  const double umax = u.values.maxCoeff();
  for (Eigen::Index i = 0; i < u.values.size(); ++i) {
    const double s = u.values(i);
    switch (t.kind) {
      case Transform::Kind::Log:
        v(i) = s > 0 ? std::log(s) : nan;
        break;
      case Transform::Kind::Power:
        v(i) = s >= 0 ? std::pow(s, t.q) : nan;
        break;
      case Transform::Kind::NegLogPow: {
        const double w = s > 0 && umax > 0 ? s / umax : -1;
        v(i) = w > 0 && w <= 1 ? -std::pow(-std::log(w), t.q) : nan;
        break;
      }
      case Transform::Kind::Identity:
        v(i) = s;
        break;
    }
  }
  return v;
}

namespace {

std::vector<std::vector<int>> node_adjacency(const Mesh& m) {
  std::vector<std::set<int>> adj(m.num_nodes());
  if (m.dim == 1) {
    for (int c = 0; c < m.segs.rows(); ++c) {
      adj[m.segs(c, 0)].insert(m.segs(c, 1));
      adj[m.segs(c, 1)].insert(m.segs(c, 0));
    }
  } else {
    for (int c = 0; c < m.tris.rows(); ++c)
      for (int e = 0; e < 3; ++e) {
        adj[m.tris(c, e)].insert(m.tris(c, (e + 1) % 3));
        adj[m.tris(c, (e + 1) % 3)].insert(m.tris(c, e));
      }
  }
  std::vector<std::vector<int>> out(m.num_nodes());
  for (int i = 0; i < m.num_nodes(); ++i) out[i].assign(adj[i].begin(), adj[i].end());
  return out;
}

std::vector<int> two_ring(const std::vector<std::vector<int>>& adj, int center) {
  std::set<int> ring(adj[center].begin(), adj[center].end());
  for (int j : adj[center]) ring.insert(adj[j].begin(), adj[j].end());
  ring.erase(center);
  return {ring.begin(), ring.end()};
}

double mesh_h(const Mesh& m) {
  double h = 0;
  for (int c = 0; c < m.num_cells(); ++c) h = std::max(h, m.cell_diameter(c));
  return h;
}

}  // namespace

HessianField hessian_field(const DiscreteField& u, const Transform& t, double d0) {
  const Mesh& m = *u.mesh;
  const Vec v = apply_transform(u, t);
  const Vec dist = m.node_boundary_distance();
  const auto adj = node_adjacency(m);
  const double h = mesh_h(m);
  const int dim = m.dim;
  const int nparam = dim == 1 ? 2 : 5;

  HessianField out;
  for (int i : m.interior_nodes) {
    if (dist(i) < d0) continue;
    const std::vector<int> ring = two_ring(adj, i);
    if (static_cast<int>(ring.size()) < nparam || !std::isfinite(v(i))) {
      ++out.dropped;
      continue;
    }
    bool finite = true;
    for (int j : ring) finite = finite && std::isfinite(v(j));
    if (!finite) {
      ++out.dropped;
      continue;
    }
    Mat A(static_cast<int>(ring.size()), nparam);
    Vec rhs(static_cast<int>(ring.size()));
    Vec weights(static_cast<int>(ring.size()));
    double vabs = std::abs(v(i));
    for (std::size_t k = 0; k < ring.size(); ++k) {
      const int j = ring[k];
      const double dx = m.nodes(j, 0) - m.nodes(i, 0);
      const double dy = dim == 1 ? 0.0 : m.nodes(j, 1) - m.nodes(i, 1);
      const double w = 1.0 / std::max(std::hypot(dx, dy), 1e-300);
      weights(static_cast<int>(k)) = w;
      if (dim == 1) {
        A.row(static_cast<int>(k)) << w * dx, w * dx * dx / 2;
      } else {
        A.row(static_cast<int>(k)) << w * dx, w * dy, w * dx * dx / 2, w * dx * dy,
            w * dy * dy / 2;
      }
      rhs(static_cast<int>(k)) = w * (v(j) - v(i));
      vabs = std::max(vabs, std::abs(v(j)));
    }
    Eigen::ColPivHouseholderQR<Mat> qr(A);
    qr.setThreshold(1e-10);
    if (qr.rank() < nparam) {
      ++out.dropped;
      continue;
    }
    const Vec theta = qr.solve(rhs);
    // Unweighted rms misfit against the local field magnitude.
    const Vec misfit = ((A * theta - rhs).array() / weights.array()).matrix();
    const double resid = misfit.norm() / std::sqrt(static_cast<double>(ring.size()));
    const double scale = std::max(vabs, 1e-12);
    if (resid > 10 * h * h * scale) {
      ++out.dropped;
      continue;
    }
    double hxx, hxy, hyy, lam_max;
    if (dim == 1) {
      hxx = theta(1);
      hxy = hyy = 0;
      lam_max = hxx;
    } else {
      hxx = theta(2);
      hxy = theta(3);
      hyy = theta(4);
      const double mean = 0.5 * (hxx + hyy);
      const double rad = std::hypot(0.5 * (hxx - hyy), hxy);
      lam_max = mean + rad;
    }
    out.nodes.push_back(i);
    out.max_eig.push_back(lam_max);
    out.hxx.push_back(hxx);
    out.hxy.push_back(hxy);
    out.hyy.push_back(hyy);
    out.fit_residual.push_back(resid);
  }
  if (out.nodes.empty())
    throw std::runtime_error("hessian_field: no admissible nodes (d0 too large for this mesh?)");
  out.hess_max_eig = *std::max_element(out.max_eig.begin(), out.max_eig.end());
  return out;
}

double concavity_function_scan(const DiscreteField& u, const Transform& t, double d0,
                               int n_triples, const std::vector<double>& mu_grid,
                               std::uint64_t seed) {
  const Mesh& m = *u.mesh;
  const Vec v = apply_transform(u, t);
  CellLocator locator(u.mesh);
  std::mt19937_64 rng(seed);

  const double x0 = m.nodes.col(0).minCoeff(), x1 = m.nodes.col(0).maxCoeff();
  const double y0 = m.dim == 1 ? 0.0 : m.nodes.col(1).minCoeff();
  const double y1 = m.dim == 1 ? 0.0 : m.nodes.col(1).maxCoeff();
  std::uniform_real_distribution<double> ux(x0, x1), uy(y0, y1);

  const auto bedges = m.boundary_edges();
  auto boundary_dist = [&](const Vec2& p) {
    double best = std::numeric_limits<double>::max();
    if (m.dim == 1) {
      for (const auto& [a, b] : bedges) {
        (void)b;
        best = std::min(best, std::abs(p.x() - m.nodes(a, 0)));
      }
      return best;
    }
    for (const auto& [a, b] : bedges) {
      const Vec2 s0 = m.nodes.row(a), s1 = m.nodes.row(b);
      const Vec2 e = s1 - s0;
      double tt = e.squaredNorm() > 0 ? (p - s0).dot(e) / e.squaredNorm() : 0.0;
      tt = std::clamp(tt, 0.0, 1.0);
      best = std::min(best, (p - (s0 + tt * e)).norm());
    }
    return best;
  };

  auto draw_admissible = [&]() {
    for (int tries = 0; tries < 100000; ++tries) {
      const Vec2 p(ux(rng), m.dim == 1 ? 0.0 : uy(rng));
      if (locator.locate(p) < 0) continue;
      if (boundary_dist(p) < d0) continue;
      return p;
    }
    throw std::runtime_error("concavity scan: cannot sample the admissible region");
  };
  auto eval = [&](const Vec2& p) {
    const double val = locator.eval(v, p);
    if (!std::isfinite(val))
      throw std::runtime_error("concavity scan: transform undefined inside admissible region");
    return val;
  };

  double worst = -std::numeric_limits<double>::max();
  for (int k = 0; k < n_triples; ++k) {
    const Vec2 x = draw_admissible();
    const Vec2 y = draw_admissible();
    const double vx = eval(x), vy = eval(y);
    for (double mu : mu_grid) {
      const Vec2 z = mu * x + (1 - mu) * y;
      // Distance to a convex boundary is concave along segments, so z stays
      // admissible automatically; the locate guard covers mesh edge cases.
      if (locator.locate(z) < 0) continue;
      const double c = mu * vx + (1 - mu) * vy - eval(z);
      worst = std::max(worst, c);
    }
  }
  return worst;
}

namespace {

double polygon_area(std::vector<Vec2> pts) {
  // Convex hull (monotone chain), then shoelace.
  if (pts.size() < 3) return 0;
  std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  auto cross = [](const Vec2& o, const Vec2& a, const Vec2& b) {
    return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
  };
  std::vector<Vec2> hull(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  const std::size_t lower = k + 1;
  for (std::size_t i = pts.size() - 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k > 0 ? k - 1 : 0);
  double area = 0;
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const Vec2& a = hull[i];
    const Vec2& b = hull[(i + 1) % hull.size()];
    area += a.x() * b.y() - a.y() * b.x();
  }
  return 0.5 * std::abs(area);
}

// Area of {P1 >= level} within one triangle by edge clipping.
double clipped_area(const Vec2& p0, const Vec2& p1, const Vec2& p2, double v0, double v1,
                    double v2, double level) {
  const Vec2 pts[3] = {p0, p1, p2};
  const double vals[3] = {v0, v1, v2};
  std::vector<Vec2> poly;
  for (int e = 0; e < 3; ++e) {
    const int f = (e + 1) % 3;
    const bool in_e = vals[e] >= level;
    if (in_e) poly.push_back(pts[e]);
    const bool in_f = vals[f] >= level;
    if (in_e != in_f) {
      const double tt = (level - vals[e]) / (vals[f] - vals[e]);
      poly.push_back(pts[e] + tt * (pts[f] - pts[e]));
    }
  }
  if (poly.size() < 3) return 0;
  double area = 0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % poly.size()];
    area += a.x() * b.y() - a.y() * b.x();
  }
  return 0.5 * std::abs(area);
}

}  // namespace

double quasi_concavity_check(const DiscreteField& u, int levels) {
  const Mesh& m = *u.mesh;
  std::vector<double> interior_vals;
  for (int i : m.interior_nodes) interior_vals.push_back(u.values(i));
  std::sort(interior_vals.begin(), interior_vals.end());
  double worst = -std::numeric_limits<double>::max();
  bool any = false;
  for (int k = 1; k <= levels; ++k) {
    const double level =
        interior_vals[static_cast<std::size_t>(interior_vals.size() * k / (levels + 1))];
    if (m.dim == 1) {
      double lo = std::numeric_limits<double>::max(), hi = -lo;
      double measured = 0;
      int count = 0;
      for (int i = 0; i < m.num_nodes(); ++i)
        if (u.values(i) > level) {
          lo = std::min(lo, m.nodes(i, 0));
          hi = std::max(hi, m.nodes(i, 0));
          ++count;
        }
      if (count < 2) continue;
      for (int c = 0; c < m.segs.rows(); ++c) {
        const double a = u.values(m.segs(c, 0)), b = u.values(m.segs(c, 1));
        const double len = m.cell_area(c);
        const double amax = std::max(a, b), amin = std::min(a, b);
        if (amin >= level)
          measured += len;
        else if (amax > level)
          measured += len * (amax - level) / (amax - amin);
      }
      const double hull = hi - lo;
      if (hull <= 0) continue;
      worst = std::max(worst, (hull - measured) / hull);
      any = true;
      continue;
    }
    std::vector<Vec2> super;
    for (int i = 0; i < m.num_nodes(); ++i)
      if (u.values(i) > level) super.push_back(m.nodes.row(i).transpose());
    if (super.size() < 3) continue;
    const double hull = polygon_area(super);
    if (hull <= 0) continue;
    double measured = 0;
    for (int c = 0; c < m.tris.rows(); ++c)
      measured += clipped_area(m.nodes.row(m.tris(c, 0)), m.nodes.row(m.tris(c, 1)),
                               m.nodes.row(m.tris(c, 2)), u.values(m.tris(c, 0)),
                               u.values(m.tris(c, 1)), u.values(m.tris(c, 2)), level);
    worst = std::max(worst, (hull - measured) / hull);
    any = true;
  }
  if (!any) throw std::runtime_error("quasi_concavity_check: all level sets empty");
  return worst;
}

ConcavityReport concavity_report(const DiscreteField& u, const Transform& t, double d0,
                                 int n_triples, std::uint64_t seed) {
  ConcavityReport rep;
  rep.transform = t;
  rep.d0 = d0;
  const HessianField hf = hessian_field(u, t, d0);
  rep.hess_max_eig = hf.hess_max_eig;
  rep.rho = std::max(0.0, -hf.hess_max_eig);
  rep.n_admissible = static_cast<int>(hf.nodes.size());
  rep.dropped = hf.dropped;

  const std::vector<double> mu_grid = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  rep.cf_worst = concavity_function_scan(u, t, d0, n_triples, mu_grid, seed);

  // Recovery-error allowances: first-order Hessian error on P1 data scales
  // with h times the field's own curvature scale; the scan tolerance is a
  // fraction of the oscillation over the admissible region.
  const double h = mesh_h(*u.mesh);
  std::vector<double> fro;
  fro.reserve(hf.nodes.size());
  for (std::size_t k = 0; k < hf.nodes.size(); ++k)
    fro.push_back(std::sqrt(hf.hxx[k] * hf.hxx[k] + 2 * hf.hxy[k] * hf.hxy[k] +
                            hf.hyy[k] * hf.hyy[k]));
  std::nth_element(fro.begin(), fro.begin() + fro.size() / 2, fro.end());
  const double curvature_scale = std::max(fro[fro.size() / 2], 1e-12);
  rep.tol_H = 5 * h * curvature_scale;

  const Vec v = apply_transform(u, t);
  double vmin = std::numeric_limits<double>::max(), vmax = -vmin;
  for (int i : hf.nodes) {
    vmin = std::min(vmin, v(i));
    vmax = std::max(vmax, v(i));
  }
  rep.tol_C = 1e-3 * std::max(vmax - vmin, 1e-12);

  rep.levels_checked = 8;
  rep.level_deficit = quasi_concavity_check(u, rep.levels_checked);
  rep.concave = rep.hess_max_eig <= rep.tol_H && rep.cf_worst <= rep.tol_C;
  return rep;
}

}  // namespace ellab
