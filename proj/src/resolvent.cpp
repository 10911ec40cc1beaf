#include "ellab/resolvent.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ellab/parallel.hpp"

namespace ellab {

void check_resonance(const SpectralData& sp, double eps) {
  const double shift = sp.lambda1 + eps;
  const double guard = 1e-8 * sp.lambda1;
  const double d1 = std::abs(shift - sp.lambda1);
  const double d2 = std::abs(shift - sp.lambda2);
  if (d1 < guard || d2 < guard)
    throw std::runtime_error("resolvent: shift within " + std::to_string(std::min(d1, d2)) +
                             " of the computed spectrum (guard " + std::to_string(guard) + ")");
}

DiscreteField resolvent(const DiscreteOperators& ops, const SpectralData& sp, double eps,
                        const DiscreteField& w) {
  check_resonance(sp, eps);
  ShiftedSolver solver(ops, sp.lambda1 + eps);
  return resolvent(ops, sp, solver, w);
}

DiscreteField resolvent(const DiscreteOperators& ops, const SpectralData& sp,
                        const ShiftedSolver& solver, const DiscreteField& w) {
  (void)sp;
  const Vec b = -ops.restrict_interior(ops.M_full * w.values);
  return DiscreteField(ops.mesh, ops.extend_zero(solver.solve(b)));
}

std::pair<double, double> ratio_bounds(const DiscreteField& v, const SpectralData& sp) {
  const Mesh& m = *v.mesh;
  double lo = std::numeric_limits<double>::max();
  double hi = -lo;
  for (int i : m.interior_nodes) {
    const double r = v.values(i) / sp.phi1.values(i);
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  return {lo, hi};
}

std::string family_name(LoadFamily f) {
  switch (f) {
    case LoadFamily::AlignedEigen:
      return "aligned";
    case LoadFamily::EigenPlusOrth:
      return "eigen_plus_orth";
    case LoadFamily::Bump:
      return "bump";
    case LoadFamily::SignChanging:
      return "sign_changing";
  }
  return "?";
}

namespace {

Vec bump_values(const Mesh& mesh, const Vec2& center, double radius, double amp) {
  Vec b = Vec::Zero(mesh.num_nodes());
  for (int i = 0; i < mesh.num_nodes(); ++i) {
    Vec2 p = mesh.nodes.row(i);
    if (mesh.dim == 1) p.y() = 0;
    const double d = (p - center).norm();
    if (d < radius) {
      const double c = std::cos(M_PI * d / (2 * radius));
      b(i) = amp * c * c;
    }
  }
  return b;
}

}  // namespace

DiscreteField make_load(LoadSpec& spec, double eps, const DiscreteOperators& ops,
                        const SpectralData& sp) {
  const Mesh& mesh = *ops.mesh;
  Vec w;
  switch (spec.family) {
    case LoadFamily::AlignedEigen:
      w = eps * spec.t * sp.phi1.values;
      break;
    case LoadFamily::EigenPlusOrth:
      w = eps * spec.t * sp.phi1.values + spec.s * sp.phi2.values;
      break;
    case LoadFamily::Bump: {
      if (!(spec.radius > 0)) throw std::invalid_argument("bump load: radius must be positive");
      const double clearance = mesh.boundary_distance(spec.center);
      const bool inside = mesh.dim == 1
                              ? (spec.center.x() > mesh.nodes.col(0).minCoeff() &&
                                 spec.center.x() < mesh.nodes.col(0).maxCoeff())
                              : CellLocator(ops.mesh).locate(spec.center) >= 0;
      if (!inside || clearance < spec.radius)
        throw std::invalid_argument("bump load: support not contained in the domain");
      const Vec b = bump_values(mesh, spec.center, spec.radius, spec.amp);
      const double ibphi = b.dot(ops.M_full * sp.phi1.values);
      if (!(ibphi > 0)) throw std::invalid_argument("bump load: vanishing overlap with phi1");
      w = b * (eps * spec.t / ibphi);
      break;
    }
    case LoadFamily::SignChanging: {
      // Two opposite bumps, combined so the phi1 component cancels exactly,
      // then normalized in L2(M).
      const double diam = mesh.diameter();
      Vec2 centroid = Vec2::Zero();
      for (int i : mesh.interior_nodes) {
        Vec2 p = mesh.nodes.row(i);
        if (mesh.dim == 1) p.y() = 0;
        centroid += p;
      }
      centroid /= static_cast<double>(mesh.num_interior());
      const Vec2 off = mesh.dim == 1 ? Vec2(0.18 * diam, 0) : Vec2(0.16 * diam, 0.08 * diam);
      const double rad = 0.12 * diam;
      const Vec b1 = bump_values(mesh, centroid + off, rad, 1.0);
      const Vec b2 = bump_values(mesh, centroid - off, rad, 1.0);
      const double i1 = b1.dot(ops.M_full * sp.phi1.values);
      const double i2 = b2.dot(ops.M_full * sp.phi1.values);
      if (!(std::abs(i2) > 0)) throw std::invalid_argument("sign-changing load: degenerate bumps");
      Vec chi = b1 - (i1 / i2) * b2;
      const double nrm = std::sqrt(chi.dot(ops.M_full * chi));
      if (!(nrm > 0)) throw std::invalid_argument("sign-changing load: zero orthogonal part");
      chi /= nrm;
      w = eps * spec.t * sp.phi1.values + spec.s * chi;
      break;
    }
  }
  spec.int_wphi = w.dot(ops.M_full * sp.phi1.values);
  spec.l1 = l1_norm(mesh, w);
  spec.lp = lp_norm(mesh, w, spec.p);
  return DiscreteField(ops.mesh, std::move(w));
}

const AmpCell& AmpSweepResult::cell(int i_eps, int i_eta) const {
  return cells[static_cast<std::size_t>(i_eps) * params.eta_grid.size() + i_eta];
}

double AmpSweepResult::excess(int i_eps, int i_eta) const {
  const AmpCell& c = cell(i_eps, i_eta);
  if (c.empty) return 0;
  return std::max(params.a - c.inf_ratio, 0.0) + std::max(c.sup_ratio - params.b, 0.0);
}

AmpSweepResult amp_sweep(const DiscreteOperators& ops, const SpectralData& sp,
                         const AmpSweepParams& params_in) {
  AmpSweepParams params = params_in;
  if (!(params.a > 0 && params.a <= params.b)) throw std::invalid_argument("amp_sweep: need 0 < a <= b");
  if (params.t_values.empty())
    params.t_values = {params.a, 0.5 * (params.a + params.b), params.b};
  const double gap = sp.lambda2 - sp.lambda1;
  for (double e : params.eps_grid) {
    if (!(e > 0)) throw std::invalid_argument("amp_sweep: eps grid entries must be positive magnitudes");
    if (params.sign > 0 && !(e < 0.5 * gap))
      throw std::invalid_argument("amp_sweep: eps must stay below (lambda2-lambda1)/2");
    if (params.sign < 0 && !(e < sp.lambda1))
      throw std::invalid_argument("amp_sweep: |eps| must stay below lambda1");
  }

  const int ne = static_cast<int>(params.eps_grid.size());
  const int nh = static_cast<int>(params.eta_grid.size());
  AmpSweepResult result;
  result.params = params;
  result.cells.assign(static_cast<std::size_t>(ne) * nh, {});
  std::vector<std::vector<AmpLoadRow>> rows_by_eps(ne);

  parallel_for(ne, params.jobs, [&](int ie) {
    const double eps = params.sign * params.eps_grid[ie];
    check_resonance(sp, eps);
    ShiftedSolver solver(ops, sp.lambda1 + eps);
    auto eval_load = [&](LoadSpec& spec) {
      const DiscreteField w = make_load(spec, eps, ops, sp);
      const DiscreteField v = resolvent(ops, sp, solver, w);
      return ratio_bounds(v, sp);
    };
    for (int ih = 0; ih < nh; ++ih) {
      const double eta = params.eta_grid[ih];
      AmpCell cell;
      cell.eps = eps;
      cell.eta = eta;
      cell.inf_ratio = std::numeric_limits<double>::max();
      cell.sup_ratio = -cell.inf_ratio;
      for (LoadFamily fam : params.families) {
        for (double t : params.t_values) {
          LoadSpec spec;
          spec.family = fam;
          spec.t = t;
          spec.p = params.p;
          if (fam == LoadFamily::Bump) {
            const double diam = ops.mesh->diameter();
            Vec2 centroid = Vec2::Zero();
            for (int i : ops.mesh->interior_nodes) {
              Vec2 pnt = ops.mesh->nodes.row(i);
              if (ops.mesh->dim == 1) pnt.y() = 0;
              centroid += pnt;
            }
            centroid /= static_cast<double>(ops.mesh->num_interior());
            spec.center = centroid;
            spec.radius = 0.18 * diam;
          }
          auto admissible = [&](double s) {
            LoadSpec probe = spec;
            probe.s = s;
            make_load(probe, eps, ops, sp);
            return probe.l1 <= eta && probe.lp <= params.norm_cap;
          };
          bool include = false;
          if (fam == LoadFamily::EigenPlusOrth || fam == LoadFamily::SignChanging) {
            // Saturate the norm budget through the orthogonal amplitude.
            if (admissible(0.0)) {
              double lo = 0.0, hi = 1.0;
              int grow = 0;
              while (admissible(hi) && grow++ < 60) {
                lo = hi;
                hi *= 2;
              }
              for (int it = 0; it < 60; ++it) {
                const double mid = 0.5 * (lo + hi);
                (admissible(mid) ? lo : hi) = mid;
              }
              spec.s = lo;
              include = true;
            }
          } else {
            include = admissible(0.0);
          }
          if (!include) continue;
          const auto [lo_r, hi_r] = eval_load(spec);
          cell.inf_ratio = std::min(cell.inf_ratio, lo_r);
          cell.sup_ratio = std::max(cell.sup_ratio, hi_r);
          cell.empty = false;
          ++cell.n_loads;
          AmpLoadRow row;
          row.eps = eps;
          row.eta = eta;
          row.family = fam;
          row.t = t;
          row.s = spec.s;
          row.inf_ratio = lo_r;
          row.sup_ratio = hi_r;
          row.l1 = spec.l1;
          row.lp = spec.lp;
          row.int_wphi = spec.int_wphi;
          rows_by_eps[ie].push_back(row);
        }
      }
      if (cell.empty) {
        cell.inf_ratio = cell.sup_ratio = 0;
      }
      result.cells[static_cast<std::size_t>(ie) * nh + ih] = cell;
    }
  });
  for (auto& rows : rows_by_eps)
    result.rows.insert(result.rows.end(), rows.begin(), rows.end());
  return result;
}

AmpLimitResult amp_limit_check(const DiscreteOperators& ops, const SpectralData& sp,
                               const DiscreteField& f, const std::vector<double>& eps_seq) {
  AmpLimitResult out;
  out.int_fphi = f.values.dot(ops.M_full * sp.phi1.values);
  if (!(out.int_fphi > 0)) throw std::invalid_argument("amp_limit_check: needs int f phi1 > 0");
  for (double eps : eps_seq) {
    const DiscreteField v = resolvent(ops, sp, eps, f);
    double dev = 0;
    for (int i : ops.mesh->interior_nodes)
      dev = std::max(dev, std::abs(eps * v.values(i) / sp.phi1.values(i) - out.int_fphi));
    out.rows.push_back({eps, dev});
  }
  // log-log slope by least squares over rows with meaningful deviation
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (const auto& row : out.rows) {
    if (row.sup_dev <= 1e-14 * out.int_fphi) continue;
    const double x = std::log(row.eps), y = std::log(row.sup_dev);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  out.fitted_slope = n >= 2 ? (n * sxy - sx * sy) / (n * sxx - sx * sx) : 0.0;
  return out;
}

}  // namespace ellab
