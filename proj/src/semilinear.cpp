#include "ellab/semilinear.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

namespace ellab {

namespace {

// Geometric sample lattice for the envelope constants, hitting 1 exactly.
std::vector<double> sample_lattice() {
  std::vector<double> s;
  const int n = 1920;  // 9 decades, ~1% ratio steps
  s.reserve(n + 2);
  s.push_back(0.0);
  for (int i = 0; i <= n; ++i) s.push_back(std::pow(10.0, -6.0 + 9.0 * i / n));
  return s;
}

const std::vector<double>& lattice() {
  static const std::vector<double> l = sample_lattice();
  return l;
}

const std::vector<double> kGradSamples = {0.0, 1.0, 100.0, 1e6};

constexpr double kEnvelopeInflation = 1.1;

double dyadic_floor(double x) {
  if (!(x > 0)) throw std::runtime_error("dyadic_floor: nonpositive input");
  return std::pow(2.0, std::floor(std::log2(x)));
}

}  // namespace

double Nonlinearity::eval(double s, double grad2) const {
  s = std::max(s, 0.0);
  double base = 0;
  switch (family) {
    case GFamily::PowerPlus:
      base = a0 * std::pow(s, r) + b0;
      break;
    case GFamily::LogPower:
      base = a0 * std::log1p(b0 * std::pow(s, r));
      break;
    case GFamily::LogPlus:
      base = std::log1p(a0 * std::pow(s, r)) + b0;
      break;
    case GFamily::BoundedPositive:
      base = g0 * (1 + s / (1 + s));
      break;
  }
  if (grad_kappa > 0) base *= 1 + grad_kappa * grad2 / (1 + grad2);
  return base;
}

void Nonlinearity::validate_samples() const {
  switch (family) {
    case GFamily::PowerPlus:
      if (!(a0 > 0) || !(r > 0 && r < 1) || b0 < 0)
        throw std::invalid_argument("powerplus: needs a0 > 0, 0 < r < 1, b0 >= 0");
      break;
    case GFamily::LogPower:
      if (!(a0 > 0) || !(b0 > 0) || !(r > 0 && r < 1))
        throw std::invalid_argument("logpower: needs a0, b0 > 0 and 0 < r < 1");
      break;
    case GFamily::LogPlus:
      if (a0 < 0 || !(b0 > 0) || !(r > 0))
        throw std::invalid_argument("logplus: needs a0 >= 0, b0 > 0, r > 0");
      break;
    case GFamily::BoundedPositive:
      if (!(g0 > 0)) throw std::invalid_argument("bounded: needs g0 > 0");
      break;
  }
  if (grad_kappa < 0) throw std::invalid_argument("gradient factor: kappa must be >= 0");
  const auto& lat = lattice();
  for (double q : kGradSamples) {
    double prev = -1;
    for (double s : lat) {
      const double v = eval(s, q);
      if (s > 0 && !(v > 0)) throw std::invalid_argument(describe() + ": not positive at s > 0");
      if (v + 1e-12 * std::abs(v) < prev)
        throw std::invalid_argument(describe() + ": not non-decreasing in s");
      prev = v;
    }
  }
  // Finite-sample proxy for g(s)/s -> +inf (s->0) and -> 0 (s->inf).
  const double low = eval(1e-6) / 1e-6;
  const double high = eval(1e3) / 1e3;
  if (!(low > 1e3 * high))
    throw std::invalid_argument(describe() + ": envelope limits violated on the sample lattice");
}

Nonlinearity Nonlinearity::parse(const std::string& text) {
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  Nonlinearity g;
  if (kind == "powerplus")
    g.family = GFamily::PowerPlus;
  else if (kind == "logpower")
    g.family = GFamily::LogPower;
  else if (kind == "logplus")
    g.family = GFamily::LogPlus;
  else if (kind == "bounded")
    g.family = GFamily::BoundedPositive;
  else
    throw std::invalid_argument("unknown nonlinearity '" + kind + "'");
  if (colon != std::string::npos) {
    std::stringstream ss(text.substr(colon + 1));
    std::string kv;
    while (std::getline(ss, kv, ',')) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw std::invalid_argument("nonlinearity: expected key=value");
      const std::string key = kv.substr(0, eq);
      const double val = std::stod(kv.substr(eq + 1));
      if (key == "a0")
        g.a0 = val;
      else if (key == "b0")
        g.b0 = val;
      else if (key == "r")
        g.r = val;
      else if (key == "g0")
        g.g0 = val;
      else if (key == "grad")
        g.grad_kappa = val;
      else
        throw std::invalid_argument("nonlinearity: unknown key '" + key + "'");
    }
  }
  g.validate_samples();
  return g;
}

std::string Nonlinearity::describe() const {
  std::ostringstream os;
  switch (family) {
    case GFamily::PowerPlus:
      os << "powerplus:a0=" << a0 << ",r=" << r << ",b0=" << b0;
      break;
    case GFamily::LogPower:
      os << "logpower:a0=" << a0 << ",b0=" << b0 << ",r=" << r;
      break;
    case GFamily::LogPlus:
      os << "logplus:a0=" << a0 << ",r=" << r << ",b0=" << b0;
      break;
    case GFamily::BoundedPositive:
      os << "bounded:g0=" << g0;
      break;
  }
  if (grad_kappa > 0) os << ",grad=" << grad_kappa;
  return os.str();
}

namespace {

double envelope_max(const Nonlinearity& g, double slope) {
  double best = -std::numeric_limits<double>::max();
  for (double q : kGradSamples)
    for (double s : lattice()) best = std::max(best, g.eval(s, q) - slope * s);
  return best;
}

// Largest lattice point s* such that g >= slope*s holds at every lattice
// point up to s*.
double threshold_s0(const Nonlinearity& g, double slope) {
  double s0 = 0;
  for (double s : lattice()) {
    if (s == 0) continue;
    bool ok = true;
    for (double q : kGradSamples) ok = ok && g.eval(s, q) >= slope * s;
    if (!ok) break;
    s0 = s;
  }
  return s0;
}

Vec nodal_g(const Nonlinearity& g, const Mesh& mesh, const Vec& u) {
  Vec out(mesh.num_nodes());
  if (g.gradient_dependent()) {
    const NodeMatrix grads = nodal_gradients(mesh, u);
    for (int i = 0; i < mesh.num_nodes(); ++i)
      out(i) = g.eval(u(i), grads.row(i).squaredNorm());
  } else {
    for (int i = 0; i < mesh.num_nodes(); ++i) out(i) = g.eval(u(i));
  }
  return out;
}

struct IterationOutcome {
  Vec u;
  int iterations = 0;
  double final_update = 0;
  double final_breach = 0;
  double max_breach = 0;
  bool converged = false;
  double omega = 0;
};

// Damped Picard iteration v <- (1-omega) v + omega T_eps(delta g(v)), clamped
// to [lo, hi] with the raw breach recorded.
IterationOutcome damped_picard(const DiscreteOperators& ops, const SpectralData& sp,
                               const Nonlinearity& g, double eps, double delta, Vec v,
                               const Vec& lo, const Vec& hi, const SolveOptions& opts) {
  check_resonance(sp, eps);
  ShiftedSolver solver(ops, sp.lambda1 + eps);
  const Mesh& mesh = *ops.mesh;
  IterationOutcome out;
  double omega = opts.omega;
  double prev_update = std::numeric_limits<double>::max();
  int increases = 0;
  for (int it = 1; it <= opts.max_iterations; ++it) {
    const Vec gv = nodal_g(g, mesh, v);
    const Vec rhs = -ops.restrict_interior(ops.M_full * (delta * gv));
    const Vec t = ops.extend_zero(solver.solve(rhs));
    Vec raw = (1 - omega) * v + omega * t;
    double breach = 0;
    for (int i = 0; i < mesh.num_nodes(); ++i)
      breach = std::max({breach, lo(i) - raw(i), raw(i) - hi(i)});
    out.max_breach = std::max(out.max_breach, breach);
    out.final_breach = breach;
    Vec clamped = raw.cwiseMax(lo).cwiseMin(hi);
    const double update = (clamped - v).cwiseAbs().maxCoeff();
    v = std::move(clamped);
    if (opts.observer) opts.observer(it, v);
    out.iterations = it;
    out.final_update = update;
    const double scale = std::max(v.cwiseAbs().maxCoeff(), 1e-300);
    if (update <= opts.update_tol * scale) {
      out.converged = true;
      break;
    }
    if (update > prev_update) {
      if (++increases >= 2) {
        omega = std::max(omega / 2, 1.0 / 64);
        increases = 0;
      }
    } else {
      increases = 0;
    }
    prev_update = update;
  }
  out.u = std::move(v);
  out.omega = omega;
  return out;
}

}  // namespace

NegativeConstants build_constants_negative(const Nonlinearity& g, const ProblemParams& prm,
                                           const DiscreteOperators& ops, const SpectralData& sp) {
  if (!(prm.eps < 0 && prm.delta < 0))
    throw std::invalid_argument("build_constants_negative: needs eps < 0 and delta < 0");
  g.validate_samples();
  NegativeConstants nc;
  const double ratio = std::abs(prm.eps) / std::abs(prm.delta);
  nc.C_env = envelope_max(g, 0.5 * ratio);
  nc.C = std::max(kEnvelopeInflation * std::max(nc.C_env, 0.0), 1e-12);
  nc.s0 = threshold_s0(g, ratio);
  if (!(nc.s0 > 0))
    throw std::runtime_error("build_constants_negative: no positive s0 on the sample lattice "
                             "(nonlinearity violates the superlinearity hypothesis numerically)");

  // psi solves Delta psi + (lambda1 + eps/2) psi = delta C  (< 0).
  ShiftedSolver solver(ops, sp.lambda1 + prm.eps / 2);
  const Vec rhs = -ops.restrict_interior(ops.M_full * Vec::Constant(ops.mesh->num_nodes(), prm.delta * nc.C));
  nc.psi = DiscreteField(ops.mesh, ops.extend_zero(solver.solve(rhs)));
  for (int i : ops.mesh->interior_nodes)
    if (!(nc.psi.values(i) > 0))
      throw std::runtime_error("build_constants_negative: psi not positive in the interior");

  double sigma = dyadic_floor(nc.s0 / sp.phi1_sup);
  auto fits = [&](double s) {
    if (s * sp.phi1_sup > nc.s0) return false;
    for (int i = 0; i < ops.mesh->num_nodes(); ++i)
      if (s * sp.phi1.values(i) > nc.psi.values(i)) return false;
    return true;
  };
  int guard = 0;
  while (!fits(sigma) && guard++ < 200) sigma /= 2;
  if (guard >= 200) throw std::runtime_error("build_constants_negative: sigma search failed");
  nc.sigma = sigma;
  return nc;
}

PositiveConstants build_constants_positive(const Nonlinearity& g, double A,
                                           const DiscreteOperators& ops, const SpectralData& sp) {
  if (!(A >= 1)) throw std::invalid_argument("build_constants_positive: needs A >= 1");
  g.validate_samples();
  PositiveConstants pc;
  const double c1 = 1.0 / (4 * A * sp.phi1_l1 * sp.phi1_sup);
  pc.C_env = envelope_max(g, c1);
  pc.C = std::max(kEnvelopeInflation * std::max(pc.C_env, 0.0), 1e-12);
  pc.s0 = threshold_s0(g, 2 * A);
  if (!(pc.s0 > 0))
    throw std::runtime_error("build_constants_positive: no positive s0' on the sample lattice");

  // beta doubling until A C' |phi1|_L1 + beta/(4|phi1|_inf) <= beta/(2|phi1|_inf).
  double beta = 1;
  int guard = 0;
  while (A * pc.C * sp.phi1_l1 + beta / (4 * sp.phi1_sup) > beta / (2 * sp.phi1_sup) &&
         guard++ < 200)
    beta *= 2;
  if (guard >= 200) throw std::runtime_error("build_constants_positive: beta search failed");
  pc.beta = beta;
  pc.varsigma = dyadic_floor(std::min(pc.s0, beta / 4) / sp.phi1_sup);
  const double area = ops.mesh->total_area();
  pc.norm_cap = (pc.C + beta * c1) * std::pow(area, 1.0 / pc.p);
  pc.a = 2 * pc.varsigma;
  pc.b = beta / (2 * sp.phi1_sup);
  pc.eps0 = std::min(sp.lambda2 - sp.lambda1, 1.0 / A);
  return pc;
}

namespace {

SolveReport finish_report(const DiscreteOperators& ops, const SpectralData& sp,
                          const Nonlinearity& g, const ProblemParams& prm,
                          IterationOutcome&& out, DiscreteField box_lo, DiscreteField box_hi,
                          const SolveOptions& opts, ReportConstants constants) {
  SolveReport rep;
  rep.u = DiscreteField(ops.mesh, std::move(out.u));
  rep.iterations = out.iterations;
  rep.final_update = out.final_update;
  rep.box_lo = std::move(box_lo);
  rep.box_hi = std::move(box_hi);
  rep.box_violation = out.final_breach;
  rep.max_transient_violation = out.max_breach;
  rep.converged = out.converged;
  rep.omega_final = out.omega;
  rep.constants = constants;
  rep.theta = rep.u.values.dot(ops.M_full * sp.phi1.values);
  rep.identity_residual = identity_residual(rep.u, g, prm, ops, sp);
  const double scale = std::max(rep.u.max_abs(), 1e-300);
  rep.box_escaped = rep.box_violation > 1e-6 * scale;
  if (opts.strict) {
    if (!rep.converged)
      throw SolveFailure(SolveFailure::Kind::IterationCap,
                         "fixed-point iteration cap exceeded (last update " +
                             std::to_string(rep.final_update) + ")");
    if (rep.box_escaped)
      throw SolveFailure(SolveFailure::Kind::BoxEscape,
                         "converged iterate escapes the confinement box by " +
                             std::to_string(rep.box_violation));
  }
  return rep;
}

}  // namespace

SolveReport solve_negative(const DiscreteOperators& ops, const SpectralData& sp,
                           const Nonlinearity& g, const ProblemParams& prm,
                           const SolveOptions& opts) {
  if (!(prm.eps < 0 && prm.delta < 0))
    throw std::invalid_argument("solve_negative: needs eps < 0 and delta < 0");
  const NegativeConstants nc = build_constants_negative(g, prm, ops, sp);
  const Vec lo = nc.sigma * sp.phi1.values;
  const Vec& hi = nc.psi.values;
  Vec start = opts.start == SolveOptions::Start::BoxLower ? lo : hi;
  IterationOutcome out =
      damped_picard(ops, sp, g, prm.eps, prm.delta, std::move(start), lo, hi, opts);
  ReportConstants rc;
  rc.C = nc.C;
  rc.s0 = nc.s0;
  rc.sigma = nc.sigma;
  return finish_report(ops, sp, g, prm, std::move(out), DiscreteField(ops.mesh, lo), nc.psi,
                       opts, rc);
}

SolveReport solve_positive(const DiscreteOperators& ops, const SpectralData& sp,
                           const Nonlinearity& g, const ProblemParams& prm,
                           const SolveOptions& opts, const PositiveConstants* precomputed) {
  if (!(prm.eps > 0 && prm.delta > 0))
    throw std::invalid_argument("solve_positive: needs eps > 0 and delta > 0");
  PositiveConstants pc = precomputed ? *precomputed : build_constants_positive(g, prm.A, ops, sp);
  const double eps0 = opts.eps0_override.value_or(pc.eps0);
  if (!(prm.eps <= eps0))
    throw std::invalid_argument("solve_positive: eps exceeds the empirical eps0 ceiling");
  if (opts.enforce_band &&
      !(prm.delta >= prm.eps / prm.A && prm.delta <= prm.A * prm.eps))
    throw std::invalid_argument("solve_positive: delta outside [eps/A, A eps]");
  const Vec lo = pc.varsigma * sp.phi1.values;
  const Vec hi = Vec::Constant(ops.mesh->num_nodes(), pc.beta);
  IterationOutcome out = damped_picard(ops, sp, g, prm.eps, prm.delta, Vec(lo), lo, hi, opts);
  ReportConstants rc;
  rc.C = pc.C;
  rc.s0 = pc.s0;
  rc.beta = pc.beta;
  rc.varsigma = pc.varsigma;
  rc.eps0 = eps0;
  return finish_report(ops, sp, g, prm, std::move(out), DiscreteField(ops.mesh, lo),
                       DiscreteField(ops.mesh, hi), opts, rc);
}

double identity_residual(const DiscreteField& u, const Nonlinearity& g, const ProblemParams& prm,
                         const DiscreteOperators& ops, const SpectralData& sp) {
  const Vec gv = nodal_g(g, *ops.mesh, u.values);
  const double lhs = prm.eps * u.values.dot(ops.M_full * sp.phi1.values);
  const double rhs = prm.delta * gv.dot(ops.M_full * sp.phi1.values);
  return std::abs(lhs - rhs);
}

double limit_coefficient(const Nonlinearity& g, double c, const DiscreteOperators& ops,
                         const SpectralData& sp) {
  if (!g.p_independent())
    throw std::invalid_argument("limit_coefficient: g must not depend on the gradient");
  if (!(c > 0)) throw std::invalid_argument("limit_coefficient: needs c > 0");
  // Sampled monotonicity of g(s)/s (the uniqueness hypothesis).
  double prev = std::numeric_limits<double>::max();
  for (double s : lattice()) {
    if (s == 0) continue;
    const double q = g.eval(s) / s;
    if (q > prev * (1 + 1e-10))
      throw std::invalid_argument("limit_coefficient: g(s)/s not decreasing on the lattice");
    prev = q;
  }
  auto F = [&](double B) {
    Vec gv(ops.mesh->num_nodes());
    for (int i = 0; i < ops.mesh->num_nodes(); ++i) gv(i) = g.eval(B * sp.phi1.values(i));
    return c * gv.dot(ops.M_full * sp.phi1.values) - B;  // |phi1|_M^2 = 1
  };
  double lo = 1e-8, hi = 1e8;
  double flo = F(lo), fhi = F(hi);
  if (!(flo > 0 && fhi < 0))
    throw std::runtime_error("limit_coefficient: no sign change on the bracket [1e-8, 1e8]");
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = F(mid);
    if (fm > 0)
      lo = mid;
    else
      hi = mid;
    if (hi - lo <= 1e-14 * hi) break;
  }
  const double B = 0.5 * (lo + hi);
  if (std::abs(F(B)) > 1e-10 * std::max(1.0, B))
    throw std::runtime_error("limit_coefficient: bisection residual too large");
  return B;
}

}  // namespace ellab
