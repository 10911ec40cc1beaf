// Test-side oracles, independent of the library's solution paths: Bessel-zero
// bisection, adaptive Simpson quadrature, and an RK4 shooting solver for the
// 1D semilinear boundary value problem.
#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace oracles {

inline double bisect(const std::function<double(double)>& f, double lo, double hi) {
  double flo = f(lo), fhi = f(hi);
  if (flo * fhi > 0) throw std::runtime_error("bisect: no sign change");
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm > 0) == (flo > 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
      fhi = fm;
    }
  }
  return 0.5 * (lo + hi);
}

// First positive zero of J_nu, bracketed by standard intervals.
inline double bessel_zero(int nu) {
  auto f = [nu](double x) { return std::cyl_bessel_j(nu, x); };
  if (nu == 0) return bisect(f, 2.0, 3.0);
  if (nu == 1) return bisect(f, 3.0, 4.5);
  throw std::runtime_error("bessel_zero: unsupported order");
}

inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double tol = 1e-12, int depth = 30) {
  auto simpson = [&f](double lo, double hi) {
    return (hi - lo) / 6 * (f(lo) + 4 * f(0.5 * (lo + hi)) + f(hi));
  };
  std::function<double(double, double, double, double, int)> rec =
      [&](double lo, double hi, double whole, double eps, int d) -> double {
    const double mid = 0.5 * (lo + hi);
    const double left = simpson(lo, mid), right = simpson(mid, hi);
    if (d <= 0 || std::abs(left + right - whole) <= 15 * eps)
      return left + right + (left + right - whole) / 15;
    return rec(lo, mid, left, eps / 2, d - 1) + rec(mid, hi, right, eps / 2, d - 1);
  };
  return rec(a, b, simpson(a, b), tol, depth);
}

// Shooting oracle for u'' + (lambda1 + eps) u = delta g(u) on (0, L) with
// u(0) = u(L) = 0, u > 0. Returns the RK4 trajectory on a uniform fine grid.
struct ShootingSolution {
  std::vector<double> x, u;
  double slope0 = 0;

  double eval(double xx) const {
    const double hx = x[1] - x[0];
    const double t = (xx - x.front()) / hx;
    const int i = std::max(0, std::min(static_cast<int>(t), static_cast<int>(x.size()) - 2));
    const double f = t - i;
    return (1 - f) * u[i] + f * u[i + 1];
  }
};

inline ShootingSolution shoot(double lambda1, double eps, double delta,
                              const std::function<double(double)>& g, double L, double slope_lo,
                              double slope_hi, int steps = 20000) {
  auto integrate = [&](double s, std::vector<double>* traj) {
    const double h = L / steps;
    double u = 0, v = s;
    if (traj) traj->push_back(u);
    auto acc = [&](double uu) { return -(lambda1 + eps) * uu + delta * g(std::max(uu, 0.0)); };
    for (int i = 0; i < steps; ++i) {
      const double k1u = v, k1v = acc(u);
      const double k2u = v + 0.5 * h * k1v, k2v = acc(u + 0.5 * h * k1u);
      const double k3u = v + 0.5 * h * k2v, k3v = acc(u + 0.5 * h * k2u);
      const double k4u = v + h * k3v, k4v = acc(u + h * k3u);
      u += h / 6 * (k1u + 2 * k2u + 2 * k3u + k4u);
      v += h / 6 * (k1v + 2 * k2v + 2 * k3v + k4v);
      if (traj) traj->push_back(u);
    }
    return u;
  };
  const double s = bisect([&](double sl) { return integrate(sl, nullptr); }, slope_lo, slope_hi);
  ShootingSolution sol;
  sol.slope0 = s;
  integrate(s, &sol.u);
  sol.x.resize(sol.u.size());
  for (std::size_t i = 0; i < sol.x.size(); ++i)
    sol.x[i] = L * static_cast<double>(i) / steps;
  return sol;
}

// Least-squares slope of y against x.
inline double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace oracles
