#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ellab/assemble.hpp"
#include "ellab/spectral.hpp"

namespace ellab {

// Solution v of  Delta v + (lambda1 + eps) v = w,  v = 0 on the boundary,
// i.e. (K - (lambda1+eps) M) v = -M w on interior nodes. Rejects shifts
// within 1e-8*lambda1 of the computed eigenvalues.
DiscreteField resolvent(const DiscreteOperators& ops, const SpectralData& sp, double eps,
                        const DiscreteField& w);

// Same, reusing a factorization of (K - (lambda1+eps) M).
DiscreteField resolvent(const DiscreteOperators& ops, const SpectralData& sp,
                        const ShiftedSolver& solver, const DiscreteField& w);

void check_resonance(const SpectralData& sp, double eps);

// (inf, sup) of v/phi1 over interior nodes.
std::pair<double, double> ratio_bounds(const DiscreteField& v, const SpectralData& sp);

enum class LoadFamily { AlignedEigen, EigenPlusOrth, Bump, SignChanging };

std::string family_name(LoadFamily f);

// Right-hand-side family member with certified integral against phi1 and
// certified L1/Lp norms. The integral is eps*t by construction for every
// family; s scales the phi1-orthogonal part.
struct LoadSpec {
  LoadFamily family = LoadFamily::AlignedEigen;
  double t = 1;
  double s = 0;
  Vec2 center = Vec2::Zero();
  double radius = 0;
  double amp = 1;
  double p = 4;
  // certified values, filled by make_load
  double int_wphi = 0;
  double l1 = 0;
  double lp = 0;
};

DiscreteField make_load(LoadSpec& spec, double eps, const DiscreteOperators& ops,
                        const SpectralData& sp);

struct AmpSweepParams {
  double a = 1, b = 2;
  double p = 4;
  double norm_cap = 50;  // L^p budget M
  std::vector<double> eps_grid;  // positive magnitudes
  std::vector<double> eta_grid;
  int sign = +1;  // +1: anti-maximum (eps > 0); -1: maximum principle (eps < 0)
  std::vector<LoadFamily> families = {LoadFamily::AlignedEigen, LoadFamily::EigenPlusOrth,
                                      LoadFamily::Bump, LoadFamily::SignChanging};
  std::vector<double> t_values;  // defaults to {a, (a+b)/2, b}
  int jobs = 1;
};

struct AmpLoadRow {
  double eps = 0, eta = 0;
  LoadFamily family;
  double t = 0, s = 0;
  double inf_ratio = 0, sup_ratio = 0;
  double l1 = 0, lp = 0, int_wphi = 0;
};

struct AmpCell {
  double eps = 0, eta = 0;
  bool empty = true;
  double inf_ratio = 0, sup_ratio = 0;  // extrema over the admissible family
  int n_loads = 0;
};

struct AmpSweepResult {
  AmpSweepParams params;
  std::vector<AmpCell> cells;      // eps-major order
  std::vector<AmpLoadRow> rows;    // one row per admissible load
  // Band excess max(a - inf, 0) + max(sup - b, 0) of the cell at (i_eps, i_eta).
  double excess(int i_eps, int i_eta) const;
  const AmpCell& cell(int i_eps, int i_eta) const;
};

AmpSweepResult amp_sweep(const DiscreteOperators& ops, const SpectralData& sp,
                         const AmpSweepParams& params);

struct AmpLimitRow {
  double eps = 0;
  double sup_dev = 0;  // sup over interior of |eps T_eps(f)/phi1 - int f phi1|
};

struct AmpLimitResult {
  double int_fphi = 0;  // certified discrete integral of f phi1
  std::vector<AmpLimitRow> rows;
  double fitted_slope = 0;  // log-log slope of sup_dev vs eps
};

AmpLimitResult amp_limit_check(const DiscreteOperators& ops, const SpectralData& sp,
                               const DiscreteField& f, const std::vector<double>& eps_seq);

}  // namespace ellab
