#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "ellab/concavity.hpp"
#include "ellab/resolvent.hpp"
#include "ellab/semilinear.hpp"

namespace ellab {

enum class ExperimentKind {
  Eigen,
  Resolvent,
  AmpSweep,
  AmpLimit,
  Solve,
  Convergence,
  Concavity,
  NegativeControls,
  All,
};

ExperimentKind parse_kind(const std::string& name);
std::string kind_name(ExperimentKind k);

// One experiment, fully specified by a single JSON document (or CLI flags).
struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Eigen;
  DomainSpec domain = DomainSpec::unit_square();
  std::vector<double> h_list;
  double h = 0.05;

  // semilinear parameters
  std::string g_spec = "powerplus:a0=1,r=0.5,b0=0";
  double eps = -0.05, delta = -0.05, A = 1, c = 1;
  std::vector<double> eps_list;

  // sweep parameters; eps_grid entries are fractions of (lambda2-lambda1)/2
  double a = 1, b = 2, p = 4, norm_cap = 50;
  std::vector<double> eps_grid = {0.2, 0.1, 0.05, 0.025};
  std::vector<double> eta_grid = {2, 1, 0.5, 0.25};
  int sign = +1;

  // resolvent load: "constant" or "aligned:<t>"
  std::string load = "constant";

  // concavity parameters; d0 = 0 means 3 h; target: "phi1", "torsion" or "file"
  std::string transform = "log";
  double d0 = 0;
  std::string target = "phi1";
  std::string field_path, mesh_path;
  int n_triples = 2000;

  std::uint64_t seed = 7;
  int jobs = 1;
  std::string out_dir = ".";
  std::string format = "csv";  // csv|json for report-style outputs
  std::string cache_dir;       // empty disables the disk cache

  static ExperimentConfig from_json_file(const std::string& path);
  void validate() const;
};

// Shared (mesh, operators, spectral) bundle, cached per (domain, h) in memory
// and optionally on disk.
struct Problem {
  MeshPtr mesh;
  DiscreteOperators ops;
  SpectralData spectral;
};

class ExperimentContext {
 public:
  explicit ExperimentContext(std::string cache_dir = {});
  const Problem& get(const DomainSpec& spec, double h);
  const std::string& cache_dir() const { return cache_dir_; }

 private:
  std::map<std::string, std::unique_ptr<Problem>> cache_;
  std::string cache_dir_;
  std::mutex mutex_;
};

struct ConvergenceRow {
  double eps = 0, delta = 0, h = 0;
  double sup_dev = 0;  // sup |u/phi1 - B_oracle| over interior nodes
  int iterations = 0;
  double identity_residual = 0;
  double rho = 0;
  double theta = 0;
  bool failed = false;
  std::string note;
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;  // sorted by |eps| descending
  double fitted_order = 0;           // slope of log sup_dev vs log |eps| (>= 3 rows)
  double extrapolated_B = 0;         // linear-in-eps intercept of theta
  double oracle_B = 0;               // limit_coefficient result
};

ConvergenceTable run_convergence_study(ExperimentContext& ctx, const DomainSpec& domain,
                                       const Nonlinearity& g, double c, double A,
                                       const std::vector<double>& eps_list, double h,
                                       std::uint64_t seed, int jobs);

struct ControlResult {
  std::string name;
  std::string expected;
  std::string observed;
  bool pass = false;
};

std::vector<ControlResult> run_negative_controls(ExperimentContext& ctx, std::uint64_t seed);

// Dispatches one experiment; writes artifacts under config.out_dir and returns
// 0 when every asserted property holds.
int run(const ExperimentConfig& config);

}  // namespace ellab
