#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "ellab/experiment.hpp"

using namespace ellab;
namespace fs = std::filesystem;

TEST_SUITE_BEGIN("experiment");

namespace {

std::string slurp(const std::string& path) {
  std::ifstream is(path);
  REQUIRE(is.good());
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::path("exp_scratch") / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("experiment kind names round-trip") {
  for (auto k : {ExperimentKind::Eigen, ExperimentKind::AmpSweep, ExperimentKind::AmpLimit,
                 ExperimentKind::Solve, ExperimentKind::Convergence, ExperimentKind::Concavity,
                 ExperimentKind::NegativeControls, ExperimentKind::All})
    CHECK(parse_kind(kind_name(k)) == k);
  CHECK_THROWS_AS(parse_kind("bogus"), std::invalid_argument);
}

TEST_CASE("config validation rejects bad parameters") {
  ExperimentConfig cfg;
  cfg.format = "xml";
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.format = "csv";
  cfg.h = -1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.h = 0.1;
  cfg.kind = ExperimentKind::Concavity;
  cfg.target = "file";
  cfg.field_path = "nonexistent_field.txt";
  cfg.mesh_path = "nonexistent_mesh.txt";
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("deterministic outputs for identical config and seed") {
  const fs::path d1 = scratch("det1"), d2 = scratch("det2");
  ExperimentConfig cfg;
  cfg.kind = ExperimentKind::AmpLimit;
  cfg.domain = DomainSpec::unit_square();
  cfg.h = 0.1;
  cfg.eps_list = {0.5, 0.25, 0.125};
  cfg.out_dir = d1.string();
  CHECK(run(cfg) == 0);
  cfg.out_dir = d2.string();
  CHECK(run(cfg) == 0);
  CHECK(slurp((d1 / "amp_limit.csv").string()) == slurp((d2 / "amp_limit.csv").string()));
  CHECK(slurp((d1 / "amp_limit_summary.json").string()) ==
        slurp((d2 / "amp_limit_summary.json").string()));
}

TEST_CASE("worker count does not change results") {
  ExperimentContext ctx;
  const Nonlinearity g = Nonlinearity::parse("powerplus:a0=1,r=0.5,b0=0");
  const std::vector<double> eps = {-0.2, -0.1, -0.05};
  const ConvergenceTable serial = run_convergence_study(
      ctx, DomainSpec::interval(0, M_PI), g, 1, 1, eps, M_PI / 200, 7, 1);
  const ConvergenceTable threaded = run_convergence_study(
      ctx, DomainSpec::interval(0, M_PI), g, 1, 1, eps, M_PI / 200, 7, 3);
  REQUIRE(serial.rows.size() == threaded.rows.size());
  for (std::size_t i = 0; i < serial.rows.size(); ++i) {
    CHECK(serial.rows[i].sup_dev == threaded.rows[i].sup_dev);
    CHECK(serial.rows[i].theta == threaded.rows[i].theta);
    CHECK(serial.rows[i].iterations == threaded.rows[i].iterations);
  }
  CHECK(serial.extrapolated_B == threaded.extrapolated_B);
}

TEST_CASE("eigenpair disk cache is transparent") {
  const fs::path cache = scratch("cache");
  const fs::path d1 = scratch("cache_run1"), d2 = scratch("cache_run2"),
                 d3 = scratch("nocache_run");
  ExperimentConfig cfg;
  cfg.kind = ExperimentKind::Eigen;
  cfg.domain = DomainSpec::unit_square();
  cfg.h_list = {0.2, 0.1};
  cfg.cache_dir = cache.string();
  cfg.out_dir = d1.string();
  CHECK(run(cfg) == 0);  // populates the cache
  cfg.out_dir = d2.string();
  CHECK(run(cfg) == 0);  // reads from the cache
  cfg.cache_dir.clear();
  cfg.out_dir = d3.string();
  CHECK(run(cfg) == 0);  // no cache at all
  const std::string a = slurp((d1 / "eigen.csv").string());
  CHECK(a == slurp((d2 / "eigen.csv").string()));
  CHECK(a == slurp((d3 / "eigen.csv").string()));
  bool cache_files = false;
  for (auto& entry : fs::directory_iterator(cache)) cache_files |= entry.is_regular_file();
  CHECK(cache_files);
}

TEST_CASE("convergence study hits the quadrature-bisection oracle") {
  ExperimentContext ctx;
  const Nonlinearity g = Nonlinearity::parse("powerplus:a0=1,r=0.5,b0=0");
  const std::vector<double> eps = {-0.2, -0.1, -0.05, -0.025, 0.2, 0.1, 0.05, 0.025};
  const ConvergenceTable table = run_convergence_study(
      ctx, DomainSpec::interval(0, M_PI), g, 1, 1, eps, M_PI / 300, 7, 1);
  REQUIRE(table.rows.size() == eps.size());
  // rows sorted by |eps| descending
  for (std::size_t i = 1; i < table.rows.size(); ++i)
    CHECK(std::abs(table.rows[i].eps) <= std::abs(table.rows[i - 1].eps));
  // per-sign monotone deviation
  for (int sign : {-1, +1}) {
    double prev = std::numeric_limits<double>::max();
    for (const auto& row : table.rows) {
      if ((row.eps < 0) != (sign < 0)) continue;
      REQUIRE_FALSE(row.failed);
      CHECK(row.sup_dev < prev);
      prev = row.sup_dev;
    }
  }
  CHECK(table.oracle_B > 0);
  CHECK(std::abs(table.extrapolated_B - table.oracle_B) <= 0.02 * table.oracle_B);
  CHECK(table.fitted_order > 0.7);
  for (const auto& row : table.rows) CHECK(row.rho > 0);
}

TEST_CASE("negative controls behave as expected") {
  ExperimentContext ctx;
  const auto results = run_negative_controls(ctx, 7);
  REQUIRE(results.size() == 3);
  for (const auto& r : results) {
    INFO(r.name, ": ", r.observed);
    CHECK(r.pass);
  }
}

TEST_CASE("json format emits the same table as json rows") {
  const fs::path dir = scratch("fmt");
  ExperimentConfig cfg;
  cfg.kind = ExperimentKind::Eigen;
  cfg.domain = DomainSpec::unit_square();
  cfg.h_list = {0.25};
  cfg.format = "json";
  cfg.out_dir = dir.string();
  CHECK(run(cfg) == 0);
  CHECK(fs::exists(dir / "eigen.json"));
  const std::string body = slurp((dir / "eigen.json").string());
  CHECK(body.find("\"lambda1\"") != std::string::npos);
}

TEST_CASE("solve experiment writes a report and solution file") {
  const fs::path dir = scratch("solve");
  ExperimentConfig cfg;
  cfg.kind = ExperimentKind::Solve;
  cfg.domain = DomainSpec::interval(0, M_PI);
  cfg.h = M_PI / 100;
  cfg.eps = -0.05;
  cfg.delta = -0.05;
  cfg.out_dir = dir.string();
  CHECK(run(cfg) == 0);
  CHECK(fs::exists(dir / "report.json"));
  CHECK(fs::exists(dir / "solution.txt"));
  const std::string report = slurp((dir / "report.json").string());
  CHECK(report.find("identity_residual") != std::string::npos);
  CHECK(report.find("box_violation") != std::string::npos);
}

TEST_SUITE_END();
