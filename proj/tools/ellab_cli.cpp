// Command-line front end: meshes, eigenpairs, resolvent sweeps, semilinear
// solves, concavity reports and the negative-control battery, all driven by
// flags or a single JSON config.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "ellab/experiment.hpp"
#include "ellab/io.hpp"

namespace {

struct CommonFlags {
  std::string config;
  std::string out_dir;
  std::string format;
  std::string cache_dir;
  std::uint64_t seed = 0;
  int jobs = 0;
  bool seed_set = false, jobs_set = false;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config, "JSON config file (flags override its fields)");
  cmd->add_option("--out", flags.out_dir, "output directory");
  cmd->add_option("--format", flags.format, "csv|json")->check(CLI::IsMember({"csv", "json"}));
  cmd->add_option("--cache", flags.cache_dir, "eigenpair cache directory");
  cmd->add_option("--seed", flags.seed, "random seed")->each([&flags](const std::string&) {
    flags.seed_set = true;
  });
  cmd->add_option("--jobs", flags.jobs, "worker count")->each([&flags](const std::string&) {
    flags.jobs_set = true;
  });
}

ellab::ExperimentConfig base_config(const CommonFlags& flags, ellab::ExperimentKind kind) {
  ellab::ExperimentConfig cfg;
  if (!flags.config.empty()) cfg = ellab::ExperimentConfig::from_json_file(flags.config);
  cfg.kind = kind;
  if (!flags.out_dir.empty()) cfg.out_dir = flags.out_dir;
  if (!flags.format.empty()) cfg.format = flags.format;
  if (!flags.cache_dir.empty()) cfg.cache_dir = flags.cache_dir;
  if (flags.seed_set) cfg.seed = flags.seed;
  if (flags.jobs_set) cfg.jobs = flags.jobs;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"elliptic eigenpair / anti-maximum / semilinear laboratory"};
  app.set_help_flag("--help", "print help");  // keep --h free for the mesh size
  app.require_subcommand(1);

  // mesh
  auto* mesh_cmd = app.add_subcommand("mesh", "triangulate a domain and write the mesh file");
  mesh_cmd->set_help_flag("--help", "print help");
  std::string mesh_domain = "unitsquare";
  double mesh_h = 0.1;
  std::string mesh_out = "mesh.txt";
  bool mesh_quality_flag = false;
  mesh_cmd->add_option("--domain", mesh_domain, "domain spec, e.g. disk:1");
  mesh_cmd->add_option("--h", mesh_h, "target mesh size");
  mesh_cmd->add_option("--out", mesh_out, "output mesh file");
  mesh_cmd->add_flag("--quality", mesh_quality_flag, "print a quality summary");

  struct SubFlags {
    CommonFlags common;
    std::string domain, g, transform, field, mesh, load, target;
    double h = 0, eps = 0, delta = 0, A = 0, c = 0;
    double a = 0, b = 0, p = 0, M = 0, d0 = 0;
    int sign = 0, n_triples = 0;
    std::vector<double> eps_grid, eta_grid, eps_list, h_list;
    bool h_set = false, eps_set = false, delta_set = false, A_set = false, c_set = false;
    bool a_set = false, b_set = false, p_set = false, M_set = false, d0_set = false;
    bool sign_set = false, triples_set = false;
  };

  auto add_sub = [&app](const std::string& name, const std::string& desc, SubFlags& f) {
    auto* cmd = app.add_subcommand(name, desc);
    cmd->set_help_flag("--help", "print help");
    add_common(cmd, f.common);
    cmd->add_option("--domain", f.domain, "domain spec");
    cmd->add_option("--h", f.h, "mesh size")->each([&f](const std::string&) { f.h_set = true; });
    cmd->add_option("--h-list", f.h_list, "mesh sizes");
    return cmd;
  };

  SubFlags eigen_f;
  add_sub("eigen", "principal eigenpair fixtures across mesh sizes", eigen_f);

  SubFlags resolvent_f;
  auto* resolvent_cmd = add_sub("resolvent", "apply the eigenvalue-shifted resolvent", resolvent_f);
  resolvent_cmd->add_option("--eps", resolvent_f.eps, "shift eps")
      ->each([&resolvent_f](const std::string&) { resolvent_f.eps_set = true; });
  resolvent_cmd->add_option("--load", resolvent_f.load, "constant | aligned:<t>");

  SubFlags sweep_f;
  auto* sweep_cmd = add_sub("amp-sweep", "quantified (anti-)maximum principle sweep", sweep_f);
  sweep_cmd->add_option("--a", sweep_f.a)->each([&sweep_f](const std::string&) { sweep_f.a_set = true; });
  sweep_cmd->add_option("--b", sweep_f.b)->each([&sweep_f](const std::string&) { sweep_f.b_set = true; });
  sweep_cmd->add_option("--p", sweep_f.p)->each([&sweep_f](const std::string&) { sweep_f.p_set = true; });
  sweep_cmd->add_option("--M", sweep_f.M)->each([&sweep_f](const std::string&) { sweep_f.M_set = true; });
  sweep_cmd->add_option("--eps-grid", sweep_f.eps_grid, "fractions of (lambda2-lambda1)/2");
  sweep_cmd->add_option("--eta-grid", sweep_f.eta_grid, "L1 budgets");
  sweep_cmd->add_option("--sign", sweep_f.sign, "+1 or -1")
      ->each([&sweep_f](const std::string&) { sweep_f.sign_set = true; });

  SubFlags limit_f;
  auto* limit_cmd = add_sub("amp-limit", "eps T_eps(f)/phi1 limit table", limit_f);
  limit_cmd->add_option("--eps-list", limit_f.eps_list, "eps sequence");

  SubFlags solve_f;
  auto* solve_cmd = add_sub("solve", "semilinear fixed-point solve", solve_f);
  solve_cmd->add_option("--g", solve_f.g, "nonlinearity, e.g. powerplus:a0=1,r=0.5,b0=0");
  solve_cmd->add_option("--eps", solve_f.eps)->each([&solve_f](const std::string&) { solve_f.eps_set = true; });
  solve_cmd->add_option("--delta", solve_f.delta)
      ->each([&solve_f](const std::string&) { solve_f.delta_set = true; });
  solve_cmd->add_option("--A", solve_f.A)->each([&solve_f](const std::string&) { solve_f.A_set = true; });

  SubFlags conv_f;
  auto* conv_cmd = add_sub("converge", "convergence study toward B phi1", conv_f);
  conv_cmd->add_option("--g", conv_f.g, "nonlinearity");
  conv_cmd->add_option("--c", conv_f.c, "delta = c eps")
      ->each([&conv_f](const std::string&) { conv_f.c_set = true; });
  conv_cmd->add_option("--A", conv_f.A)->each([&conv_f](const std::string&) { conv_f.A_set = true; });
  conv_cmd->add_option("--eps-list", conv_f.eps_list, "signed eps values");

  SubFlags conc_f;
  auto* conc_cmd = add_sub("concavity", "concavity diagnostics of a field", conc_f);
  conc_cmd->add_option("--field", conc_f.field, "field file (with --mesh)");
  conc_cmd->add_option("--mesh", conc_f.mesh, "mesh file");
  conc_cmd->add_option("--transform", conc_f.transform, "log|pow:q|neglogpow:q|identity");
  conc_cmd->add_option("--d0", conc_f.d0, "interior margin (default 3h)")
      ->each([&conc_f](const std::string&) { conc_f.d0_set = true; });
  conc_cmd->add_option("--target", conc_f.target, "phi1 | torsion | file");
  conc_cmd->add_option("--n-triples", conc_f.n_triples, "scan sample count")
      ->each([&conc_f](const std::string&) { conc_f.triples_set = true; });

  SubFlags controls_f;
  add_sub("controls", "expected-failure negative controls", controls_f);

  SubFlags all_f;
  add_sub("all", "full reproduction battery", all_f);

  CLI11_PARSE(app, argc, argv);

  try {
    if (mesh_cmd->parsed()) {
      const ellab::DomainSpec spec = ellab::parse_domain(mesh_domain);
      const ellab::Mesh mesh = ellab::build_mesh(spec, mesh_h);
      mesh.write_file(mesh_out);
      std::cout << "nodes " << mesh.num_nodes() << " cells " << mesh.num_cells() << " interior "
                << mesh.num_interior() << "\n";
      if (mesh_quality_flag) {
        const ellab::QualityReport q = ellab::mesh_quality(mesh);
        std::cout << "min_angle_deg " << ellab::format_double(q.min_angle_deg) << "\n"
                  << "max_aspect " << ellab::format_double(q.max_aspect) << "\n"
                  << "h_actual " << ellab::format_double(q.h_actual) << "\n";
      }
      return 0;
    }

    auto finish = [](SubFlags& f, ellab::ExperimentKind kind) {
      ellab::ExperimentConfig cfg = base_config(f.common, kind);
      if (!f.domain.empty()) cfg.domain = ellab::parse_domain(f.domain);
      if (f.h_set) cfg.h = f.h;
      if (!f.h_list.empty()) cfg.h_list = f.h_list;
      if (!f.g.empty()) cfg.g_spec = f.g;
      if (f.eps_set) cfg.eps = f.eps;
      if (f.delta_set) cfg.delta = f.delta;
      if (f.A_set) cfg.A = f.A;
      if (f.c_set) cfg.c = f.c;
      if (f.a_set) cfg.a = f.a;
      if (f.b_set) cfg.b = f.b;
      if (f.p_set) cfg.p = f.p;
      if (f.M_set) cfg.norm_cap = f.M;
      if (f.sign_set) cfg.sign = f.sign;
      if (!f.eps_grid.empty()) cfg.eps_grid = f.eps_grid;
      if (!f.eta_grid.empty()) cfg.eta_grid = f.eta_grid;
      if (!f.eps_list.empty()) cfg.eps_list = f.eps_list;
      if (!f.load.empty()) cfg.load = f.load;
      if (!f.transform.empty()) cfg.transform = f.transform;
      if (f.d0_set) cfg.d0 = f.d0;
      if (!f.target.empty()) cfg.target = f.target;
      if (!f.field.empty()) {
        cfg.field_path = f.field;
        cfg.target = "file";
      }
      if (!f.mesh.empty()) cfg.mesh_path = f.mesh;
      if (f.triples_set) cfg.n_triples = f.n_triples;
      return ellab::run(cfg);
    };

    if (app.got_subcommand("eigen")) return finish(eigen_f, ellab::ExperimentKind::Eigen);
    if (app.got_subcommand("resolvent")) return finish(resolvent_f, ellab::ExperimentKind::Resolvent);
    if (app.got_subcommand("amp-sweep")) return finish(sweep_f, ellab::ExperimentKind::AmpSweep);
    if (app.got_subcommand("amp-limit")) return finish(limit_f, ellab::ExperimentKind::AmpLimit);
    if (app.got_subcommand("solve")) return finish(solve_f, ellab::ExperimentKind::Solve);
    if (app.got_subcommand("converge")) return finish(conv_f, ellab::ExperimentKind::Convergence);
    if (app.got_subcommand("concavity")) return finish(conc_f, ellab::ExperimentKind::Concavity);
    if (app.got_subcommand("controls"))
      return finish(controls_f, ellab::ExperimentKind::NegativeControls);
    if (app.got_subcommand("all")) return finish(all_f, ellab::ExperimentKind::All);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
