#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rcmlab/harness.hpp"

namespace {

using rcmlab::ExperimentConfig;

struct Flags {
  std::string config;
  std::string subcommand;
  std::string phi;
  std::vector<double> lambda;
  std::vector<double> s;
  std::uint64_t replicates = 0;
  std::uint64_t seed = 0;
  double rmax_escape = 0.0;
  std::uint64_t kmax = 0;
  std::string out;
  unsigned workers = 0;
  double K = 0.0;
  std::vector<double> L;
  std::vector<double> M;
  std::vector<int> grid;
  std::string criterion;
  double tau = 0.0;
  double level = 0.0;
  double width = 0.0;
  std::uint64_t samples = 0;
  int distance = 0;
  std::uint64_t k_report = 0;
  double l1_fraction = 0.0;
  std::uint64_t memory_mb = 0;
  bool dump_edges = false;
  bool dump_trace = false;
};

void add_flags(CLI::App& app, Flags& f) {
  app.add_option("--config", f.config, "JSON config file; flags override its keys")->check(CLI::ExistingFile);
  app.add_option("--phi", f.phi, "hard-disk | linear-ramp | truncated-exponential | JSON object | JSON file");
  app.add_option("--lambda", f.lambda, "intensity or sorted grid (comma separated)")->delimiter(',');
  app.add_option("--s", f.s, "box side or sorted grid (comma separated)")->delimiter(',');
  app.add_option("--replicates", f.replicates, "replicates per grid point");
  app.add_option("--seed", f.seed, "master seed");
  app.add_option("--rmax-escape", f.rmax_escape, "escape radius R_max of the stopping rule");
  app.add_option("--kmax", f.kmax, "size cap k_max of the stopping rule");
  app.add_option("--out", f.out, "output directory");
  app.add_option("--workers", f.workers, "worker threads, 0 = available parallelism (RCMLAB_WORKERS overrides)");
  app.add_option("--K", f.K, "seed disk radius (events, block-field, mecke, fkg)");
  app.add_option("--L", f.L, "L grid for event U")->delimiter(',');
  app.add_option("--M", f.M, "M grid for event F; first entry for block-field")->delimiter(',');
  app.add_option("--grid", f.grid, "block-field lattice: n or nx,ny")->delimiter(',')->expected(1, 2);
  app.add_option("--criterion", f.criterion, "lambda-c crossing criterion: spanning | theta");
  app.add_option("--level", f.level, "lambda-c spanning probability level");
  app.add_option("--tau", f.tau, "lambda-c theta threshold");
  app.add_option("--width", f.width, "lambda-c bracket width in units of 1/range^2");
  app.add_option("--samples", f.samples, "independent block-field samples");
  app.add_option("--distance", f.distance, "dependence-check distance (lattice units)");
  app.add_option("--k-report", f.k_report, "largest k reported in the cluster-size distribution");
  app.add_option("--l1-fraction", f.l1_fraction, "fkg event L1 >= fraction * lambda * s^2");
  app.add_option("--memory-mb", f.memory_mb, "memory bound per replicate in MiB");
  app.add_flag("--dump-edges", f.dump_edges, "write edge lists of replicate 0");
  app.add_flag("--dump-trace", f.dump_trace, "write the growth trace of replicate 0 (theta)");
}

bool given(const CLI::App& app, const char* name) { return app.count(name) > 0; }

ExperimentConfig build_config(const CLI::App& app, const Flags& f, const std::string& subcommand) {
  ExperimentConfig c;
  if (!subcommand.empty()) c.subcommand = subcommand;
  if (given(app, "--config")) c = rcmlab::load_config(f.config, c);
  if (!subcommand.empty() && subcommand != c.subcommand) c.subcommand = subcommand;
  if (given(app, "--phi")) c.phi = rcmlab::parse_phi(f.phi);
  if (given(app, "--lambda")) c.lambda = f.lambda;
  if (given(app, "--s")) c.s = f.s;
  if (given(app, "--replicates")) c.replicates = f.replicates;
  if (given(app, "--seed")) c.seed = f.seed;
  if (given(app, "--rmax-escape")) c.rule.escape_radius = f.rmax_escape;
  if (given(app, "--kmax")) c.rule.max_size = f.kmax;
  if (given(app, "--out")) c.out = f.out;
  if (given(app, "--workers")) c.workers = f.workers;
  if (given(app, "--K")) {
    if (c.subcommand == "mecke") c.mecke_K = f.K;
    else if (c.subcommand == "fkg") c.fkg_K = f.K;
    else c.events.K = f.K;
  }
  if (given(app, "--L")) c.events.L = f.L;
  if (given(app, "--M")) c.events.M = f.M;
  if (given(app, "--grid")) {
    c.events.nx = f.grid.front();
    c.events.ny = f.grid.back();
  }
  if (given(app, "--criterion")) c.lambda_c.criterion = f.criterion;
  if (given(app, "--level")) c.lambda_c.level = f.level;
  if (given(app, "--tau")) c.lambda_c.tau = f.tau;
  if (given(app, "--width")) c.lambda_c.width = f.width;
  if (given(app, "--samples")) c.events.samples = f.samples;
  if (given(app, "--distance")) c.events.distance = f.distance;
  if (given(app, "--k-report")) c.k_report = f.k_report;
  if (given(app, "--l1-fraction")) c.fkg_l1_fraction = f.l1_fraction;
  if (given(app, "--memory-mb")) c.memory_limit_mb = f.memory_mb;
  if (given(app, "--dump-edges")) c.dump_edges = f.dump_edges;
  if (given(app, "--dump-trace")) c.dump_trace = f.dump_trace;
  c.workers = rcmlab::resolve_workers(c.workers);
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo experiments on the random connection model"};
  app.set_version_flag("--version", std::string(rcmlab::kVersion));
  app.require_subcommand(1);

  Flags flags;
  std::vector<std::pair<std::string, CLI::App*>> runs;
  for (const std::string& name : rcmlab::experiment_subcommands()) {
    CLI::App* sub = app.add_subcommand(name, "run the " + name + " experiment");
    add_flags(*sub, flags);
    runs.emplace_back(name, sub);
  }
  CLI::App* print = app.add_subcommand("print-config", "print the effective configuration as JSON");
  add_flags(*print, flags);
  print->add_option("--subcommand", flags.subcommand, "experiment the config is for");

  std::string report_dir;
  CLI::App* report = app.add_subcommand("report", "tab-separated summary of result directories");
  report->add_option("dir", report_dir, "results directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (report->parsed()) return rcmlab::emit_report(report_dir, std::cout, std::cerr);

  try {
    if (print->parsed()) {
      const ExperimentConfig c = build_config(*print, flags, flags.subcommand);
      std::cout << rcmlab::to_json_text(c);
      return 0;
    }
    for (const auto& [name, sub] : runs) {
      if (sub->parsed()) return rcmlab::run_experiment(build_config(*sub, flags, name), std::cerr, std::cerr);
    }
  } catch (const rcmlab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
