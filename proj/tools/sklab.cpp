// sklab: command-line driver for geometry audits, Skorokhod solves,
// reflected-diffusion simulation, verification and stationary estimates.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "sklab/sklab.hpp"

namespace {

namespace pl = sklab::pipeline;

int workers_from_env() {
  if (const char* env = std::getenv("SKLAB_WORKERS")) {
    try {
      const int w = std::stoi(env);
      if (w >= 1) return w;
    } catch (const std::exception&) {
    }
    std::cerr << "warning: ignoring SKLAB_WORKERS='" << env << "'\n";
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reflected diffusions in polyhedral domains"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(pl::kVersion));

  std::string config, out, domain, psi;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers, paths;
  std::optional<double> dt, horizon;

  auto add_run_flags = [&](CLI::App* sub, bool needs_config) {
    auto* c = sub->add_option("--config", config, "Run config JSON");
    if (needs_config) c->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out, "Output directory")->required();
    sub->add_option("--seed", seed, "Override the run seed");
    sub->add_option("--workers", workers, "Worker threads (default: SKLAB_WORKERS or 1)")->check(CLI::PositiveNumber);
    sub->add_option("--paths", paths, "Override the number of paths");
    sub->add_option("--dt", dt, "Override the time step");
    sub->add_option("--horizon", horizon, "Override the time horizon");
  };

  auto* geo = app.add_subcommand("geometry", "Classify boundary strata and test completely-S");
  geo->add_option("domain", domain, "Domain JSON")->required();
  geo->add_option("--out", out, "Write geometry.json and a manifest here");

  auto* solve = app.add_subcommand("solve", "Solve the Skorokhod problem for a path CSV");
  solve->add_option("domain", domain, "Domain JSON")->required();
  solve->add_option("psi", psi, "Input path CSV (t,x1,...,xJ)")->required();
  solve->add_option("--out", out, "Output directory")->required();

  auto* sim = app.add_subcommand("simulate", "Simulate an ensemble into a run directory");
  add_run_flags(sim, true);
  auto* ver = app.add_subcommand("verify", "Cross-check the formulations on a run directory");
  ver->add_option("--out", out, "Run directory produced by simulate or pipeline")->required();
  auto* stat = app.add_subcommand("stationary", "Estimate and check the stationary distribution");
  add_run_flags(stat, true);
  auto* pipe = app.add_subcommand("pipeline", "simulate, verify and stationary in one run directory");
  add_run_flags(pipe, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : pl::kInputError;
  }

  const int nworkers = workers.value_or(workers_from_env());
  const pl::Overrides ov{seed, paths, dt, horizon};
  try {
    if (*geo) return pl::cmd_geometry(domain, out.empty() ? std::nullopt : std::optional<std::filesystem::path>(out),
                                      std::cout, std::cerr);
    if (*solve) return pl::cmd_solve(domain, psi, out, std::cout, std::cerr);
    if (*ver) return pl::cmd_verify(out, std::cout);
    const pl::RunConfig rc = pl::load_run_config(config, ov);
    for (const std::string& w : rc.warnings) std::cerr << "warning: " << w << "\n";
    if (*sim) return pl::cmd_simulate(rc, out, nworkers, std::cout);
    if (*stat) return pl::cmd_stationary(rc, out, nworkers, std::cout);
    if (*pipe) return pl::cmd_pipeline(rc, out, nworkers, std::cout);
  } catch (const sklab::LcpRayTermination& e) {
    std::cerr << "error: " << e.what() << " (step " << e.step() << ")\n";
    return pl::kSolverError;
  } catch (const sklab::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return pl::exit_code_for(e);
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return pl::kInputError;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return pl::kInputError;
  }
  return pl::kInputError;
}
