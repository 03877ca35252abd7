#ifndef SKLAB_PIPELINE_HPP
#define SKLAB_PIPELINE_HPP

// Subcommand implementations behind the sklab executable: run-config
// parsing, run directories, manifests and exit codes.
//
// Exit codes: 0 success, 2 input error, 3 solver or tau_V termination,
// 4 verification failure.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sklab/errors.hpp"
#include "sklab/generator.hpp"
#include "sklab/geometry.hpp"
#include "sklab/io.hpp"
#include "sklab/rng.hpp"
#include "sklab/simulate.hpp"
#include "sklab/skorokhod.hpp"
#include "sklab/stationary.hpp"
#include "sklab/stats.hpp"
#include "sklab/verify.hpp"

namespace sklab::pipeline {

namespace fs = std::filesystem;
using json = nlohmann::json;

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { kOk = 0, kInputError = 2, kSolverError = 3, kVerificationFailed = 4 };

inline int exit_code_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::kInput: return kInputError;
    case ErrorKind::kSolver: return kSolverError;
    case ErrorKind::kVerification: return kVerificationFailed;
  }
  return kInputError;
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

inline ReflectionScheme scheme_from_string(const std::string& s) {
  if (s == "projected") return ReflectionScheme::kProjected;
  if (s == "symmetrized") return ReflectionScheme::kSymmetrized;
  throw ParseError("unknown reflection scheme '" + s + "'");
}

/// Command-line values that take precedence over the config file.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> paths;
  std::optional<double> step;
  std::optional<double> horizon;
};

struct StationarySettings {
  SimConfig sim;
  double burn_in = 0.0;
  int thin = 100;
  json battery;  // null selects the default battery
  std::vector<double> epsilons;
  int histogram_bins = 50;
};

/// Fully resolved run configuration. `resolved` is the JSON written to the
/// run directory; it has the domain inlined and overrides applied.
struct RunConfig {
  json resolved;
  std::optional<PolyhedralDomain> domain;
  Coefficients coeffs;
  SimConfig sim;
  json battery;
  std::vector<TimePair> time_pairs;
  SubmartingaleOptions submartingale;
  int hull_windows = 100;
  std::vector<double> occupation_epsilons;
  int occupation_fit_degree = 2;
  std::optional<StationarySettings> stationary;
  std::vector<std::string> warnings;
};

inline SimConfig sim_from_json(const json& s, int dim, std::uint64_t seed) {
  SimConfig c;
  c.step = s.at("dt").get<double>();
  c.horizon = s.at("horizon").get<double>();
  c.paths = s.at("paths").get<int>();
  c.seed = seed;
  c.initial_point = io::to_vector(s.at("initial_point"), "initial_point");
  c.stop_on_v = s.value("stop_on_v", true);
  c.record_stride = s.value("record_stride", 1);
  c.scheme = scheme_from_string(s.value("scheme", std::string("projected")));
  if (c.initial_point.size() != dim) throw ParseError("initial_point must have length " + std::to_string(dim));
  if (c.paths < 1) throw InvalidArgument("paths must be positive");
  if (!(c.step > 0.0) || !(c.horizon >= c.step)) throw InvalidArgument("need dt > 0 and horizon >= dt");
  return c;
}

inline RunConfig parse_run_config(json j, const fs::path& base_dir, const Overrides& ov = {}) {
  try {
    RunConfig rc;
    const io::Warn warn = [&rc](const std::string& w) { rc.warnings.push_back(w); };
    if (!j.is_object()) throw ParseError("run config must be a JSON object");
    if (j.at("domain").is_string()) j["domain"] = io::load_json(base_dir / j["domain"].get<std::string>());
    rc.domain.emplace(io::domain_from_json(j["domain"], warn));
    j["domain"] = io::domain_to_json(*rc.domain);
    const int dim = rc.domain->dimension();
    rc.coeffs = io::coefficients_from_json(j.at("coefficients"), dim);

    json& sim = j.at("simulation");
    if (ov.seed) sim["seed"] = *ov.seed;
    if (ov.paths) sim["paths"] = *ov.paths;
    if (ov.step) sim["dt"] = *ov.step;
    if (ov.horizon) sim["horizon"] = *ov.horizon;
    const auto seed = sim.value("seed", std::uint64_t{0});
    sim["seed"] = seed;
    rc.sim = sim_from_json(sim, dim, seed);

    const json ver = j.value("verify", json::object());
    rc.battery = ver.value("battery", json());
    if (ver.contains("time_pairs")) {
      for (const json& p : ver["time_pairs"]) rc.time_pairs.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
    }
    rc.submartingale.bins = ver.value("bins", 8);
    rc.submartingale.z_threshold = ver.value("z_threshold", 3.0);
    rc.hull_windows = ver.value("hull_windows", 100);
    rc.occupation_epsilons = ver.value("occupation_epsilons", std::vector<double>{});
    rc.occupation_fit_degree = ver.value("occupation_fit_degree", 2);

    if (j.contains("stationary")) {
      const json& st = j["stationary"];
      StationarySettings s;
      json simj = st;
      if (!simj.contains("initial_point")) simj["initial_point"] = sim.at("initial_point");
      if (!simj.contains("paths")) simj["paths"] = 1;
      // Independent of the simulate stream but fixed by the run seed.
      s.sim = sim_from_json(simj, dim, splitmix64(seed ^ 0x5354415449ULL));
      s.burn_in = st.value("burn_in", 0.0);
      s.thin = st.value("thin", 100);
      s.battery = st.value("battery", json());
      s.epsilons = st.value("epsilons", std::vector<double>{});
      s.histogram_bins = st.value("histogram_bins", 50);
      rc.stationary = std::move(s);
    }
    rc.resolved = std::move(j);
    return rc;
  } catch (const json::exception& e) {
    throw ParseError(std::string("run config: ") + e.what());
  }
}

inline RunConfig load_run_config(const fs::path& p, const Overrides& ov = {}) {
  return parse_run_config(io::load_json(p), p.parent_path(), ov);
}

// --- run directories ---------------------------------------------------------

inline std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream ss;
  ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return ss.str();
}

/// Writes manifest.json last, through a temporary file and a rename, so its
/// presence marks a complete directory. Indexes every other file in `dir`.
inline void write_manifest(const fs::path& dir, const std::string& command, const json& config, std::uint64_t seed,
                           const std::string& started) {
  json files = json::array();
  std::vector<fs::path> found;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().filename() != "manifest.json" && e.path().extension() != ".tmp") {
      found.push_back(fs::relative(e.path(), dir));
    }
  }
  std::sort(found.begin(), found.end());
  for (const fs::path& rel : found) {
    const std::string data = io::read_text(dir / rel);
    files.push_back({{"path", rel.generic_string()}, {"bytes", data.size()}, {"fnv1a", io::hex64(io::fnv1a(data))}});
  }
  json m;
  m["tool"] = "sklab";
  m["version"] = kVersion;
  m["command"] = command;
  m["config_hash"] = io::hex64(io::fnv1a(config.dump()));
  m["seed"] = seed;
  m["started"] = started;
  m["finished"] = utc_now();
  m["files"] = std::move(files);
  const fs::path tmp = dir / "manifest.json.tmp";
  io::write_text(tmp, dump(m));
  fs::rename(tmp, dir / "manifest.json");
}

/// Long-format CSV: one row per (path, recorded time).
template <class Get>
std::string ensemble_csv(const std::vector<SimOutput>& paths, const std::string& prefix, Get get) {
  std::string out;
  for (const SimOutput& p : paths) {
    const Matrix& v = get(p);
    if (out.empty()) {
      out = "path,t";
      for (Eigen::Index c = 0; c < v.rows(); ++c) out += "," + prefix + std::to_string(c + 1);
      out += "\n";
    }
    for (int k = 0; k < p.z_path.size(); ++k) {
      out += std::to_string(p.path_index) + "," + io::format_double(p.z_path.times[static_cast<std::size_t>(k)]);
      for (Eigen::Index c = 0; c < v.rows(); ++c) out += "," + io::format_double(v(c, k));
      out += "\n";
    }
  }
  return out;
}

inline void write_ensemble(const fs::path& dir, const std::vector<SimOutput>& paths) {
  io::write_text(dir / "z.csv", ensemble_csv(paths, "x", [](const SimOutput& p) -> const Matrix& { return p.z_path.values; }));
  io::write_text(dir / "y.csv", ensemble_csv(paths, "y", [](const SimOutput& p) -> const Matrix& { return p.y_path.values; }));
  io::write_text(dir / "w.csv", ensemble_csv(paths, "w", [](const SimOutput& p) -> const Matrix& { return p.w_path.values; }));
  io::write_text(dir / "local_time.csv",
                 ensemble_csv(paths, "l", [](const SimOutput& p) -> const Matrix& { return p.local_times; }));
  std::string meta = "path,steps_taken,tau_v,boundary_steps,failed\n";
  for (const SimOutput& p : paths) {
    meta += std::to_string(p.path_index) + "," + std::to_string(p.steps_taken) + "," +
            std::to_string(p.tau_v ? *p.tau_v : -1) + "," + std::to_string(p.boundary_step_count) + "," +
            (p.failure.empty() ? "0" : "1") + "\n";
  }
  io::write_text(dir / "paths.csv", meta);
}

/// Reads a long-format CSV back into (times, values) per path index.
inline std::map<int, DiscretePath> read_ensemble_csv(const fs::path& file) {
  const std::string text = io::read_text(file);
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  if (line.rfind("path,t", 0) != 0) throw ParseError(file.string() + ":1: header must start with path,t");
  std::map<int, std::pair<std::vector<double>, std::vector<std::vector<double>>>> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    std::vector<double> vals;
    try {
      while (std::getline(ls, cell, ',')) vals.push_back(std::stod(cell));
    } catch (const std::exception&) {
      throw ParseError(file.string() + ":" + std::to_string(lineno) + ": bad number");
    }
    if (vals.size() < 3) throw ParseError(file.string() + ":" + std::to_string(lineno) + ": too few fields");
    auto& r = rows[static_cast<int>(vals[0])];
    r.first.push_back(vals[1]);
    r.second.emplace_back(vals.begin() + 2, vals.end());
  }
  std::map<int, DiscretePath> out;
  for (auto& [idx, r] : rows) {
    const auto cols = static_cast<Eigen::Index>(r.second.front().size());
    Matrix v(cols, static_cast<Eigen::Index>(r.second.size()));
    for (std::size_t k = 0; k < r.second.size(); ++k) {
      if (static_cast<Eigen::Index>(r.second[k].size()) != cols) throw ParseError(file.string() + ": ragged rows");
      for (Eigen::Index c = 0; c < cols; ++c) v(c, static_cast<Eigen::Index>(k)) = r.second[k][static_cast<std::size_t>(c)];
    }
    out.emplace(idx, DiscretePath(std::move(r.first), std::move(v)));
  }
  return out;
}

inline std::vector<SimOutput> read_ensemble(const fs::path& dir) {
  auto z = read_ensemble_csv(dir / "z.csv");
  auto y = read_ensemble_csv(dir / "y.csv");
  auto w = read_ensemble_csv(dir / "w.csv");
  auto l = read_ensemble_csv(dir / "local_time.csv");
  std::vector<SimOutput> out;
  for (auto& [idx, zp] : z) {
    SimOutput p;
    p.path_index = idx;
    p.z_path = std::move(zp);
    p.y_path = std::move(y.at(idx));
    p.w_path = std::move(w.at(idx));
    p.local_times = std::move(l.at(idx).values);
    out.push_back(std::move(p));
  }
  std::istringstream meta(io::read_text(dir / "paths.csv"));
  std::string line;
  std::getline(meta, line);
  while (std::getline(meta, line)) {
    if (line.empty()) continue;
    long idx = 0, steps = 0, tau = 0, bsteps = 0, failed = 0;
    char sep = 0;
    std::istringstream ls(line);
    ls >> idx >> sep >> steps >> sep >> tau >> sep >> bsteps >> sep >> failed;
    if (!ls) throw ParseError((dir / "paths.csv").string() + ": bad row '" + line + "'");
    for (SimOutput& p : out) {
      if (p.path_index != idx) continue;
      p.steps_taken = steps;
      if (tau >= 0) p.tau_v = tau;
      p.boundary_step_count = bsteps;
      if (failed) p.failure = "failed during simulation";
    }
  }
  return out;
}

// --- summaries ---------------------------------------------------------------

inline json ensemble_summary(const std::vector<SimOutput>& paths, const EnsembleResult* ens = nullptr) {
  json s;
  s["paths"] = paths.size();
  long stopped = 0, failed = 0, bsteps = 0, steps = 0;
  for (const SimOutput& p : paths) {
    stopped += p.tau_v ? 1 : 0;
    failed += p.failure.empty() ? 0 : 1;
    bsteps += p.boundary_step_count;
    steps += p.steps_taken;
  }
  s["stopped_on_v"] = stopped;
  s["failed"] = failed;
  s["boundary_step_fraction"] = steps > 0 ? static_cast<double>(bsteps) / static_cast<double>(steps) : 0.0;
  if (!paths.empty()) {
    const int dim = paths.front().z_path.dimension();
    json terminal = json::array();
    for (int c = 0; c < dim; ++c) {
      std::vector<double> v;
      for (const SimOutput& p : paths) v.push_back(p.z_path.values(c, p.z_path.size() - 1));
      terminal.push_back(to_json(stats::mean_se(v)));
    }
    s["terminal_mean"] = std::move(terminal);
  }
  if (ens != nullptr) {
    json f = json::array();
    for (const auto& [idx, msg] : ens->failures) f.push_back({{"path", idx}, {"message", msg}});
    s["failures"] = std::move(f);
  }
  return s;
}

// --- commands ----------------------------------------------------------------

inline json geometry_report(const PolyhedralDomain& domain) {
  const auto cs = is_completely_s(domain);
  json j;
  j["dimension"] = domain.dimension();
  j["faces"] = domain.num_faces();
  j["reflection_matrix"] = io::from_matrix(domain.reflection_matrix());
  j["completely_s"] = cs.completely_s;
  if (!cs.completely_s) j["witness"] = cs.witness;
  j["strata"] = json::array();
  for (const Stratum& s : cs.strata) {
    j["strata"].push_back(
        {{"faces", s.faces}, {"class", to_string(s.cls)}, {"margin", s.margin}, {"point", io::from_vector(s.point)}});
  }
  return j;
}

inline int cmd_geometry(const fs::path& domain_file, const std::optional<fs::path>& out_dir, std::ostream& os,
                        std::ostream& err) {
  const std::string started = utc_now();
  const PolyhedralDomain domain = io::load_domain(domain_file, [&err](const std::string& w) { err << "warning: " << w << "\n"; });
  const json rep = geometry_report(domain);
  const auto cs = is_completely_s(domain);
  for (const Stratum& s : cs.strata) {
    os << "stratum " << format_face_set(s.faces) << ": " << to_string(s.cls) << " (margin " << s.margin << ")\n";
  }
  os << "completely-S: " << (cs.completely_s ? "true" : "false");
  if (!cs.completely_s) os << ", witness " << format_face_set(cs.witness);
  os << "\n";
  if (out_dir) {
    fs::create_directories(*out_dir);
    io::write_text(*out_dir / "geometry.json", dump(rep));
    write_manifest(*out_dir, "geometry", io::domain_to_json(domain), 0, started);
  }
  return kOk;
}

inline int cmd_solve(const fs::path& domain_file, const fs::path& psi_file, const fs::path& out_dir, std::ostream& os,
                     std::ostream& err) {
  const std::string started = utc_now();
  const PolyhedralDomain domain = io::load_domain(domain_file, [&err](const std::string& w) { err << "warning: " << w << "\n"; });
  const DiscretePath psi = io::load_path(psi_file);
  if (psi.dimension() != domain.dimension()) throw InvalidArgument("path dimension does not match the domain");
  const EspSolution sol = solve_sp_path(domain, psi);
  fs::create_directories(out_dir);
  io::write_text(out_dir / "phi.csv", io::path_to_csv(sol.constrained, "x"));
  io::write_text(out_dir / "eta.csv", io::path_to_csv(sol.pushing, "x"));
  io::write_text(out_dir / "local_time.csv",
                 io::path_to_csv(DiscretePath(psi.times, sol.local_time_increments), "l"));
  long pivots = 0;
  for (int p : sol.lcp_pivots) pivots += p;
  io::write_text(out_dir / "diagnostics.json",
                 dump({{"points", psi.size()}, {"total_pivots", pivots}, {"lcp_pivots", sol.lcp_pivots}}));
  write_manifest(out_dir, "solve", io::domain_to_json(domain), 0, started);
  os << "solved " << psi.size() << " points, " << pivots << " LCP pivots\n";
  return kOk;
}

struct SimulateOutcome {
  std::vector<SimOutput> paths;
  bool stopped_or_failed = false;
};

inline SimulateOutcome run_simulate(const RunConfig& rc, const fs::path& dir, int workers, std::ostream& os) {
  EnsembleResult ens = simulate_ensemble(*rc.domain, rc.coeffs, rc.sim, workers);
  fs::create_directories(dir);
  write_ensemble(dir, ens.paths);
  const json summary = ensemble_summary(ens.paths, &ens);
  io::write_text(dir / "summary.json", dump(summary));
  os << "simulated " << ens.paths.size() << " paths; stopped on V: " << summary["stopped_on_v"]
     << "; failed: " << summary["failed"] << "\n";
  SimulateOutcome out;
  out.stopped_or_failed = summary["stopped_on_v"].get<long>() > 0 || summary["failed"].get<long>() > 0;
  out.paths = std::move(ens.paths);
  return out;
}

inline VerificationReport run_verify(const RunConfig& rc, const std::vector<SimOutput>& paths) {
  const PolyhedralDomain& domain = *rc.domain;
  const std::vector<TestFunction> battery = io::battery_from_json(domain, rc.battery);
  CrossCheckOptions opts;
  opts.initial_point = rc.sim.initial_point;
  opts.time_pairs = rc.time_pairs;
  opts.submartingale = rc.submartingale;
  opts.hull_windows_per_path = rc.hull_windows;
  opts.seed = splitmix64(rc.sim.seed ^ 0x48554c4cULL);
  VerificationReport rep = cross_check_formulations(paths, domain, rc.coeffs, battery, opts);
  if (!rc.occupation_epsilons.empty()) {
    const OccupationTable t = test_boundary_occupation(paths, domain, rc.occupation_epsilons, rc.occupation_fit_degree);
    const bool ok = t.monotone && std::abs(t.intercept.mean) <= 2.0 * t.intercept.se;
    rep.add(CheckItem{"boundary_occupation", ok, to_json(t)});
  }
  return rep;
}

inline int report_verification(const VerificationReport& rep, const fs::path& file, std::ostream& os) {
  io::write_text(file, dump(rep.to_json()));
  for (const CheckItem& it : rep.items) os << (it.passed ? "PASS " : "FAIL ") << it.name << "\n";
  os << "verification: " << (rep.passed ? "pass" : "fail") << "\n";
  return rep.passed ? kOk : kVerificationFailed;
}

inline int run_stationary(const RunConfig& rc, const fs::path& dir, int workers, std::ostream& os) {
  if (!rc.stationary) throw ParseError("run config has no 'stationary' section");
  const StationarySettings& st = *rc.stationary;
  const PolyhedralDomain& domain = *rc.domain;
  const StationaryEstimate est = estimate_stationary(domain, rc.coeffs, st.sim, st.burn_in, st.thin, workers);
  const auto battery = io::battery_from_json(domain, st.battery);
  const StationaryReport rep = check_stationary_characterization(est, domain, rc.coeffs, battery, st.epsilons);
  fs::create_directories(dir);

  const MarginalHistogram h = marginal_histograms(est, st.histogram_bins);
  std::string csv = "lo,hi";
  for (Eigen::Index c = 0; c < h.counts.cols(); ++c) csv += ",x" + std::to_string(c + 1);
  csv += "\n";
  for (Eigen::Index b = 0; b < h.counts.rows(); ++b) {
    csv += io::format_double(h.edges[static_cast<std::size_t>(b)]) + "," +
           io::format_double(h.edges[static_cast<std::size_t>(b) + 1]);
    for (Eigen::Index c = 0; c < h.counts.cols(); ++c) csv += "," + std::to_string(static_cast<long>(h.counts(b, c)));
    csv += "\n";
  }
  io::write_text(dir / "histogram.csv", csv);

  json j = rep.to_json();
  j["samples"] = est.size();
  j["burn_in"] = est.burn_in;
  j["mean"] = io::from_vector(est.mean);
  j["covariance"] = io::from_matrix(est.covariance);
  j["warnings"] = est.warnings;
  io::write_text(dir / "report.json", dump(j));
  for (const std::string& w : est.warnings) os << "warning: " << w << "\n";
  for (const IntegralCheck& c : rep.integrals) {
    os << (c.passed ? "PASS " : "FAIL ") << "integral " << c.test_fn_id << " = " << c.integral.mean << " +- "
       << c.integral.se << "\n";
  }
  if (!st.epsilons.empty()) {
    os << (rep.boundary_passed ? "PASS " : "FAIL ") << "boundary mass intercept " << rep.boundary_intercept.mean
       << " +- " << rep.boundary_intercept.se << "\n";
  }
  os << "stationary: " << (rep.passed ? "pass" : "fail") << "\n";
  return rep.passed ? kOk : kVerificationFailed;
}

inline void write_resolved_config(const RunConfig& rc, const fs::path& dir) {
  fs::create_directories(dir);
  io::write_text(dir / "config.json", dump(rc.resolved));
}

inline int cmd_simulate(const RunConfig& rc, const fs::path& dir, int workers, std::ostream& os) {
  const std::string started = utc_now();
  write_resolved_config(rc, dir);
  const SimulateOutcome out = run_simulate(rc, dir / "simulate", workers, os);
  write_manifest(dir, "simulate", rc.resolved, rc.sim.seed, started);
  return out.stopped_or_failed ? kSolverError : kOk;
}

/// Verifies an existing run directory produced by `simulate` or `pipeline`.
inline int cmd_verify(const fs::path& dir, std::ostream& os) {
  const std::string started = utc_now();
  const RunConfig rc = parse_run_config(io::load_json(dir / "config.json"), dir);
  const auto paths = read_ensemble(dir / "simulate");
  const int code = report_verification(run_verify(rc, paths), dir / "verification.json", os);
  write_manifest(dir, "verify", rc.resolved, rc.sim.seed, started);
  return code;
}

inline int cmd_stationary(const RunConfig& rc, const fs::path& dir, int workers, std::ostream& os) {
  const std::string started = utc_now();
  write_resolved_config(rc, dir);
  const int code = run_stationary(rc, dir / "stationary", workers, os);
  write_manifest(dir, "stationary", rc.resolved, rc.sim.seed, started);
  return code;
}

/// simulate -> verify -> stationary (when configured), manifest last.
inline int cmd_pipeline(const RunConfig& rc, const fs::path& dir, int workers, std::ostream& os) {
  const std::string started = utc_now();
  write_resolved_config(rc, dir);
  const SimulateOutcome sim = run_simulate(rc, dir / "simulate", workers, os);
  int code = kOk;
  if (sim.stopped_or_failed) {
    os << "simulation stopped on V or failed; skipping verification\n";
    code = kSolverError;
  } else {
    code = report_verification(run_verify(rc, sim.paths), dir / "verification.json", os);
    if (rc.stationary) code = std::max(code, run_stationary(rc, dir / "stationary", workers, os));
  }
  write_manifest(dir, "pipeline", rc.resolved, rc.sim.seed, started);
  return code;
}

}  // namespace sklab::pipeline

#endif  // SKLAB_PIPELINE_HPP
