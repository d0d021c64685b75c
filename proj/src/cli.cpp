#include "roa/cli.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include "roa/cct.hpp"
#include "roa/example_systems.hpp"
#include "roa/invariance.hpp"
#include "roa/log.hpp"
#include "roa/powersys.hpp"

namespace roa::cli {

namespace {

namespace fs = std::filesystem;

class UsageError : public Error {
 public:
  using Error::Error;
};

struct Common {
  std::string example;
  std::vector<std::string> params;
  std::string case_path;
  std::vector<std::string> contingencies;
  double dt = 1e-3;
  double t_max = 5.0;
  double tol = 1e-3;
  unsigned jobs = 0;
  std::uint64_t seed = 0;
  bool lossless = false;
  bool no_per_angle_bounds = false;
  double bound = std::numbers::pi;
  std::string format = "csv";
  std::string output;
};

fs::path resolve_case(const std::string& given) {
  const fs::path p(given);
  if (fs::exists(p)) return p;
  const char* env = std::getenv("ROA_DATA_DIR");
  const fs::path data(env != nullptr && *env != '\0' ? env : ROA_DATA_DIR);
  for (const fs::path& candidate : {data / p, data / fs::path(given + ".json")}) {
    if (fs::exists(candidate)) return candidate;
  }
  throw power::CaseError(fmt::format("case file '{}' not found", given));
}

examples::Params parse_params(const std::vector<std::string>& raw) {
  examples::Params out;
  for (const std::string& kv : raw) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError(fmt::format("--param expects key=value, got '{}'", kv));
    try {
      std::size_t used = 0;
      const double v = std::stod(kv.substr(eq + 1), &used);
      if (used != kv.size() - eq - 1) throw std::invalid_argument(kv);
      out[kv.substr(0, eq)] = v;
    } catch (const std::logic_error&) {
      throw UsageError(fmt::format("--param value in '{}' is not a number", kv));
    }
  }
  return out;
}

std::vector<double> parse_list(const std::string& text, const char* flag) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::logic_error&) {
      throw UsageError(fmt::format("{} expects comma-separated numbers, got '{}'", flag, text));
    }
  }
  return out;
}

std::vector<power::Contingency> parse_contingencies(const std::vector<std::string>& raw) {
  std::vector<power::Contingency> out;
  for (const std::string& s : raw) {
    try {
      out.push_back(power::Contingency::parse(s));
    } catch (const PreconditionError& e) {
      throw UsageError(e.what());
    }
  }
  return out;
}

void check_format(const std::string& f) {
  if (f != "csv" && f != "json") throw UsageError(fmt::format("--format must be csv or json, got '{}'", f));
}

void check_time_grid(const Common& c) {
  if (!(c.dt > 0.0)) throw UsageError("--dt must be positive");
  if (!(c.t_max > c.dt)) throw UsageError("--tmax must exceed --dt");
  if (!(c.tol >= c.dt)) throw UsageError("--tol must be at least --dt");
}

// Writes to --output when given, otherwise to the command's stream.
void emit(const Common& c, std::ostream& out, const std::string& text) {
  if (c.output.empty()) {
    out << text;
    return;
  }
  std::ofstream file(c.output, std::ios::binary);
  if (!file) throw Error(fmt::format("cannot write {}", c.output));
  file << text;
}

std::string grid_csv(const std::vector<examples::GridSample>& grid) {
  std::ostringstream os;
  examples::write_grid_csv(os, grid);
  return os.str();
}

nlohmann::json grid_json(const std::vector<examples::GridSample>& grid) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& g : grid) rows.push_back({{"x", state_to_json(g.x)}, {"f", state_to_json(g.f)}});
  return rows;
}

nlohmann::json sets_json(const CandidateRoa& roa, const DecomposedField& field) {
  nlohmann::json sets = nlohmann::json::array();
  for (std::size_t k = 0; k < roa.sources.size(); ++k) {
    sets.push_back({{"label", k + 1 < field.size() ? field.label(k + 1) : std::string()},
                    {"polytope", roa.sources[k].polytope},
                    {"limit", roa.sources[k].limit.to_json()}});
  }
  return sets;
}

Box grid_box(const CandidateRoa& roa, const std::string& raw, double clip) {
  const std::size_t n = roa.dim();
  if (raw.empty()) return roa.omega_e.bounding_box(clip);
  const auto v = parse_list(raw, "--box");
  if (v.size() != 2 * n) throw UsageError(fmt::format("--box needs {} numbers (lo,hi per axis)", 2 * n));
  Box box{State(static_cast<Eigen::Index>(n)), State(static_cast<Eigen::Index>(n))};
  for (std::size_t j = 0; j < n; ++j) {
    box.lo(static_cast<Eigen::Index>(j)) = v[2 * j];
    box.hi(static_cast<Eigen::Index>(j)) = v[2 * j + 1];
  }
  return box;
}

// ---------------------------------------------------------------------------

struct RoaArgs {
  std::size_t resolution = 21;
  std::string box;
  double clip = 10.0;
  std::string sets_path;
};

void cmd_roa(const Common& c, const RoaArgs& a, std::ostream& out) {
  check_format(c.format);
  if (c.example.empty() == c.case_path.empty()) throw UsageError("roa needs exactly one of --example or --case");

  nlohmann::json doc;
  std::vector<examples::GridSample> grid;
  if (!c.example.empty()) {
    if (!c.contingencies.empty()) throw UsageError("--contingency applies to --case only");
    const auto sys = examples::make_example(c.example, parse_params(c.params));
    doc = {{"system", sys.name},
           {"params", sys.params},
           {"omega_e", sys.omega_e.omega_e},
           {"equilibrium", state_to_json(sys.omega_e.equilibrium)},
           {"sets", sets_json(sys.omega_e, sys.field)}};
    grid = examples::vector_field_grid(sys, grid_box(sys.omega_e, a.box, a.clip), a.resolution);
  } else {
    if (!c.params.empty()) throw UsageError("--param applies to --example only");
    if (c.contingencies.size() != 1) throw UsageError("roa --case needs exactly one --contingency");
    const auto k = parse_contingencies(c.contingencies).front();
    const power::SwingOptions swing{c.lossless};
    const auto study = cct::CaseStudy::prepare(power::load_case(resolve_case(c.case_path)), swing);
    power::validate_contingency(study.power_case, k);
    const auto post = power::kron_reduce(study.power_case, study.flow, power::Topology::post_fault(k));
    const cct::RoaOptions opts{!c.no_per_angle_bounds, c.bound};
    const auto roa = cct::build_power_roa(post, study.pre_fault_diffs(), opts, swing);
    const auto field = power::reduced_angle_field(post, swing);
    doc = {{"system", study.power_case.name},
           {"contingency", k.spec()},
           {"omega_e", roa.omega_e},
           {"equilibrium", state_to_json(roa.equilibrium)},
           {"sets", sets_json(roa, field)}};
    grid = examples::vector_field_grid(field.composite(), grid_box(roa, a.box, a.clip), a.resolution);
  }

  if (!a.sets_path.empty()) {
    std::ofstream f(a.sets_path, std::ios::binary);
    if (!f) throw Error(fmt::format("cannot write {}", a.sets_path));
    f << doc.dump(2) << '\n';
  }
  if (c.format == "json") {
    doc["grid"] = grid_json(grid);
    emit(c, out, doc.dump(2) + "\n");
  } else {
    emit(c, out, grid_csv(grid));
  }
}

// ---------------------------------------------------------------------------

struct CctArgs {
  std::size_t random = 0;
  bool no_oracle = false;
};

void cmd_cct(const Common& c, const CctArgs& a, std::ostream& out) {
  check_format(c.format);
  check_time_grid(c);
  if (c.case_path.empty()) throw UsageError("cct needs --case");
  auto contingencies = parse_contingencies(c.contingencies);
  const auto study = cct::CaseStudy::prepare(power::load_case(resolve_case(c.case_path)), {c.lossless});
  if (contingencies.empty()) contingencies = study.power_case.contingencies;
  if (a.random > 0) {
    const auto extra = cct::random_contingencies(study.power_case, a.random, c.seed, contingencies);
    contingencies.insert(contingencies.end(), extra.begin(), extra.end());
  }
  cct::ScreenOptions opts;
  opts.dt = c.dt;
  opts.t_max = c.t_max;
  opts.tol = c.tol;
  opts.roa = {!c.no_per_angle_bounds, c.bound};
  opts.run_oracle = !a.no_oracle;
  opts.jobs = c.jobs;
  const auto results = cct::screen(study, contingencies, opts);
  emit(c, out, c.format == "json" ? cct::results_to_json(results).dump(2) + "\n" : cct::results_to_csv(results));
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string x0;
  double t_end = 10.0;
  double clear = -1.0;
};

std::string trajectory_csv(const Trajectory& traj, const std::vector<std::string>& names) {
  std::string s = "t";
  for (const auto& n : names) s += "," + n;
  s += "\n";
  for (std::size_t i = 0; i < traj.size(); ++i) {
    s += fmt::format("{:.17g}", traj.times[i]);
    for (Eigen::Index j = 0; j < traj.states[i].size(); ++j) s += fmt::format(",{:.17g}", traj.states[i](j));
    s += "\n";
  }
  return s;
}

nlohmann::json trajectory_json(const Trajectory& traj, const std::vector<std::string>& names) {
  nlohmann::json states = nlohmann::json::array();
  for (const auto& x : traj.states) states.push_back(state_to_json(x));
  return {{"columns", names}, {"t", traj.times}, {"states", states}};
}

void cmd_simulate(const Common& c, const SimulateArgs& a, std::ostream& out) {
  check_format(c.format);
  if (!(c.dt > 0.0)) throw UsageError("--dt must be positive");
  if (c.example.empty() == c.case_path.empty()) throw UsageError("simulate needs exactly one of --example or --case");

  Trajectory traj;
  std::vector<std::string> names;
  if (!c.example.empty()) {
    if (!(a.t_end > 0.0)) throw UsageError("--tend must be positive");
    const auto sys = examples::make_example(c.example, parse_params(c.params));
    const std::size_t n = sys.field.dim();
    State x0 = sys.omega_e.equilibrium;
    if (!a.x0.empty()) {
      const auto v = parse_list(a.x0, "--x0");
      if (v.size() != n) throw UsageError(fmt::format("--x0 needs {} numbers", n));
      x0 = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(n));
    }
    for (std::size_t j = 0; j < n; ++j) names.push_back(fmt::format("x{}", j + 1));
    traj = integrate(sys.field, x0, a.t_end, IntegratorConfig::fixed(c.dt));
  } else {
    if (!(c.t_max > c.dt)) throw UsageError("--tmax must exceed --dt");
    if (c.contingencies.size() != 1) throw UsageError("simulate --case needs exactly one --contingency");
    const auto k = parse_contingencies(c.contingencies).front();
    const auto study = cct::CaseStudy::prepare(power::load_case(resolve_case(c.case_path)), {c.lossless});
    power::validate_contingency(study.power_case, k);
    const std::size_t n = study.n_mach();
    for (std::size_t j = 0; j < n; ++j) names.push_back(fmt::format("delta{}", j + 1));
    for (std::size_t j = 0; j < n; ++j) names.push_back(fmt::format("omega{}", j + 1));
    // Without --clear the fault stays on for the whole horizon.
    const double t_clear = a.clear < 0.0 ? c.t_max : std::min(a.clear, c.t_max);
    const auto fault = cct::fault_on_trajectory(study, k, c.dt, t_clear);
    traj = fault.trajectory;
    if (!fault.diverged && t_clear < c.t_max) {
      const auto post = power::kron_reduce(study.power_case, study.flow, power::Topology::post_fault(k));
      try {
        const Trajectory tail =
            integrate(power::swing_field(post, study.swing), traj.final_state(), c.t_max - t_clear,
                      IntegratorConfig::fixed(c.dt));
        for (std::size_t i = 1; i < tail.size(); ++i) traj.push(t_clear + tail.times[i], tail.states[i]);
      } catch (const IntegrationDiverged& e) {
        for (std::size_t i = 1; i < e.partial().size(); ++i) {
          traj.push(t_clear + e.partial().times[i], e.partial().states[i]);
        }
        log().info("post-fault run diverged at t = {:.4f}", t_clear + e.time());
      }
    }
  }
  emit(c, out, c.format == "json" ? trajectory_json(traj, names).dump(2) + "\n" : trajectory_csv(traj, names));
}

// ---------------------------------------------------------------------------

struct VerifyArgs {
  std::size_t samples = 1000;
  double t_end = 100.0;
  std::size_t facet_samples = 200;
};

bool cmd_verify(const Common& c, const VerifyArgs& a, std::ostream& out) {
  check_format(c.format);
  if (!c.case_path.empty()) throw UsageError("verify works on --example systems");
  if (!(a.t_end > 0.0)) throw UsageError("--tend must be positive");
  std::vector<std::string> names = examples::example_names();
  if (!c.example.empty()) names = {c.example};
  else if (!c.params.empty()) throw UsageError("--param needs --example");

  bool all = true;
  std::string text;
  nlohmann::json report = nlohmann::json::array();
  for (const std::string& name : names) {
    const auto sys = examples::make_example(name, parse_params(c.params));
    TrajectoryCheckOptions topt;
    topt.seed = c.seed;
    topt.jobs = c.jobs;
    const auto inv = check_trajectory_invariance(sys.field.composite(), sys.omega_e, a.samples, a.t_end, topt);
    BoundaryFlowOptions bopt;
    bopt.seed = c.seed;
    const auto flow = check_boundary_flow(sys.field, sys.omega_e, a.facet_samples, bopt);
    const auto residuals = limit_set_residuals(sys.field, sys.omega_sets);
    const double worst_residual = residuals.empty() ? 0.0 : *std::max_element(residuals.begin(), residuals.end());
    const bool limits_ok = worst_residual <= 1e-9;
    all = all && inv.passed() && flow.passed() && limits_ok;

    text += fmt::format("{} trajectories samples={} t_end={} exits={} max_terminal_distance={:.6e} {}\n", name,
                        inv.samples.size(), a.t_end, inv.exit_count(), inv.max_terminal_distance(),
                        inv.passed() ? "PASS" : "FAIL");
    text += fmt::format("{} facet_flow facets={} worst_part_max={:.6e} tol={:.1e} {}\n", name, flow.facets.size(),
                        flow.worst_part_max(), flow.tol, flow.passed() ? "PASS" : "FAIL");
    text += fmt::format("{} limit_sets worst_residual={:.6e} {}\n", name, worst_residual, limits_ok ? "PASS" : "FAIL");
    report.push_back({{"system", name},
                      {"params", sys.params},
                      {"trajectories", inv.to_json()},
                      {"facet_flow", flow.to_json()},
                      {"limit_set_residuals", residuals},
                      {"passed", inv.passed() && flow.passed() && limits_ok}});
  }
  text += fmt::format("verify {}\n", all ? "PASS" : "FAIL");
  emit(c, out, c.format == "json" ? report.dump(2) + "\n" : text);
  return all;
}

void add_common(CLI::App* sub, Common& c, bool power, bool time) {
  sub->add_option("--example", c.example, "Example system (example1, example2, example3)");
  sub->add_option("--param", c.params, "Example parameter override key=value (repeatable)");
  if (power) {
    sub->add_option("--case", c.case_path, "Case JSON (path or bundled name such as wscc9)");
    sub->add_option("--contingency", c.contingencies, "Contingency bus:<id>,line:<a>-<b> (repeatable)");
    sub->add_flag("--lossless", c.lossless, "Drop transfer conductances");
    sub->add_flag("--no-per-angle-bounds", c.no_per_angle_bounds, "Omit |y_i - ys_i| rows from Omega_e");
    sub->add_option("--bound", c.bound, "Half-width of the angle-difference rows (rad)");
  }
  if (time) {
    sub->add_option("--dt", c.dt, "Time step (s)");
    sub->add_option("--tmax", c.t_max, "Horizon (s)");
    sub->add_option("--tol", c.tol, "Oracle bisection tolerance (s)");
  }
  sub->add_option("--jobs", c.jobs, "Worker threads (0 = all cores)");
  sub->add_option("--seed", c.seed, "Sampling seed");
  sub->add_option("--format", c.format, "Output format: csv or json");
  sub->add_option("-o,--output", c.output, "Write output to this file instead of stdout");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Region-of-attraction estimation and critical clearing time screening", "roa"};
  app.require_subcommand(1);

  Common c;
  RoaArgs roa_args;
  CctArgs cct_args;
  SimulateArgs sim_args;
  VerifyArgs ver_args;

  auto* roa = app.add_subcommand("roa", "Emit Omega sets and a vector-field grid");
  add_common(roa, c, true, false);
  roa->add_option("--resolution", roa_args.resolution, "Grid points per axis");
  roa->add_option("--box", roa_args.box, "Grid box lo1,hi1,lo2,hi2,...");
  roa->add_option("--clip", roa_args.clip, "Clip for unbounded directions of the default grid box");
  roa->add_option("--sets", roa_args.sets_path, "Also write the Omega sets JSON here");

  auto* cct = app.add_subcommand("cct", "Critical clearing times for a list of contingencies");
  add_common(cct, c, true, true);
  cct->add_option("--random", cct_args.random, "Append this many seeded random line trips");
  cct->add_flag("--no-oracle", cct_args.no_oracle, "Skip the time-domain bisection");

  auto* sim = app.add_subcommand("simulate", "Integrate an example or a fault/clear sequence");
  add_common(sim, c, true, true);
  sim->add_option("--x0", sim_args.x0, "Initial state x1,x2,... (examples)");
  sim->add_option("--tend", sim_args.t_end, "Horizon for examples (s)");
  sim->add_option("--clear", sim_args.clear, "Clearing time (s); fault stays on when omitted");

  auto* verify = app.add_subcommand("verify", "Invariance property checks on the example systems");
  add_common(verify, c, false, false);
  verify->add_option("--samples", ver_args.samples, "Sampled initial states per system");
  verify->add_option("--tend", ver_args.t_end, "Integration horizon");
  verify->add_option("--facet-samples", ver_args.facet_samples, "Boundary samples per facet");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }

  try {
    if (*roa) {
      cmd_roa(c, roa_args, out);
    } else if (*cct) {
      cmd_cct(c, cct_args, out);
    } else if (*sim) {
      cmd_simulate(c, sim_args, out);
    } else if (*verify) {
      return cmd_verify(c, ver_args, out) ? 0 : 1;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace roa::cli
