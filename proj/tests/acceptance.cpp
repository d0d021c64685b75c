// Acceptance runner: one PASS/FAIL line per criterion, with the measured
// values underneath. `roa_acceptance` runs all; `--criterion N` runs one.

#include <fmt/format.h>

#include <array>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <memory>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "roa/cct.hpp"
#include "roa/example_systems.hpp"
#include "roa/invariance.hpp"

using namespace roa;
using power::Contingency;

namespace {

const std::filesystem::path kData(ROA_DATA_DIR);

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Verdict {
  bool pass = true;
  std::vector<std::string> notes;

  void check(bool ok, std::string note) {
    pass = pass && ok;
    notes.push_back(fmt::format("{} {}", ok ? "ok  " : "FAIL", note));
  }
  void info(std::string note) { notes.push_back("info " + note); }
};

// 1 ------------------------------------------------------------------------

Verdict examples_invariance() {
  Verdict v;
  const auto t0 = Clock::now();
  for (const auto& name : examples::example_names()) {
    const auto sys = examples::make_example(name);
    TrajectoryCheckOptions opt;
    opt.seed = 2024;
    const auto rep = check_trajectory_invariance(sys.field.composite(), sys.omega_e, 1000, 100.0, opt);
    v.check(rep.samples.size() == 1000 && rep.exit_count() == 0,
            fmt::format("{}: {} samples, {} exits", name, rep.samples.size(), rep.exit_count()));
    v.check(rep.max_terminal_distance() <= 1e-3,
            fmt::format("{}: max terminal distance to ({:.5f}, {:.5f}) = {:.3e} (<= 1e-3)", name,
                        sys.omega_e.equilibrium(0), sys.omega_e.equilibrium(1), rep.max_terminal_distance()));
  }
  const double t = seconds_since(t0);
  v.check(t <= 30.0, fmt::format("runtime {:.2f} s (<= 30 s)", t));
  return v;
}

// 2 ------------------------------------------------------------------------

Verdict facet_flow() {
  Verdict v;
  const auto t0 = Clock::now();
  for (const auto& name : examples::example_names()) {
    const auto sys = examples::make_example(name);
    const auto rep = check_boundary_flow(sys.field, sys.omega_e, 2000);
    std::size_t sampled = 0;
    for (const auto& f : rep.facets) sampled += f.samples > 0 ? 1 : 0;
    v.check(rep.passed() && rep.worst_part_max() <= 1e-7,
            fmt::format("{}: {} facets sampled, worst per-sub-field max {:.3e} (<= 1e-7)", name, sampled,
                        rep.worst_part_max()));
    v.check(rep.composite_bounded(), fmt::format("{}: composite max bounded by the part maxima", name));
  }
  const double t = seconds_since(t0);
  v.check(t <= 5.0, fmt::format("runtime {:.2f} s (<= 5 s)", t));
  return v;
}

// 3 ------------------------------------------------------------------------

Verdict integrator_order() {
  Verdict v;
  const VectorField decay(1, [](const State& x) { return State(-x); });
  std::vector<double> errs;
  for (double h : {1e-2, 5e-3, 2.5e-3}) {
    const auto tr = integrate(decay, State::Ones(1), 1.0, IntegratorConfig::fixed(h));
    errs.push_back(std::abs(tr.final_state()(0) - std::exp(-1.0)));
    v.info(fmt::format("h = {:g}: |error| = {:.6e}", h, errs.back()));
  }
  for (std::size_t i = 1; i < errs.size(); ++i) {
    const double ratio = errs[i - 1] / errs[i];
    v.check(ratio >= 14.0 && ratio <= 18.0, fmt::format("error ratio {:.4f} in [14, 18]", ratio));
  }
  return v;
}

// 4 ------------------------------------------------------------------------

Verdict polytope_lp() {
  Verdict v;
  std::mt19937_64 rng(404);
  std::normal_distribution<double> g(0.0, 1.0);
  std::size_t agree = 0;
  const std::size_t checks = 10000;
  for (std::size_t trial = 0; trial < checks; ++trial) {
    const auto n = static_cast<Eigen::Index>(1 + rng() % 6);
    const auto m = static_cast<Eigen::Index>(1 + rng() % 16);
    Eigen::MatrixXd a(m, n);
    Eigen::VectorXd b(m);
    for (auto& x : a.reshaped()) x = g(rng);
    for (auto& x : b) x = g(rng);
    for (Eigen::Index i = 0; i < m; ++i) {
      if (a.row(i).isZero(0.0) && b(i) < 0.0) b(i) = 0.0;
    }
    const HalfspacePolytope p(a, b);
    State x(n);
    for (auto& c : x) c = g(rng);
    if (trial % 3 == 0) {
      const Eigen::Index i = static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(m));
      x += a.row(i).transpose() * ((b(i) - a.row(i).dot(x)) / a.row(i).squaredNorm());
    }
    // Split the rows in two and check the intersection too.
    const Eigen::Index half = m / 2;
    bool split_ok = true;
    if (half > 0) {
      const std::vector<HalfspacePolytope> parts{HalfspacePolytope(a.topRows(half), b.head(half)),
                                                 HalfspacePolytope(a.bottomRows(m - half), b.tail(m - half))};
      split_ok = intersect(parts).contains(x) == (parts[0].contains(x) && parts[1].contains(x));
    }
    if (p.contains(x) == oracle::conjunction(a, b, x, kMembershipTol) && split_ok) ++agree;
  }
  v.check(agree == checks, fmt::format("membership vs conjunction: {}/{} agree", agree, checks));

  std::size_t lp_agree = 0;
  std::size_t empties = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t dim = 1 + static_cast<std::size_t>(trial % 6);
    const auto rp = oracle::random_small_polytope(rng, dim, trial % 2 == 1);
    const HalfspacePolytope p(rp.a, rp.b);
    const bool sampled_empty = !oracle::rejection_witness(rp.a, rp.b, 1000 + static_cast<std::uint64_t>(trial), 2'000'000);
    empties += sampled_empty ? 1 : 0;
    if (p.is_empty() == sampled_empty) ++lp_agree;
  }
  v.check(lp_agree == 100,
          fmt::format("is_empty vs rejection sampling: {}/100 agree ({} empty)", lp_agree, empties));
  return v;
}

// 5 ------------------------------------------------------------------------

Verdict exit_scan_equivalence() {
  Verdict v;
  std::mt19937_64 rng(505);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::size_t agree = 0;
  std::size_t exits = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t dim = 1 + static_cast<std::size_t>(trial % 4);
    const auto n = static_cast<Eigen::Index>(dim);
    // Random bounded polytope around the origin.
    const auto rp = oracle::random_small_polytope(rng, dim, false);
    Eigen::VectorXd b = 3.0 * rp.b;
    const CandidateRoa roa{HalfspacePolytope(rp.a, b), State::Zero(n), {}};
    Trajectory traj;
    State x = State::Zero(n);
    double t = 0.0;
    traj.push(t, x);
    for (int k = 0; k < 8; ++k) {
      t += 0.05 + std::abs(u(rng));
      for (auto& c : x) c += 2.0 * u(rng);
      traj.push(t, x);
    }
    const double dt = 1e-2;
    const auto r = cct::polytope_exit_cct(roa, traj, dt, t);
    const std::size_t steps = static_cast<std::size_t>(std::floor(t / dt + 1e-9));
    const auto first = oracle::first_exit(steps, [&](std::size_t k) {
      return oracle::conjunction(rp.a, b, traj.state_at(static_cast<double>(k) * dt), kMembershipTol);
    });
    bool same = false;
    if (!first) {
      same = r.status == cct::Status::never_exits && r.t_c_polytope == static_cast<double>(steps) * dt;
    } else if (*first == 0) {
      same = r.status == cct::Status::starts_outside;
    } else {
      same = r.status == cct::Status::ok && r.t_c_polytope == static_cast<double>(*first - 1) * dt;
      ++exits;
    }
    agree += same ? 1 : 0;
  }
  v.check(agree == 1000, fmt::format("{}/1000 trajectories agree exactly ({} with an exit)", agree, exits));
  return v;
}

// 6-8 ----------------------------------------------------------------------

std::string row(const cct::CctResult& r) {
  return fmt::format("{:>3} / {:<6} polytope {:.3f} s  oracle {:.3f} s  [{} / {}]", r.contingency.faulted_bus,
                     r.contingency.line(), r.t_c_polytope, r.t_c_oracle, cct::status_name(r.status),
                     cct::oracle_status_name(r.oracle_status));
}

Verdict wscc9_table() {
  Verdict v;
  const auto t0 = Clock::now();
  const auto study = cct::CaseStudy::prepare(power::load_case(kData / "wscc9.json"));
  const auto results = cct::screen(study, study.power_case.contingencies);
  const std::array<double, 3> poly{0.365, 0.265, 0.295};
  const std::array<double, 3> orac{0.377, 0.300, 0.310};
  for (std::size_t i = 0; i < results.size() && i < 3; ++i) {
    const auto& r = results[i];
    v.info(row(r));
    v.check(r.status == cct::Status::ok && std::abs(r.t_c_polytope - poly[i]) <= 0.05,
            fmt::format("{}: polytope {:.3f} vs {:.3f} +- 0.05", r.contingency.spec(), r.t_c_polytope, poly[i]));
    v.check(r.oracle_status == cct::OracleStatus::ok && std::abs(r.t_c_oracle - orac[i]) <= 0.05,
            fmt::format("{}: oracle {:.3f} vs {:.3f} +- 0.05", r.contingency.spec(), r.t_c_oracle, orac[i]));
  }
  v.check(results.size() == 3, fmt::format("{} contingencies in the bundled case", results.size()));

  // Sensitivity of the polytope estimate to the open modelling choices.
  struct Variant {
    const char* label;
    cct::RoaOptions roa;
    bool lossless;
  };
  for (const Variant& var : {Variant{"no per-angle rows", {false, std::numbers::pi}, false},
                             Variant{"bound pi/2", {true, std::numbers::pi / 2}, false},
                             Variant{"lossless", {true, std::numbers::pi}, true}}) {
    const auto s = var.lossless ? cct::CaseStudy::prepare(study.power_case, {true}) : study;
    cct::ScreenOptions opt;
    opt.roa = var.roa;
    opt.run_oracle = var.lossless;
    std::string line = fmt::format("sensitivity, {}:", var.label);
    for (const auto& r : cct::screen(s, s.power_case.contingencies, opt)) {
      line += fmt::format(" {:.3f}", r.t_c_polytope);
      if (var.lossless) line += fmt::format("/{:.3f}", r.t_c_oracle);
    }
    v.info(line);
  }
  const double t = seconds_since(t0);
  v.check(t <= 120.0, fmt::format("runtime {:.2f} s (<= 120 s)", t));
  return v;
}

Verdict ieee39_table() {
  Verdict v;
  const auto t0 = Clock::now();
  const auto study = cct::CaseStudy::prepare(power::load_case(kData / "ieee39.json"));
  const auto results = cct::screen(study, study.power_case.contingencies);
  const std::array<double, 6> reference_poly{0.483, 0.482, 0.401, 0.450, 0.439, 0.514};
  const std::array<double, 6> reference_oracle{0.640, 0.560, 0.470, 0.530, 0.560, 0.630};
  bool all_ok = results.size() == 6;
  bool all_conservative = results.size() == 6;
  bool in_range = results.size() == 6;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    v.info(row(r) + (i < 6 ? fmt::format("  (reference: {:.3f} / {:.3f})", reference_poly[i], reference_oracle[i]) : ""));
    all_ok = all_ok && r.status == cct::Status::ok && r.oracle_status == cct::OracleStatus::ok;
    all_conservative = all_conservative && r.conservative();
    in_range = in_range && r.t_c_oracle >= 0.2 && r.t_c_oracle <= 1.0;
  }
  v.check(all_ok, "(a) all six contingencies have status ok");
  v.check(all_conservative, "(b) t_c_polytope <= t_c_oracle on every row");
  v.check(in_range, "(c) oracle CCTs within [0.2, 1.0] s");
  v.info("(d) reference values are listed beside each row for comparison only");
  const double t = seconds_since(t0);
  v.check(t <= 600.0, fmt::format("runtime {:.2f} s (<= 600 s)", t));
  return v;
}

Verdict conservatism() {
  Verdict v;
  std::size_t total = 0;
  std::size_t conservative = 0;
  std::size_t skipped = 0;
  for (const char* name : {"wscc9.json", "ieee39.json"}) {
    const auto study = cct::CaseStudy::prepare(power::load_case(kData / name));
    auto list = study.power_case.contingencies;
    const auto extra = cct::random_contingencies(study.power_case, 20, 88, list);
    v.info(fmt::format("{}: {} listed + {} random contingencies (pool limited to non-bridge lines)", name, list.size(),
                       extra.size()));
    list.insert(list.end(), extra.begin(), extra.end());
    for (const auto& r : cct::screen(study, list)) {
      if (r.status != cct::Status::ok || r.oracle_status != cct::OracleStatus::ok) {
        ++skipped;
        v.info(fmt::format("{}: not comparable, {}", name, row(r)));
        continue;
      }
      ++total;
      if (r.conservative()) {
        ++conservative;
      } else {
        v.info(fmt::format("{}: {}", name, row(r)));
      }
    }
  }
  v.check(total > 0 && conservative == total,
          fmt::format("t_c_polytope <= t_c_oracle on {}/{} comparable contingencies ({} without a CCT pair)",
                      conservative, total, skipped));
  return v;
}

// 9 ------------------------------------------------------------------------

std::string capture(const std::string& cmd) {
  std::string out;
  std::unique_ptr<FILE, int (*)(FILE*)> pipe(popen(cmd.c_str(), "r"), pclose);
  if (!pipe) return out;
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe.get())) > 0) out.append(buf.data(), n);
  return out;
}

Verdict determinism() {
  Verdict v;
  const std::string cli = ROA_CLI_PATH;
  for (const std::string args : {std::string("verify --samples 200 --tend 50 --seed 17"),
                                 std::string("cct --case wscc9 --random 3 --seed 17 --format json")}) {
    const std::string a = capture(cli + " " + args);
    const std::string b = capture(cli + " " + args);
    v.check(!a.empty() && a == b, fmt::format("`roa {}`: {} bytes, identical = {}", args, a.size(), a == b));
  }
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::strcmp(argv[i], "--criterion") == 0) only = std::atoi(argv[i + 1]);
  }
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
      {"examples invariance", examples_invariance},
      {"facet-flow certification", facet_flow},
      {"RK4 order", integrator_order},
      {"polytope/LP correctness", polytope_lp},
      {"polytope exit scan vs brute force", exit_scan_equivalence},
      {"WSCC 3-machine CCT table", wscc9_table},
      {"39-bus study", ieee39_table},
      {"conservatism invariant", conservatism},
      {"determinism", determinism},
  };
  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (only != 0 && static_cast<std::size_t>(only) != i + 1) continue;
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v.check(false, fmt::format("exception: {}", e.what()));
    }
    all = all && v.pass;
    fmt::print("criterion {}: {} {}\n", i + 1, v.pass ? "PASS" : "FAIL", criteria[i].first);
    for (const auto& n : v.notes) fmt::print("    {}\n", n);
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
