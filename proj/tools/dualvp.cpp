// dualvp command line: one JSON config per run, CSV outputs and a manifest.
//
// Exit codes: 0 success, 2 configuration / dimension / unsupported,
// 3 non-convergence or divergence, 4 numerical singularity.

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <iostream>
#include <thread>

#include "dualvp/config.hpp"
#include "dualvp/constraint_reduction.hpp"
#include "dualvp/hamiltonian.hpp"
#include "dualvp/periodic.hpp"

using namespace dualvp;
namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "0.1.0";

struct Table {
  std::string name;
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

Table table_of(const std::string& name, const TrajectoryGrid& tr) {
  Table t{name, {"t"}, {}};
  for (const auto& c : tr.columns()) t.header.push_back(c);
  for (int i = 0; i < tr.n_nodes(); ++i) {
    std::vector<double> row{tr.t(i)};
    for (int k = 0; k < tr.dim(); ++k) row.push_back(tr.values()(k, i));
    t.rows.push_back(std::move(row));
  }
  return t;
}

struct Run {
  Json config;
  fs::path out;
  int threads = 1;
  Json results = Json::object();
  Json tolerances = Json::object();
  std::vector<Table> tables;
  std::vector<std::string> files;
  int exit_code = 0;
};

using Job = std::function<void(Run&)>;

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const SingularityError*>(&e)) return 4;
  if (dynamic_cast<const ConvergenceError*>(&e) || dynamic_cast<const DivergenceError*>(&e))
    return 3;
  return 2;
}

Json describe(const std::exception& e) {
  Json j;
  j["message"] = e.what();
  if (dynamic_cast<const SingularityError*>(&e)) j["type"] = "singularity";
  else if (auto c = dynamic_cast<const ConvergenceError*>(&e)) {
    j["type"] = "convergence";
    j["last_residual"] = c->last_residual();
  } else if (auto d = dynamic_cast<const DivergenceError*>(&e)) {
    j["type"] = "divergence";
    j["last_good_time"] = d->last_good_time();
  } else if (dynamic_cast<const DimensionError*>(&e)) j["type"] = "dimension";
  else if (dynamic_cast<const UnsupportedError*>(&e)) j["type"] = "unsupported";
  else if (dynamic_cast<const ConfigError*>(&e)) j["type"] = "config";
  else j["type"] = "internal";
  return j;
}

const Json& section(const Json& cfg, const char* key) {
  if (!cfg.contains(key)) throw ConfigError(std::string("config has no '") + key + "' section");
  return cfg[key];
}

double horizon(const Json& cfg) {
  const double T = json_required_number(cfg, "T");
  if (!(T > 0.0)) throw ConfigError("T must be positive");
  return T;
}

double step(const Json& cfg, double T) {
  const double h = json_number(cfg, "h", 1e-3);
  if (!(h > 0.0) || h > T / 10.0) throw ConfigError("h must satisfy 0 < h <= T/10");
  return h;
}

Json invertibility_json(const InvertibilityReport& r) {
  return {{"min_singular_value", r.min_singular_value},
          {"min_eigenvalue", r.min_eigenvalue},
          {"worst_node", r.worst_node},
          {"threshold", r.threshold},
          {"recommended_c_scale", r.recommended_c_scale},
          {"ok", r.ok}};
}

InvertibilityReport scan_initial_guess(const ActionAssembly& a, DualTrajectory& d) {
  a.apply_bcs(d);
  const Mat R = dual_rates(a, d.D);
  std::vector<ExtendedDual> nodes;
  std::vector<double> times;
  for (int i = 0; i < a.nodes(); ++i) {
    nodes.push_back(node_dual(d, R, i));
    times.push_back(a.t(i));
  }
  return check_invertibility(*a.model, a.hp, nodes, times);
}

double sup_distance(const TrajectoryGrid& a, const TrajectoryGrid& ref) {
  double e = 0.0;
  for (int k = 0; k < a.dim(); ++k) {
    int r = -1;
    for (int q = 0; q < ref.dim(); ++q)
      if (ref.columns()[q] == a.columns()[k]) r = q;
    if (r < 0) continue;
    e = std::max(e, (a.values().row(k) - ref.values().row(r)).cwiseAbs().maxCoeff());
  }
  return e;
}

// ---------------------------------------------------------------------------

Job prepare_integrate(const Json& cfg) {
  const SystemConfig sys = parse_system(section(cfg, "system"));
  const double T = horizon(cfg), h = step(cfg, T);
  if (sys.spec.force_law == ForceLaw::free_Q)
    throw UnsupportedError("free_Q leaves the constraint force undetermined; pick a force law");
  return [=](Run& run) {
    const TrajectoryGrid tr = integrate_ivp(sys.spec, T, h);
    run.tables.push_back(table_of("trajectory", tr));
    const InvariantReport inv = monitor_invariants(sys.spec, tr);
    run.results["final_state"] = vec_json(tr.values().col(tr.n_nodes() - 1));
    if (!sys.spec.first_order()) {
      run.results["max_constraint_residual"] = inv.max_constraint_residual;
      run.results["max_power"] = inv.max_power;
      run.results["max_W_residual"] = inv.max_W_residual;
      run.results["max_K_increase"] = inv.max_K_increase;
      run.results["max_K_deviation"] = inv.max_K_deviation;
    }
    run.tolerances["h"] = h;
  };
}

Job prepare_dual_solve(const Json& cfg) {
  const SystemConfig sys = parse_system(section(cfg, "system"));
  const double T = horizon(cfg), h = step(cfg, T);
  auto model = model_for(sys);
  const DualConfig dc = parse_dual(cfg.value("dual", Json::object()), *model);
  const ActionAssembly a = build_assembly(sys, dc, T, h);
  return [=](Run& run) {
    run.tolerances["tol_newton"] = dc.solve.tol_newton;
    DualTrajectory guess = a.zero_dual();
    const InvertibilityReport inv = scan_initial_guess(a, guess);
    run.results["invertibility"] = invertibility_json(inv);
    if (!inv.ok)
      throw SingularityError(
          "DtP Jacobian not safely invertible at the initial dual guess; scale c by at least " +
          format_double(inv.recommended_c_scale));
    const SolveResult res = solve_dual_bvp(a, dc.solve);
    run.results["converged"] = res.converged;
    run.results["residual"] = res.residual_norm;
    run.results["iterations"] = res.iterations;
    Json log = Json::array();
    for (const auto& r : res.log)
      log.push_back({{"iteration", r.iteration}, {"residual", r.residual},
                     {"step_norm", r.step_norm}, {"alpha", r.alpha}});
    run.results["log"] = log;
    const TrajectoryGrid U = recover_primal(a, res.dual);
    run.tables.push_back(table_of("primal", U));
    write_action_csv((run.out / "dual.csv").string(), a, res.dual);
    run.files.push_back("dual.csv");
    if (dc.base == "oracle" || sys.spec.force_law != ForceLaw::free_Q) {
      try {
        run.results["oracle_sup_error"] = sup_distance(U, oracle_for(sys, T, h));
      } catch (const Error&) {
      }
    }
    if (!res.converged) run.exit_code = 3;
  };
}

Job prepare_dtp_check(const Json& cfg) {
  const SystemConfig sys = parse_system(section(cfg, "system"));
  const double T = horizon(cfg), h = step(cfg, T);
  auto model = model_for(sys);
  const DualConfig dc = parse_dual(cfg.value("dual", Json::object()), *model);
  const ActionAssembly a = build_assembly(sys, dc, T, h);
  return [=](Run& run) {
    DualTrajectory d = a.zero_dual();
    const InvertibilityReport inv = scan_initial_guess(a, d);
    run.results["invertibility"] = invertibility_json(inv);
    const Mat R = dual_rates(a, d.D);
    Table t{"dtp_check", {"t", "stationarity", "closed_vs_generic"}, {}};
    double worst = 0.0, worst_gap = 0.0;
    for (int i = 0; i < a.nodes(); ++i) {
      const ExtendedDual e = node_dual(d, R, i);
      const Vec U = dtp(*a.model, a.hp, e, a.t(i), DtpRoute::generic);
      const double st =
          stationarity_residual(*a.model, a.hp, e, a.t(i), U).lpNorm<Eigen::Infinity>();
      double gap = 0.0;
      if (const auto cf = a.model->closed_form_dtp(e, a.hp, a.t(i)))
        gap = (*cf - U).lpNorm<Eigen::Infinity>();
      worst = std::max(worst, st);
      worst_gap = std::max(worst_gap, gap);
      t.rows.push_back({a.t(i), st, gap});
    }
    run.tables.push_back(std::move(t));
    run.results["max_stationarity"] = worst;
    run.results["max_closed_vs_generic"] = worst_gap;
    run.tolerances["dtp"] = kEpsDtp;
    if (!inv.ok)
      throw SingularityError("DtP Jacobian not safely invertible; scale c by at least " +
                             format_double(inv.recommended_c_scale));
  };
}

Job prepare_hamiltonian(const Json& cfg) {
  const SystemConfig sys = parse_system(section(cfg, "system"));
  const double T = horizon(cfg), h = step(cfg, T);
  auto model = model_for(sys);
  Json dj = cfg.value("dual", Json::object());
  if (!dj.contains("base")) dj["base"] = "zero";
  const DualConfig dc = parse_dual(dj, *model);
  if (dc.base == "oracle")
    throw UnsupportedError("the dual Hamiltonian is conserved only for a constant base state");
  const ActionAssembly a = build_assembly(sys, dc, T, h);
  const double C = json_number(cfg.value("hamiltonian", Json::object()), "C", 100.0);
  return [=](Run& run) {
    const SolveResult res = solve_dual_bvp(a, dc.solve);
    const ConservationReport rep = check_conservation(a, res.dual, res.converged, C);
    Table t{"hamiltonian", {"t", "H"}, {}};
    for (std::size_t i = 0; i < rep.t.size(); ++i) t.rows.push_back({rep.t[i], rep.H[i]});
    run.tables.push_back(std::move(t));
    run.results["converged"] = res.converged;
    run.results["residual"] = res.residual_norm;
    run.results["drift"] = rep.drift;
    run.results["relative_drift"] = rep.relative_drift;
    run.results["bound"] = rep.bound;
    run.results["pass"] = rep.pass;
    if (!rep.note.empty()) run.results["note"] = rep.note;
    run.tolerances["C"] = C;
    if (!res.converged) run.exit_code = 3;
  };
}

Job prepare_reduce(const Json& cfg) {
  const SystemConfig sys = parse_system(section(cfg, "system"));
  const double T = horizon(cfg), h = step(cfg, T);
  std::shared_ptr<ConstrainedSystem> cs = constrained_system(sys.spec);
  const std::vector<int> elim = parse_eliminate(cfg.value("reduce", Json()), cs->dof());
  return [=](Run& run) {
    const ReductionResult r = integrate_reduced(*cs, sys.spec.x0, sys.spec.v0, T, h, elim);
    Table t{"reduction", {"t"}, {}};
    for (const auto& c : r.traj.columns()) t.header.push_back(c);
    for (int i = 1; i <= r.forces.rows(); ++i) t.header.push_back("Fc" + std::to_string(i));
    for (int i = 0; i < r.traj.n_nodes(); ++i) {
      std::vector<double> row{r.traj.t(i)};
      for (int k = 0; k < r.traj.dim(); ++k) row.push_back(r.traj.values()(k, i));
      for (int k = 0; k < r.forces.rows(); ++k) row.push_back(r.forces(k, i));
      t.rows.push_back(std::move(row));
    }
    run.tables.push_back(std::move(t));
    Json ev = Json::array();
    for (const auto& e : r.events)
      ev.push_back({{"t", e.t}, {"eliminated", e.indices_s}, {"retained", e.indices_r},
                    {"sigma", e.sigma}});
    run.results["split_events"] = ev;
    run.results["max_constraint"] = r.max_constraint;
    run.tolerances["constraint"] = kEpsConstraint;
    run.tolerances["rank"] = kEpsRank;
  };
}

Job prepare_periodic(const Json& cfg) {
  const SystemConfig sys = parse_system(section(cfg, "system"));
  const PeriodicConfig pc = parse_periodic(section(cfg, "periodic"), sys);
  return [=](Run& run) {
    const PeriodicResult r = find_periodic_orbit(pc.problem, pc.options);
    run.tables.push_back(table_of("orbit", r.orbit));
    run.results["P"] = r.P;
    run.results["period"] = 2.0 * std::numbers::pi * r.P;
    run.results["converged"] = r.converged;
    run.results["collapsed"] = r.collapsed;
    run.results["residual"] = r.residual;
    run.results["phase_residual"] = r.phase_residual;
    run.results["closure"] = r.closure;
    run.results["shooting_gap"] = r.shooting_gap;
    run.results["iterations"] = r.iterations;
    if (!r.message.empty()) run.results["message"] = r.message;
    run.tolerances["tol"] = pc.options.tol;
    if (!pc.sweep.empty()) {
      std::vector<PeriodicProblem> probs;
      for (double g : pc.sweep) {
        PeriodicProblem p = pc.problem;
        p.P_guess = g;
        probs.push_back(p);
      }
      const auto out = sweep_periodic(probs, pc.options, run.threads);
      Table t{"sweep", {"P_guess", "P", "converged", "collapsed", "residual"}, {}};
      for (std::size_t i = 0; i < out.size(); ++i)
        t.rows.push_back({pc.sweep[i], out[i].P, out[i].converged ? 1.0 : 0.0,
                          out[i].collapsed ? 1.0 : 0.0, out[i].residual});
      run.tables.push_back(std::move(t));
    }
    if (!r.converged || r.collapsed) run.exit_code = 3;
  };
}

Job prepare_compare(const Json& cfg) {
  const SystemConfig sys = parse_system(section(cfg, "system"));
  const double T = horizon(cfg), h = step(cfg, T);
  const Json& cmp = section(cfg, "compare");
  const std::string mode = cmp.value("mode", "laws");

  if (mode == "laws") {
    if (!cmp.contains("laws") || !cmp["laws"].is_array() || cmp["laws"].size() != 2)
      throw ConfigError("compare.laws must list two force laws");
    std::vector<SystemSpec> specs;
    for (const auto& l : cmp["laws"]) {
      SystemSpec s = sys.spec;
      if (!l.is_string()) throw ConfigError("compare.laws entries must be strings");
      s.force_law = force_law_from_string(l.get<std::string>());
      validate(s);
      specs.push_back(s);
    }
    return [=](Run& run) {
      const TrajectoryGrid a = integrate_ivp(specs[0], T, h);
      const TrajectoryGrid b = integrate_ivp(specs[1], T, h);
      const int n = specs[0].dims.dof();
      Table t{"compare", {"t"}, {}};
      for (int k = 0; k < n; ++k) t.header.push_back("dx" + std::to_string(k + 1));
      Vec maxdiff = Vec::Zero(n);
      for (int i = 0; i < a.n_nodes(); ++i) {
        std::vector<double> row{a.t(i)};
        for (int k = 0; k < n; ++k) {
          const double d = b.values()(k, i) - a.values()(k, i);
          maxdiff(k) = std::max(maxdiff(k), std::abs(d));
          row.push_back(d);
        }
        t.rows.push_back(std::move(row));
      }
      run.tables.push_back(std::move(t));
      run.tables.push_back(table_of("first", a));
      run.tables.push_back(table_of("second", b));
      run.results["max_abs_difference"] = vec_json(maxdiff);
      for (int s = 0; s < 2; ++s) {
        const InvariantReport inv = monitor_invariants(specs[s], s == 0 ? a : b);
        run.results[s == 0 ? "first" : "second"] = {
            {"law", std::string(to_string(specs[s].force_law))},
            {"max_constraint_residual", inv.max_constraint_residual},
            {"max_K_deviation", inv.max_K_deviation}};
      }
    };
  }
  if (mode == "gauge") {
    auto model = model_for(sys);
    const DualConfig d1 = parse_dual(cfg.value("dual", Json::object()), *model);
    if (!cmp.contains("dual_alt")) throw ConfigError("compare.dual_alt is required in gauge mode");
    const DualConfig d2 = parse_dual(cmp["dual_alt"], *model);
    const ActionAssembly a1 = build_assembly(sys, d1, T, h);
    const ActionAssembly a2 = build_assembly(sys, d2, T, h);
    const double tol = json_number(cmp, "tol", 1e-2);
    return [=](Run& run) {
      const GaugeReport g = gauge_compare(a1, a2, d1.solve, tol);
      run.results["distance"] = g.distance;
      run.results["conclusive"] = g.conclusive;
      run.results["pass"] = g.pass;
      run.results["first_converged"] = g.first.converged;
      run.results["second_converged"] = g.second.converged;
      run.tables.push_back(table_of("first", recover_primal(a1, g.first.dual)));
      run.tables.push_back(table_of("second", recover_primal(a2, g.second.dual)));
      run.tolerances["gauge"] = tol;
      if (!g.conclusive) run.exit_code = 3;
    };
  }
  if (mode == "reduction") {
    std::shared_ptr<ConstrainedSystem> cs = constrained_system(sys.spec);
    const std::vector<int> elim = parse_eliminate(cfg.value("reduce", Json()), cs->dof());
    SystemSpec gauss = sys.spec;
    gauss.force_law = ForceLaw::gauss;
    return [=](Run& run) {
      const ReductionResult r = integrate_reduced(*cs, sys.spec.x0, sys.spec.v0, T, h, elim);
      const TrajectoryGrid g = integrate_ivp(gauss, T, h);
      run.results["max_divergence"] = sup_distance(r.traj, g);
      run.tables.push_back(table_of("reduced", r.traj));
      run.tables.push_back(table_of("gauss", g.slice_rows(0, r.traj.dim())));
    };
  }
  throw ConfigError("compare.mode must be laws, gauge or reduction");
}

Job prepare(const std::string& cmd, const Json& cfg) {
  if (!cfg.is_object()) throw ConfigError("config must be a JSON object");
  if (cmd == "integrate") return prepare_integrate(cfg);
  if (cmd == "dual-solve") return prepare_dual_solve(cfg);
  if (cmd == "dtp-check") return prepare_dtp_check(cfg);
  if (cmd == "hamiltonian") return prepare_hamiltonian(cfg);
  if (cmd == "reduce") return prepare_reduce(cfg);
  if (cmd == "periodic") return prepare_periodic(cfg);
  if (cmd == "compare") return prepare_compare(cfg);
  throw ConfigError("unknown subcommand " + cmd);
}

int thread_count() {
  if (const char* env = std::getenv("DUALVP_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void write_table(const fs::path& dir, const Table& t, bool plot, std::vector<std::string>& files) {
  const std::string name = t.name + ".csv";
  write_series_csv((dir / name).string(), t.header, t.rows);
  files.push_back(name);
  if (!plot || t.header.empty() || t.header[0] != "t") return;
  fs::create_directories(dir / "plot");
  for (std::size_t k = 1; k < t.header.size(); ++k) {
    std::vector<std::vector<double>> rows;
    rows.reserve(t.rows.size());
    for (const auto& r : t.rows) rows.push_back({r[0], r[k]});
    const std::string p = "plot/" + t.name + "_" + t.header[k] + ".csv";
    write_series_csv((dir / p).string(), {"t", "value"}, rows);
    files.push_back(p);
  }
}

int execute(const std::string& cmd, const std::string& config_path, const std::string& out,
            bool plot) {
  const auto start = std::chrono::steady_clock::now();
  Json cfg;
  Job job;
  try {
    cfg = read_json_file(config_path);
    job = prepare(cmd, cfg);
  } catch (const std::exception& e) {
    // nothing is written for a configuration the run never started on
    Json diag = {{"subcommand", cmd}, {"status", "error"}, {"error", describe(e)}};
    diag["exit_code"] = exit_code_for(e);
    std::cerr << diag.dump(2) << "\n";
    return exit_code_for(e);
  }

  Run run;
  run.config = cfg;
  run.out = out;
  run.threads = thread_count();
  fs::create_directories(run.out);
  Json error;
  try {
    job(run);
  } catch (const std::exception& e) {
    run.exit_code = exit_code_for(e);
    error = describe(e);
  }
  for (const auto& t : run.tables) write_table(run.out, t, plot, run.files);

  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  Json m;
  m["subcommand"] = cmd;
  m["config"] = cfg;
  m["config_path"] = config_path;
  m["versions"] = {{"dualvp", kVersion}, {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                                     std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                                     std::to_string(EIGEN_MINOR_VERSION)}};
  m["timings"] = {{"total_seconds", secs}};
  m["threads"] = run.threads;
  m["results"] = run.results;
  m["tolerances"] = run.tolerances;
  m["outputs"] = run.files;
  m["exit_code"] = run.exit_code;
  m["status"] = run.exit_code == 0 ? "ok" : "error";
  if (!error.is_null()) m["error"] = error;
  std::ofstream((run.out / "manifest.json").string()) << m.dump(2) << "\n";
  if (!error.is_null()) std::cerr << "dualvp " << cmd << ": " << error["message"].get<std::string>() << "\n";
  return run.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dual variational solver for ODE and constrained mechanics problems"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  struct Opts {
    std::string config, out = "out";
    bool plot = false;
  };
  std::vector<std::pair<CLI::App*, std::shared_ptr<Opts>>> subs;
  const std::vector<std::pair<std::string, std::string>> names = {
      {"integrate", "RK4 reference trajectory and invariant monitors"},
      {"dual-solve", "critical point of the dual action and the recovered primal"},
      {"dtp-check", "stationarity and invertibility of the dual-to-primal map"},
      {"hamiltonian", "dual Hamiltonian along a converged solve"},
      {"reduce", "constraint elimination and minimal constraint forces"},
      {"periodic", "periodic orbit search with an unknown period"},
      {"compare", "force-law, gauge or reduction comparisons"}};
  for (const auto& [name, help] : names) {
    auto o = std::make_shared<Opts>();
    CLI::App* s = app.add_subcommand(name, help);
    s->add_option("--config", o->config, "JSON run configuration")->required();
    s->add_option("--out", o->out, "output directory");
    s->add_flag("--emit-plot-data", o->plot, "write (t, value) series under plot/");
    subs.emplace_back(s, o);
  }

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
  for (const auto& [s, o] : subs)
    if (s->parsed()) return execute(s->get_name(), o->config, o->out, o->plot);
  return 2;
}
