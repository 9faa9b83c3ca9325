#include "dualvp/config.hpp"

#include <algorithm>

#include <cmath>
#include <fstream>
#include <numbers>

namespace dualvp {

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  try {
    return Json::parse(in, nullptr, true, true);
  } catch (const Json::parse_error& e) {
    throw ConfigError("malformed config " + path + ": " + e.what());
  }
}

double json_number(const Json& j, const char* key, double fallback) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  if (!j[key].is_number()) throw ConfigError(std::string("'") + key + "' must be a number");
  return j[key].get<double>();
}

double json_required_number(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError(std::string("missing '") + key + "'");
  return json_number(j, key, 0.0);
}

namespace {

int json_int(const Json& j, const char* key, int fallback) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  if (!j[key].is_number_integer()) throw ConfigError(std::string("'") + key + "' must be an integer");
  return j[key].get<int>();
}

std::string json_string(const Json& j, const char* key, const std::string& fallback) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  if (!j[key].is_string()) throw ConfigError(std::string("'") + key + "' must be a string");
  return j[key].get<std::string>();
}

Vec vec_or(const Json& j, const char* key, const Vec& fallback) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  return json_vec(j[key]);
}

Vec required_vec(const Json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key))
    throw ConfigError("missing '" + std::string(key) + "' in " + where);
  return json_vec(j[key]);
}

}  // namespace

Vec json_vec(const Json& j) {
  if (!j.is_array()) throw ConfigError("expected an array of numbers");
  Vec v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ConfigError("expected an array of numbers");
    v(i) = j[i].get<double>();
  }
  return v;
}

Mat json_mat(const Json& j) {
  if (!j.is_array() || j.empty()) throw ConfigError("expected a non-empty array of rows");
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  Mat m(j.size(), cols);
  for (std::size_t r = 0; r < j.size(); ++r) {
    const Vec row = json_vec(j[r]);
    if (static_cast<std::size_t>(row.size()) != cols) throw ConfigError("matrix rows differ in length");
    m.row(r) = row.transpose();
  }
  return m;
}

Json vec_json(const Vec& v) {
  Json a = Json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

SystemConfig parse_system(const Json& j) {
  if (!j.is_object()) throw ConfigError("'system' must be an object");
  const std::string kind = json_string(j, "kind", "");
  if (kind.empty()) throw ConfigError("system.kind is required");
  const Json init = j.contains("initial") ? j["initial"] : Json::object();
  const Json params = j.contains("params") ? j["params"] : Json::object();
  if (!params.is_object()) throw ConfigError("system.params must be an object");

  SystemConfig out;
  auto law = [&](const char* fallback) {
    return force_law_from_string(json_string(j, "force_law", fallback));
  };
  auto power = [&] { return power_law_from_string(json_string(j, "power_law", "none")); };

  if (kind == "lorenz") {
    out.spec = lorenz_spec(json_number(params, "A", 10.0), json_number(params, "R", 28.0),
                           json_number(params, "B", 8.0 / 3.0),
                           vec_or(init, "x0", Vec::Ones(3)));
  } else if (kind == "pars" || kind == "pars_reduced") {
    const Vec x0 = required_vec(init, "x0", "system.initial");
    const Vec v0 = required_vec(init, "v0", "system.initial");
    const ForceLaw f = kind == "pars_reduced" ? ForceLaw::gauss : law("gauss");
    out.spec = pars_spec(f, x0, v0, json_number(params, "nu", 0.0), power());
    out.reduced_pars = kind == "pars_reduced";
  } else if (kind == "gen_pars") {
    if (!j.contains("L") || !j.contains("b")) throw ConfigError("gen_pars needs L and b");
    out.spec = gen_pars_spec(json_mat(j["L"]), json_vec(j["b"]), law("free_Q"), power(),
                             required_vec(init, "x0", "system.initial"),
                             required_vec(init, "v0", "system.initial"));
  } else if (kind == "poly_ode") {
    const int dim = json_int(j, "dim", 0);
    if (dim <= 0) throw ConfigError("poly_ode needs a positive 'dim'");
    if (!j.contains("terms") || !j["terms"].is_array()) throw ConfigError("poly_ode needs 'terms'");
    std::vector<PolyTerm> terms;
    for (const auto& t : j["terms"]) {
      PolyTerm p;
      p.equation = json_int(t, "equation", -1);
      p.coefficient = json_required_number(t, "coefficient");
      if (!t.contains("powers") || !t["powers"].is_array())
        throw ConfigError("poly term needs 'powers'");
      for (const auto& q : t["powers"]) {
        if (!q.is_number_integer()) throw ConfigError("powers must be integers");
        p.powers.push_back(q.get<int>());
      }
      terms.push_back(std::move(p));
    }
    out.spec = poly_ode_spec(dim, std::move(terms), required_vec(init, "x0", "system.initial"));
  } else if (kind == "harmonic") {
    Vec x0(2);
    x0 << 1.0, 0.0;
    out.spec = harmonic_spec(vec_or(init, "x0", x0));
  } else {
    throw ConfigError("unknown system kind '" + kind + "'");
  }
  // remaining parameters (masses, nu, ...) pass through unchanged
  for (const auto& [key, value] : params.items()) {
    if (!value.is_number()) throw ConfigError("system.params." + key + " must be a number");
    out.spec.params[key] = value.get<double>();
  }
  if (init.contains("q0")) out.spec.q0 = json_vec(init["q0"]);
  validate(out.spec);
  return out;
}

Json system_to_json(const SystemConfig& s) {
  const SystemSpec& p = s.spec;
  Json j;
  Json init;
  init["x0"] = vec_json(p.x0);
  if (p.v0.size()) init["v0"] = vec_json(p.v0);
  if (p.q0.size()) init["q0"] = vec_json(p.q0);
  j["initial"] = init;
  Json params = Json::object();
  for (const auto& [k, v] : p.params) params[k] = v;
  j["params"] = params;
  switch (p.kind) {
    case SystemKind::lorenz:
      j["kind"] = "lorenz";
      break;
    case SystemKind::pars:
      j["kind"] = s.reduced_pars ? "pars_reduced" : "pars";
      break;
    case SystemKind::gen_pars: {
      j["kind"] = "gen_pars";
      Json L = Json::array();
      for (int r = 0; r < p.L.rows(); ++r) L.push_back(vec_json(p.L.row(r).transpose()));
      j["L"] = L;
      j["b"] = vec_json(p.b);
      break;
    }
    case SystemKind::poly_ode: {
      j["kind"] = "poly_ode";
      j["dim"] = p.dims.dof();
      Json terms = Json::array();
      for (const auto& t : p.poly)
        terms.push_back({{"equation", t.equation}, {"coefficient", t.coefficient}, {"powers", t.powers}});
      j["terms"] = terms;
      break;
    }
  }
  if (!p.first_order()) {
    j["force_law"] = std::string(to_string(p.force_law));
    j["power_law"] = std::string(to_string(p.power_law));
  }
  return j;
}

std::shared_ptr<const DualModel> model_for(const SystemConfig& s) {
  if (s.reduced_pars) return std::make_shared<ParsReducedModel>(s.spec.x0, s.spec.v0);
  return make_dual_model(s.spec);
}

TrajectoryGrid oracle_for(const SystemConfig& s, double T, double h) {
  if (s.spec.force_law == ForceLaw::free_Q) {
    SystemSpec g = s.spec;
    g.force_law = ForceLaw::gauss;
    return integrate_ivp(g, T, h);
  }
  return integrate_ivp(s.spec, T, h);
}

BaseState base_from_trajectory(const DualModel& model, const TrajectoryGrid& traj) {
  const auto& want = model.primal_names();
  std::vector<int> rows;
  for (const auto& name : want) {
    int found = -1;
    for (int r = 0; r < traj.dim(); ++r)
      if (traj.columns()[r] == name) found = r;
    if (found < 0) throw ConfigError("reference trajectory has no column '" + name + "'");
    rows.push_back(found);
  }
  TrajectoryGrid sel(traj.grid(), want);
  sel.values() = Mat(static_cast<int>(rows.size()), traj.n_nodes());
  if (traj.has_derivatives()) sel.derivatives() = Mat(static_cast<int>(rows.size()), traj.n_nodes());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    sel.values().row(k) = traj.values().row(rows[k]);
    if (traj.has_derivatives()) sel.derivatives().row(k) = traj.derivatives().row(rows[k]);
  }
  return BaseState::from_grid(std::move(sel));
}

TrajectoryGrid perturb(const TrajectoryGrid& traj, double delta) {
  TrajectoryGrid out = traj;
  for (int i = 0; i < out.n_nodes(); ++i) {
    const double t = out.t(i);
    for (int k = 0; k < out.dim(); ++k) {
      const double w = k + 2.0;
      out.values()(k, i) += delta * std::sin(w * t + k);
      if (out.has_derivatives()) out.derivatives()(k, i) += delta * w * std::cos(w * t + k);
    }
  }
  return out;
}

DualConfig parse_dual(const Json& j, const DualModel& model) {
  if (!j.is_null() && !j.is_object()) throw ConfigError("'dual' must be an object");
  const Json d = j.is_null() ? Json::object() : j;
  const int n = model.primal_dim(), K = model.slot_count();
  DualConfig out;
  if (d.contains("c") && d["c"].is_array()) {
    out.c = json_vec(d["c"]);
    require_dim(out.c.size() == n, "dual.c must have one entry per primal component");
  } else {
    out.c = Vec::Constant(n, json_number(d, "c", 100.0));
  }
  for (int i = 0; i < n; ++i)
    if (!(out.c(i) > 0.0)) throw ConfigError("dual.c must be positive");
  if (d.contains("base") && d["base"].is_array()) {
    out.base = "constant";
    out.base_value = json_vec(d["base"]);
    require_dim(out.base_value.size() == n, "dual.base must have one entry per primal component");
  } else {
    out.base = json_string(d, "base", "oracle");
    if (out.base == "zero") {
      out.base = "constant";
      out.base_value = Vec::Zero(n);
    } else if (out.base != "oracle") {
      throw ConfigError("dual.base must be 'oracle', 'zero' or an array");
    }
  }
  out.perturbation = json_number(d, "perturbation", 0.0);
  out.terminal = vec_or(d, "terminal", Vec::Zero(K));
  out.initial_bc = vec_or(d, "initial_bc", Vec::Zero(K));
  require_dim(out.terminal.size() == K && out.initial_bc.size() == K,
              "dual boundary values must have one entry per dual slot");
  const std::string route = json_string(d, "route", "automatic");
  if (route == "automatic") out.route = DtpRoute::automatic;
  else if (route == "closed_form") out.route = DtpRoute::closed_form;
  else if (route == "generic") out.route = DtpRoute::generic;
  else throw ConfigError("dual.route must be automatic, closed_form or generic");
  out.solve.tol_newton = json_number(d, "tol", out.solve.tol_newton);
  out.solve.max_iter = json_int(d, "max_iter", out.solve.max_iter);
  out.solve.regularization = json_number(d, "regularization", out.solve.regularization);
  out.solve.continuation_slabs = json_int(d, "continuation_slabs", out.solve.continuation_slabs);
  if (!(out.solve.tol_newton > 0.0) || out.solve.max_iter < 1 || out.solve.continuation_slabs < 1)
    throw ConfigError("dual solver settings out of range");
  return out;
}

Json dual_to_json(const DualConfig& d) {
  Json j;
  j["c"] = vec_json(d.c);
  if (d.base == "oracle") j["base"] = "oracle";
  else j["base"] = vec_json(d.base_value);
  j["perturbation"] = d.perturbation;
  j["terminal"] = vec_json(d.terminal);
  j["initial_bc"] = vec_json(d.initial_bc);
  j["route"] = d.route == DtpRoute::automatic ? "automatic"
               : d.route == DtpRoute::closed_form ? "closed_form" : "generic";
  j["tol"] = d.solve.tol_newton;
  j["max_iter"] = d.solve.max_iter;
  j["regularization"] = d.solve.regularization;
  j["continuation_slabs"] = d.solve.continuation_slabs;
  return j;
}

ActionAssembly build_assembly(const SystemConfig& s, const DualConfig& d, double T, double h) {
  auto model = model_for(s);
  const Grid grid = Grid::with_step(0.0, T, h);
  BaseState base;
  if (d.base == "oracle") {
    TrajectoryGrid ref = oracle_for(s, T, h);
    base = base_from_trajectory(*model, d.perturbation != 0.0 ? perturb(ref, d.perturbation) : ref);
  } else {
    base = BaseState::constant(d.base_value);
  }
  ActionAssembly a = ActionAssembly::make(model, HParams{d.c, std::move(base)}, grid);
  a.terminal = d.terminal;
  a.initial_bc = d.initial_bc;
  a.route = d.route;
  a.check();
  return a;
}

PeriodicConfig parse_periodic(const Json& j, const SystemConfig& s) {
  if (!j.is_object()) throw ConfigError("'periodic' must be an object");
  if (s.reduced_pars) throw UnsupportedError("the reduced Pars model depends on t explicitly");
  PeriodicConfig out;
  auto model = model_for(s);
  const int n = model->primal_dim();
  PeriodicProblem& p = out.problem;
  p.model = model;
  p.P_guess = json_number(j, "P_guess", 1.0);
  p.n_nodes = json_int(j, "n_nodes", 512);
  p.phase_component = json_int(j, "phase_component", 0);
  const Vec c = j.contains("c") && j["c"].is_array() ? json_vec(j["c"])
                                                     : Vec::Constant(n, json_number(j, "c", 1.0));
  require_dim(c.size() == n, "periodic.c must have one entry per primal component");

  const Json b = j.contains("base") ? j["base"] : Json{{"kind", "oracle_loop"}};
  const std::string kind = json_string(b, "kind", "");
  BaseState base;
  if (kind == "circle") {
    if (n < 2) throw ConfigError("a circle base needs at least two components");
    const double r = json_number(b, "radius", 1.0);
    const Vec center = vec_or(b, "center", Vec::Zero(n));
    require_dim(center.size() == n, "periodic.base.center has the wrong size");
    base = BaseState::from_function(n, [r, center](double t) {
      Vec u = center;
      u(0) += r * std::cos(t);
      u(1) -= r * std::sin(t);
      return u;
    });
  } else if (kind == "constant") {
    const Vec v = required_vec(b, "value", "periodic.base");
    require_dim(v.size() == n, "periodic.base.value has the wrong size");
    base = BaseState::constant(v);
  } else if (kind == "oracle_loop") {
    // forward run over one guessed period from the initial data, in s = t / P
    const double P = p.P_guess;
    const double T = 2.0 * std::numbers::pi * P;
    const double skip = json_number(b, "skip", 0.0);
    const TrajectoryGrid ref = oracle_for(s, skip + T, T / 4000.0);
    const BaseState inner = base_from_trajectory(*model, ref);
    base = BaseState::from_function(n, [inner, P, skip](double t) { return inner.at(skip + P * t); });
  } else {
    throw ConfigError("periodic.base.kind must be circle, constant or oracle_loop");
  }
  p.hp = HParams{c, std::move(base)};
  out.options.tol = json_number(j, "tol", out.options.tol);
  out.options.max_iter = json_int(j, "max_iter", out.options.max_iter);
  if (j.contains("anchor_phase")) {
    if (!j["anchor_phase"].is_boolean()) throw ConfigError("periodic.anchor_phase must be a boolean");
    out.options.anchor_phase = j["anchor_phase"].get<bool>();
  }
  if (j.contains("sweep")) {
    const Vec sw = json_vec(j["sweep"]);
    out.sweep.assign(sw.data(), sw.data() + sw.size());
  }
  if (!(p.P_guess > 0.0) || p.n_nodes < 8) throw ConfigError("periodic settings out of range");
  return out;
}

std::vector<int> parse_eliminate(const Json& j, int dof) {
  std::vector<int> out;
  if (j.is_null() || !j.contains("eliminate")) return out;
  if (!j["eliminate"].is_array()) throw ConfigError("reduce.eliminate must be an array of indices");
  for (const auto& e : j["eliminate"]) {
    if (!e.is_number_integer()) throw ConfigError("reduce.eliminate must be an array of indices");
    const int i = e.get<int>();
    if (i < 0 || i >= dof || std::find(out.begin(), out.end(), i) != out.end())
      throw ConfigError("reduce.eliminate index out of range or repeated");
    out.push_back(i);
  }
  return out;
}

}  // namespace dualvp
