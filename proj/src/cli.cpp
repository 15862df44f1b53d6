#include "typeiia/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include "typeiia/flow.hpp"
#include "typeiia/identities.hpp"
#include "typeiia/model_file.hpp"
#include "typeiia/torusgrid.hpp"

namespace typeiia {

namespace {

using nlohmann::json;

// Bad input: reported with exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void emit(const std::string& path, const std::string& text, std::ostream& fallback) {
  if (path.empty()) {
    fallback << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw UsageError("cannot write '" + path + "'");
  f << text;
}

// ---------------------------------------------------------------- models

const std::set<std::string> kBuiltins = {"nil", "solv", "torus"};

struct ResolvedModel {
  LieModel model;
  Ansatz ansatz;
  /// The model is (a copy of) a built-in one, so its closed form applies.
  bool builtin = false;
};

ResolvedModel resolve_model(const std::string& name_or_path) {
  ResolvedModel r;
  if (kBuiltins.count(name_or_path)) {
    r.model = builtin_model(name_or_path);
    r.ansatz = *builtin_ansatz(name_or_path);
    r.builtin = true;
    return r;
  }
  if (!std::filesystem::exists(name_or_path)) throw UsageError("unknown model '" + name_or_path + "' (not a built-in name or a file)");
  ModelDescription d;
  try {
    d = parse_model_file(name_or_path);
  } catch (const ModelParseError& e) {
    throw UsageError(name_or_path + ": " + e.what());
  }
  r.model = d.model;
  if (kBuiltins.count(d.name) && normalized(d.model) == normalized(builtin_model(d.name))) {
    r.ansatz = *builtin_ansatz(d.name);
    r.builtin = true;
  } else {
    r.ansatz = full_ansatz();
  }
  return r;
}

// ---------------------------------------------------------------- config files

// Turns a JSON object into option tokens; keys may use '_' for '-'.  Keys
// already present on the command line are dropped so that explicit flags win.
std::vector<std::string> config_tokens(const std::string& path, const CLI::App& sub, const std::set<std::string>& given) {
  std::ifstream f(path);
  if (!f) throw UsageError("cannot open config '" + path + "'");
  json doc;
  try {
    doc = json::parse(f);
  } catch (const json::parse_error& e) {
    throw UsageError("config '" + path + "': " + e.what());
  }
  if (!doc.is_object()) throw UsageError("config '" + path + "': top level must be an object");
  auto scalar = [&](const std::string& key, const json& v) -> std::string {
    if (v.is_number()) return v.dump();
    if (v.is_string()) return v.get<std::string>();
    throw UsageError("config '" + path + "': key '" + key + "' must hold numbers or strings");
  };
  std::vector<std::string> out;
  for (const auto& [key, v] : doc.items()) {
    std::string flag = "--" + key;
    std::replace(flag.begin() + 2, flag.end(), '_', '-');
    if (key == "config" || sub.get_option_no_throw(flag) == nullptr)
      throw UsageError("config '" + path + "': unknown key '" + key + "' for command '" + sub.get_name() + "'");
    if (given.count(flag)) continue;
    if (v.is_boolean()) {
      if (v.get<bool>()) out.push_back(flag);
    } else if (v.is_array()) {
      out.push_back(flag);
      for (const auto& e : v) out.push_back(scalar(key, e));
    } else if (v.is_object()) {
      // Fourier field: {"mean": m, "terms": [[mode, cos, sin], ...]}.
      std::string s = v.value("mean", json(0)).dump();
      for (const auto& t : v.value("terms", json::array())) {
        if (!t.is_array() || t.size() != 3) throw UsageError("config '" + path + "': terms of '" + key + "' must be [mode, cos, sin]");
        s += "," + t[0].dump() + ":" + t[1].dump() + ":" + t[2].dump();
      }
      out.push_back(flag);
      out.push_back(s);
    } else {
      out.push_back(flag);
      out.push_back(scalar(key, v));
    }
  }
  return out;
}

// ---------------------------------------------------------------- options

struct VerifyOpts {
  std::string model;
  int trials = 100;
  std::uint64_t seed = 7;
  double tol = 1e-9;
  double scale = 0.3;
  double variation_h = 1e-5;
  double variation_tol = 1e-6;
  double symbol_tol = 1e-10;
  std::string out;
};

// Initial parameters shared by flow and oracle.
struct InitOpts {
  std::map<std::string, double> named;
  std::map<std::string, CLI::Option*> flags;
  std::vector<std::string> init;
};

struct FlowOpts {
  std::string model = "nil";
  InitOpts init;
  double dt = 1e-3;
  double tmax = 1;
  std::vector<double> p{1.0, -1.0};
  int record_every = 1;
  double horizon = 0.9;
  std::uint64_t seed = 7;
  std::string out;
  std::string summary;
};

struct OracleOpts {
  std::string model = "solv";
  InitOpts init;
  double dt = 0;
  double tmax = 0;
  double horizon = 0.9;
  double tol = 1e-6;
  double bracket_tol = 0.01;
  std::uint64_t seed = 7;
  std::string out;
};

struct GridOpts {
  int n = 128;
  double tmax = 1;
  double dt = 0;
  std::array<std::string, 4> fields{"2,1:0:0.2", "2,1:0.2:0", "0,1:0.1:0", "0.1"};
  std::vector<double> p{1.0, -1.0};
  int record_every = 256;
  std::vector<double> snapshot;
  std::uint64_t seed = 7;
  std::string out;
  std::string snapshot_out;
  std::string summary;
};

struct SymbolOpts {
  bool canonical = false;
  std::uint64_t seed = 7;
  std::vector<double> xi;
  double tol = 1e-10;
};

const char* const kParamNames[] = {"a", "b", "c", "d", "alpha", "beta", "gamma", "delta"};

void add_init_options(CLI::App* sub, InitOpts& o) {
  for (const char* n : kParamNames)
    o.flags[n] = sub->add_option(std::string("--") + n + "0", o.named[n], std::string("initial value of ") + n);
  sub->add_option("--init", o.init, "initial parameters as name=value (any ansatz parameter)")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
}

Eigen::VectorXd initial_params(const ResolvedModel& rm, const InitOpts& o, std::uint64_t seed, json& echo) {
  const Ansatz& a = rm.ansatz;
  Eigen::VectorXd p = a.defaults;
  if (a.name == "full") {
    std::mt19937_64 rng(seed);
    p = random_point(rm.model, rng, 0.0).coeffs();
  }
  auto index_of = [&](const std::string& n) {
    const auto it = std::find(a.param_names.begin(), a.param_names.end(), n);
    return it == a.param_names.end() ? -1 : static_cast<int>(it - a.param_names.begin());
  };
  for (const auto& [name, opt] : o.flags) {
    if (opt->count() == 0) continue;
    const int i = index_of(name);
    if (i < 0) throw UsageError("--" + name + "0 is not a parameter of the '" + a.name + "' ansatz");
    p[i] = o.named.at(name);
  }
  for (const auto& kv : o.init) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw UsageError("--init expects name=value, got '" + kv + "'");
    const int i = index_of(kv.substr(0, eq));
    if (i < 0) throw UsageError("'" + kv.substr(0, eq) + "' is not a parameter of the '" + a.name + "' ansatz");
    try {
      std::size_t used = 0;
      const std::string v = kv.substr(eq + 1);
      p[i] = std::stod(v, &used);
      if (used != v.size()) throw std::invalid_argument(v);
    } catch (const std::exception&) {
      throw UsageError("--init: malformed value in '" + kv + "'");
    }
  }
  json params = json::object();
  for (int i = 0; i < a.size(); ++i) params[a.param_names[i]] = p[i];
  echo["initial"] = params;
  return p;
}

FlowState checked_initial_state(const FlowEngine& engine, const Eigen::VectorXd& p) {
  const Form phi = engine.ansatz().embed(p);
  const double closed = d_invariant(phi, engine.model()).max_abs() / std::max(1.0, phi.max_abs());
  if (closed > engine.control().closed_tol) throw UsageError("initial 3-form is not closed (residual " + fmt17(closed) + ")");
  try {
    return engine.state(p);
  } catch (const std::domain_error& e) {
    throw UsageError(std::string("initial 3-form rejected: ") + e.what());
  }
}

std::string header_lines(const std::string& command, const json& echo) {
  return std::string("# typeiia ") + kEngineVersion + "\n# command " + command + "\n# config " + echo.dump() + "\n";
}

std::string p_label(double p) { return "E_p" + fmt17(p); }

// ---------------------------------------------------------------- verify

int cmd_verify(const VerifyOpts& o, std::ostream& out) {
  if (o.trials < 1) throw UsageError("--trials must be at least 1");
  const ResolvedModel rm = resolve_model(o.model);
  const LieModel& m = rm.model;
  std::mt19937_64 rng(o.seed);
  std::normal_distribution<double> nd;
  const Eigen::MatrixXd prim = primitive_basis(m.omega);

  std::map<std::string, double> worst;
  double rhs_gap = 0, variation = 0, symbol = 0;
  for (int trial = 0; trial < o.trials; ++trial) {
    const Form phi = random_point(m, rng, o.scale);
    const HitchinData P = build(phi, m.omega);
    for (const auto& c : identity_suite(P, m, o.tol).checks) worst[c.name] = std::max(worst[c.name], c.residual);

    const Form r1 = rhs_primary(P, m), r2 = rhs_laplacian(P, m);
    rhs_gap = std::max(rhs_gap, (r1 - r2).max_abs() / std::max({r1.max_abs(), r2.max_abs(), 1.0}));

    Eigen::VectorXd z(prim.cols());
    for (auto& x : z) x = nd(rng);
    Form dphi(3, prim * z);
    dphi = (1.0 / dphi.coeffs().norm()) * dphi;
    const double h = o.variation_h;
    const Form fd = (1.0 / (2 * h)) * (build(phi + h * dphi, m.omega).phi_hat - build(phi - h * dphi, m.omega).phi_hat);
    const Form an = variation_hat(P, dphi);
    variation = std::max(variation, (fd - an).coeffs().norm() / std::max(an.coeffs().norm(), 1e-300));

    Vec6 xi;
    for (auto& x : xi) x = nd(rng);
    const SymbolReport s = symbol_spectrum(P, xi);
    const double ref[5] = {1, 1, 1, 1, 0};
    for (int i = 0; i < 5; ++i) symbol = std::max(symbol, std::abs(s.eigenvalues[i] - ref[i]));
  }

  json report;
  report["engine_version"] = kEngineVersion;
  report["command"] = "verify";
  report["config"] = {{"model", o.model}, {"trials", o.trials}, {"seed", o.seed}, {"tol", o.tol}, {"scale", o.scale},
                      {"variation_h", o.variation_h}, {"variation_tol", o.variation_tol}, {"symbol_tol", o.symbol_tol}};
  bool pass = true;
  json ids = json::object();
  for (const auto& [name, r] : worst) {
    ids[name] = {{"max_residual", r}, {"pass", r < o.tol}};
    pass = pass && r < o.tol;
  }
  report["identities"] = ids;
  report["rhs_equivalence"] = {{"max_residual", rhs_gap}, {"pass", rhs_gap < o.tol}};
  report["variation"] = {{"max_relative_error", variation}, {"pass", variation < o.variation_tol}};
  report["symbol"] = {{"max_deviation", symbol}, {"pass", symbol < o.symbol_tol}};
  pass = pass && rhs_gap < o.tol && variation < o.variation_tol && symbol < o.symbol_tol;
  report["pass"] = pass;
  emit(o.out, report.dump(2) + "\n", out);
  if (!o.out.empty()) out << "verify " << m.name << ": " << (pass ? "PASS" : "FAIL") << "\n";
  return pass ? 0 : 1;
}

// ---------------------------------------------------------------- flow

std::string flow_csv(const FlowRun& run, const Ansatz& a, const std::string& header) {
  std::ostringstream os;
  os << header << "t";
  for (const auto& n : a.param_names) os << ',' << n;
  os << ",u,normSq,normNsq";
  for (double p : run.p_values) os << ',' << p_label(p);
  os << ",positivityMargin,stabilityMargin,closedResidual,primitiveResidual,antiRicciSq\n";
  for (const auto& r : run.rows) {
    os << fmt17(r.t);
    for (int i = 0; i < r.params.size(); ++i) os << ',' << fmt17(r.params[i]);
    os << ',' << fmt17(r.u) << ',' << fmt17(r.norm_sq) << ',' << fmt17(r.norm_N_sq);
    for (double e : r.E) os << ',' << fmt17(e);
    os << ',' << fmt17(r.positivity_margin) << ',' << fmt17(r.stability_margin) << ',' << fmt17(r.closed_residual) << ','
       << fmt17(r.primitive_residual) << ',' << fmt17(r.anti_ricci_sq) << '\n';
  }
  return os.str();
}

json monotonicity_json(const MonotonicityReport& m) {
  return {{"u_nondecreasing", m.u_nondecreasing},     {"normN_nonincreasing", m.norm_N_nonincreasing},
          {"e_minus_u_convex", m.e_minus_u_convex},   {"dilaton_monotone", m.dilaton_monotone},
          {"min_norm_bound", m.min_norm_bound},       {"du_dt_matches", m.du_dt_matches},
          {"du_dt_worst", m.du_dt_worst},             {"dN_dt_matches", m.dN_dt_matches},
          {"dN_dt_worst", m.dN_dt_worst},             {"pass", m.pass()}};
}

json blowup_json(const BlowupRecord& b, bool expected) {
  return {{"detected", b.detected}, {"t_last", b.t_last}, {"t_upper", b.t_upper}, {"reason", b.reason}, {"expected", expected}};
}

json oracle_json(const OracleReport& r) {
  json j = {{"available", true},
            {"param_deviation", r.param_deviation},
            {"normN_deviation", r.norm_N_deviation},
            {"blowup_expected", r.blowup_expected}};
  if (r.blowup_expected) {
    j["predicted_T"] = r.predicted_T;
    j["horizon"] = r.horizon;
    j["bracket_contains_T"] = r.bracket_contains_T;
    j["bracket_width_rel"] = r.bracket_width_rel;
  }
  return j;
}

std::optional<Oracle> oracle_for(const ResolvedModel& rm, const Eigen::VectorXd& p0) {
  if (!rm.builtin) return std::nullopt;
  try {
    return make_oracle(rm.ansatz.name, p0);
  } catch (const UnknownOracle&) {
    return std::nullopt;
  }
}

int cmd_flow(const FlowOpts& o, std::ostream& out, std::ostream& err) {
  if (o.record_every < 1) throw UsageError("--record-every must be at least 1");
  const ResolvedModel rm = resolve_model(o.model);
  json echo = {{"model", o.model}, {"dt", o.dt}, {"tmax", o.tmax}, {"p", o.p}, {"record_every", o.record_every},
               {"horizon", o.horizon}, {"seed", o.seed}};
  const Eigen::VectorXd p0 = initial_params(rm, o.init, o.seed, echo);
  const FlowEngine engine(rm.model, rm.ansatz);
  const FlowState s0 = checked_initial_state(engine, p0);
  RunConfig cfg;
  cfg.dt = o.dt;
  cfg.t_max = o.tmax;
  cfg.p_values = o.p;
  // Every step is observed so that the derivative checks see the integrator
  // spacing; --record-every only thins the CSV.
  const FlowRun run = engine.run(s0, cfg);
  const std::optional<Oracle> oracle = oracle_for(rm, p0);
  const bool expected = oracle && std::isfinite(oracle->blowup_time);

  FlowRun thinned = run;
  thinned.rows.clear();
  for (std::size_t i = 0; i < run.rows.size(); ++i)
    if (i % static_cast<std::size_t>(o.record_every) == 0 || i + 1 == run.rows.size()) thinned.rows.push_back(run.rows[i]);
  emit(o.out, flow_csv(thinned, rm.ansatz, header_lines("flow", echo)), out);
  if (!o.summary.empty()) {
    json s;
    s["engine_version"] = kEngineVersion;
    s["command"] = "flow";
    s["config"] = echo;
    s["rows"] = run.rows.size();
    s["accepted_steps"] = run.accepted;
    s["rejected_steps"] = run.rejected;
    const ObservablesRow& last = run.rows.back();
    json fin = {{"t", last.t}, {"normNsq", last.norm_N_sq}, {"u", last.u}};
    for (int i = 0; i < rm.ansatz.size(); ++i) fin["params"][rm.ansatz.param_names[i]] = last.params[i];
    s["final"] = fin;
    s["blowup"] = blowup_json(run.blowup, expected);
    s["oracle"] = oracle ? oracle_json(oracle_compare(run, *oracle, o.horizon)) : json{{"available", false}};
    s["monotonicity"] = monotonicity_json(check_monotonicity(run));
    emit(o.summary, s.dump(2) + "\n", out);
  }
  if (run.blowup.detected) {
    err << "blow-up in [" << fmt17(run.blowup.t_last) << ", " << fmt17(run.blowup.t_upper) << "]: " << run.blowup.reason << "\n";
    return expected ? 0 : 1;
  }
  return 0;
}

// ---------------------------------------------------------------- oracle

int cmd_oracle(const OracleOpts& o, std::ostream& out) {
  const ResolvedModel rm = resolve_model(o.model);
  json echo = {{"model", o.model}, {"horizon", o.horizon}, {"tol", o.tol}, {"bracket_tol", o.bracket_tol}, {"seed", o.seed}};
  const Eigen::VectorXd p0 = initial_params(rm, o.init, o.seed, echo);
  const std::optional<Oracle> oracle = oracle_for(rm, p0);
  if (!oracle) throw UsageError("no closed-form solution for model '" + o.model + "'");
  const bool finite = std::isfinite(oracle->blowup_time);
  RunConfig cfg;
  cfg.dt = o.dt > 0 ? o.dt : finite ? std::min(1e-3, oracle->blowup_time / 1000) : 1e-3;
  cfg.t_max = o.tmax > 0 ? o.tmax : finite ? 2 * oracle->blowup_time : 1.0;
  echo["dt"] = cfg.dt;
  echo["tmax"] = cfg.t_max;
  const FlowEngine engine(rm.model, rm.ansatz);
  const FlowRun run = engine.run(checked_initial_state(engine, p0), cfg);
  const OracleReport rep = oracle_compare(run, *oracle, o.horizon);

  bool pass = rep.param_deviation < o.tol && rep.norm_N_deviation < o.tol;
  if (finite) pass = pass && run.blowup.detected && rep.bracket_contains_T && rep.bracket_width_rel < o.bracket_tol;
  else pass = pass && !run.blowup.detected;

  out << "model " << rm.ansatz.name << "\n";
  if (finite) {
    out << "predicted_T " << fmt17(rep.predicted_T) << "\n";
    out << "bracket " << fmt17(run.blowup.t_last) << " " << fmt17(run.blowup.t_upper) << "\n";
    out << "bracket_contains_T " << (rep.bracket_contains_T ? "yes" : "no") << "\n";
    out << "bracket_width_rel " << fmt17(rep.bracket_width_rel) << "\n";
  } else {
    out << "predicted_T inf\n";
  }
  out << "param_deviation " << fmt17(rep.param_deviation) << "\n";
  out << "normN_deviation " << fmt17(rep.norm_N_deviation) << "\n";
  out << (pass ? "PASS" : "FAIL") << "\n";
  if (!o.out.empty()) {
    json s;
    s["engine_version"] = kEngineVersion;
    s["command"] = "oracle";
    s["config"] = echo;
    s["blowup"] = blowup_json(run.blowup, finite);
    s["oracle"] = oracle_json(rep);
    s["monotonicity"] = monotonicity_json(check_monotonicity(run));
    s["pass"] = pass;
    emit(o.out, s.dump(2) + "\n", out);
  }
  return pass ? 0 : 1;
}

// ---------------------------------------------------------------- grid

// "MEAN[,MODE:COS:SIN]...".
FieldInit parse_field(const std::string& name, const std::string& text) {
  FieldInit f;
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string p; std::getline(ss, p, ',');) parts.push_back(p);
  auto num = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (s.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw UsageError("field " + name + ": malformed number '" + s + "' in '" + text + "'");
    }
  };
  if (parts.empty()) throw UsageError("field " + name + " is empty");
  f.mean = num(parts[0]);
  for (std::size_t i = 1; i < parts.size(); ++i) {
    std::vector<std::string> q;
    std::stringstream ts(parts[i]);
    for (std::string p; std::getline(ts, p, ':');) q.push_back(p);
    if (q.size() != 3) throw UsageError("field " + name + ": expected mode:cos:sin, got '" + parts[i] + "'");
    const double mode = num(q[0]);
    if (mode != std::round(mode) || mode < 1) throw UsageError("field " + name + ": mode must be a positive integer");
    f.terms.push_back({static_cast<int>(mode), num(q[1]), num(q[2])});
  }
  return f;
}

std::string grid_rows_csv(const GridRun& run, const std::vector<double>& p, const std::string& header) {
  std::ostringstream os;
  os << header << "t,minU,maxU,supNormNsq";
  for (double x : p) os << ',' << p_label(x);
  os << ",minDet,minNormSq,meanA,meanB,meanC,meanD,mode1A\n";
  for (const auto& r : run.rows) {
    os << fmt17(r.t) << ',' << fmt17(r.min_u) << ',' << fmt17(r.max_u) << ',' << fmt17(r.sup_N_sq);
    for (double e : r.E) os << ',' << fmt17(e);
    os << ',' << fmt17(r.min_det) << ',' << fmt17(r.min_norm_sq);
    for (double m : r.mean) os << ',' << fmt17(m);
    os << ',' << fmt17(r.mode1_a) << '\n';
  }
  return os.str();
}

std::string grid_snapshot_csv(const GridState& s, const std::string& header) {
  std::ostringstream os;
  os << header << "# t " << fmt17(s.t) << "\nx,a,b,c,d,u,normNsq\n";
  const auto a = s.f[kA].values(), b = s.f[kB].values(), c = s.f[kC].values(), d = s.f[kD].values();
  const Eigen::VectorXd u = grid_u(s), nn = nijenhuis_norm(s);
  for (int i = 0; i < s.n; ++i)
    os << fmt17(s.x(i)) << ',' << fmt17(a[i]) << ',' << fmt17(b[i]) << ',' << fmt17(c[i]) << ',' << fmt17(d[i]) << ','
       << fmt17(u[i]) << ',' << fmt17(nn[i]) << '\n';
  return os.str();
}

int cmd_grid(const GridOpts& o, std::ostream& out, std::ostream& err) {
  if (o.n < 4) throw UsageError("--n must be at least 4");
  if (o.record_every < 1) throw UsageError("--record-every must be at least 1");
  std::array<FieldInit, 4> fields;
  const char* names[4] = {"a", "b", "c", "d"};
  for (int q = 0; q < 4; ++q) fields[q] = parse_field(names[q], o.fields[q]);
  json echo = {{"n", o.n}, {"tmax", o.tmax}, {"dt", o.dt}, {"a", o.fields[0]}, {"b", o.fields[1]}, {"c", o.fields[2]},
               {"d", o.fields[3]}, {"p", o.p}, {"record_every", o.record_every}, {"snapshot", o.snapshot}, {"seed", o.seed}};
  GridState s0;
  try {
    s0 = grid_from_fourier(o.n, fields);
  } catch (const PositivityLoss& e) {
    throw UsageError(std::string("initial data: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("initial data: ") + e.what());
  }
  const std::string header = header_lines("grid", echo);

  GridRunConfig cfg;
  cfg.dt = o.dt;
  cfg.p_values = o.p;
  cfg.record_every = o.record_every;
  cfg.snapshot_times = o.snapshot;
  GridRun run;
  try {
    run = run_to_equilibrium(s0, o.tmax, cfg);
  } catch (const PositivityLoss& e) {
    err << "positivity lost at node " << e.node << ", t = " << fmt17(e.t) << ", ab - c^2 = " << fmt17(e.det) << "\n";
    return 1;
  }
  emit(o.out, grid_rows_csv(run, o.p, header), out);
  if (!o.snapshot_out.empty())
    for (std::size_t k = 0; k < run.snapshots.size(); ++k)
      emit(o.snapshot_out + "_" + std::to_string(k) + ".csv", grid_snapshot_csv(run.snapshots[k], header), out);

  if (!o.summary.empty()) {
    const GridRate reduced = rhs_reduced(s0), general = rhs_general(s0);
    double disc = 0;
    for (int q = 0; q < 4; ++q) disc = std::max(disc, (reduced.v[q] - general.v[q]).lpNorm<Eigen::Infinity>());
    const GridState& fin = run.final_state;
    const auto m0 = fourier_mode(s0.f[kA], 1), m1 = fourier_mode(fin.f[kA], 1);
    const double amp0 = std::hypot(m0[0], m0[1]), amp1 = std::hypot(m1[0], m1[1]);
    const double predicted = std::exp(-16 * std::numbers::pi * std::numbers::pi * (fin.t - s0.t));
    bool min_det_monotone = true, min_u_monotone = true;
    for (std::size_t i = 1; i < run.rows.size(); ++i) {
      min_det_monotone = min_det_monotone && run.rows[i].min_det >= run.rows[i - 1].min_det - 1e-12;
      min_u_monotone = min_u_monotone && run.rows[i].min_u >= run.rows[i - 1].min_u - 1e-12;
    }
    json e_monotone = json::array();
    for (std::size_t j = 0; j < o.p.size(); ++j) {
      const double p = o.p[j];
      bool ok = true;
      for (std::size_t i = 1; i < run.rows.size(); ++i) {
        const double de = run.rows[i].E[j] - run.rows[i - 1].E[j];
        if (p > 0 && p <= 1) ok = ok && de >= -1e-12;
        if (p < 0) ok = ok && de <= 1e-12;
      }
      e_monotone.push_back({{"p", p}, {"monotone", ok}});
    }
    double mean_drift = 0;
    for (int q = 0; q < 3; ++q) mean_drift = std::max(mean_drift, std::abs(run.rows.back().mean[q] - run.rows.front().mean[q]));
    json sm;
    sm["engine_version"] = kEngineVersion;
    sm["command"] = "grid";
    sm["config"] = echo;
    sm["dt"] = run.dt;
    sm["evaluator_discrepancy"] = disc;
    sm["final_t"] = fin.t;
    sm["sup_normNsq"] = run.rows.back().sup_N_sq;
    sm["d_max_change"] = (fin.f[kD].values() - s0.f[kD].values()).lpNorm<Eigen::Infinity>();
    sm["mean_drift"] = mean_drift;
    sm["mode1_a"] = {{"initial", amp0}, {"final", amp1}, {"predicted_ratio", predicted},
                     {"ratio", amp0 > 0 ? amp1 / amp0 : 0.0}};
    sm["min_det_nondecreasing"] = min_det_monotone;
    sm["min_u_nondecreasing"] = min_u_monotone;
    sm["dilaton_monotone"] = e_monotone;
    emit(o.summary, sm.dump(2) + "\n", out);
  }
  return 0;
}

// ---------------------------------------------------------------- symbol

int cmd_symbol(const SymbolOpts& o, std::ostream& out) {
  if (!o.xi.empty() && o.xi.size() != kDim) throw UsageError("--xi needs 6 components");
  std::mt19937_64 rng(o.seed);
  std::normal_distribution<double> nd;
  Form omega = omega_standard(), phi = phi_canonical();
  if (!o.canonical) {
    const Mat6 A = random_symplectic(omega, rng);
    omega = pullback(omega, A);
    phi = pullback(phi, A);
  }
  Vec6 xi = Vec6::Zero();
  if (!o.xi.empty()) {
    for (int i = 0; i < kDim; ++i) xi[i] = o.xi[i];
  } else if (o.canonical) {
    xi[0] = 1;
  } else {
    for (auto& x : xi) x = nd(rng);
  }
  if (xi.norm() == 0) throw UsageError("--xi must be nonzero");
  const SymbolReport r = symbol_spectrum(build(phi, omega), xi);
  const double ref[5] = {1, 1, 1, 1, 0};
  bool pass = true;
  for (int i = 0; i < 5; ++i) {
    pass = pass && std::abs(r.eigenvalues[i] - ref[i]) < o.tol;
    // Rounded to 1e-10 so that roundoff does not leak into the printout.
    const double v = std::round(r.eigenvalues[i] * 1e10) / 1e10 + 0.0;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    out << buf << ' ';
  }
  out << (pass ? "PASS" : "FAIL") << "\n";
  return pass ? 0 : 1;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Type IIA flow on symplectic 6-manifolds", "typeiia"};
  app.set_version_flag("--version", kEngineVersion);
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  std::string config;
  auto add_config = [&](CLI::App* sub) { sub->add_option("--config", config, "JSON file of option values; flags win"); };

  VerifyOpts vo;
  CLI::App* verify = app.add_subcommand("verify", "identity suite at seeded random points of a model");
  verify->add_option("--model", vo.model, "built-in name (nil, solv, torus) or model file")->required();
  verify->add_option("--trials", vo.trials, "number of random points");
  verify->add_option("--seed", vo.seed, "random seed");
  verify->add_option("--tol", vo.tol, "identity tolerance")->check(CLI::PositiveNumber);
  verify->add_option("--scale", vo.scale, "size of the random displacement")->check(CLI::NonNegativeNumber);
  verify->add_option("--variation-h", vo.variation_h, "finite-difference step")->check(CLI::PositiveNumber);
  verify->add_option("--variation-tol", vo.variation_tol, "variation tolerance")->check(CLI::PositiveNumber);
  verify->add_option("--symbol-tol", vo.symbol_tol, "symbol tolerance")->check(CLI::PositiveNumber);
  verify->add_option("--out", vo.out, "JSON report path (default stdout)");
  add_config(verify);

  FlowOpts fo;
  CLI::App* flow = app.add_subcommand("flow", "integrate the flow on an invariant ansatz");
  flow->add_option("--model", fo.model, "built-in name or model file");
  add_init_options(flow, fo.init);
  flow->add_option("--dt", fo.dt, "time step")->check(CLI::PositiveNumber);
  flow->add_option("--tmax", fo.tmax, "final time")->check(CLI::PositiveNumber);
  flow->add_option("--p", fo.p, "dilaton exponents")->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  flow->add_option("--record-every", fo.record_every, "keep every k-th step");
  flow->add_option("--horizon", fo.horizon, "fraction of the blow-up time used for oracle deviations")
      ->check(CLI::Range(0.0, 1.0));
  flow->add_option("--seed", fo.seed, "seed for the default initial point of file models");
  flow->add_option("--out", fo.out, "CSV path (default stdout)");
  flow->add_option("--summary", fo.summary, "JSON summary path");
  add_config(flow);

  OracleOpts oo;
  CLI::App* oracle = app.add_subcommand("oracle", "compare a run with the closed-form solution");
  oracle->add_option("--model", oo.model, "nil, solv or torus (or a file defining one of them)");
  add_init_options(oracle, oo.init);
  oracle->add_option("--dt", oo.dt, "time step (default min(1e-3, T/1000))")->check(CLI::NonNegativeNumber);
  oracle->add_option("--tmax", oo.tmax, "final time (default 2T, or 1 without blow-up)")->check(CLI::NonNegativeNumber);
  oracle->add_option("--horizon", oo.horizon, "fraction of T used for deviations")->check(CLI::Range(0.0, 1.0));
  oracle->add_option("--tol", oo.tol, "deviation tolerance")->check(CLI::PositiveNumber);
  oracle->add_option("--bracket-tol", oo.bracket_tol, "relative bracket width tolerance")->check(CLI::PositiveNumber);
  oracle->add_option("--seed", oo.seed, "random seed");
  oracle->add_option("--out", oo.out, "JSON report path");
  add_config(oracle);

  GridOpts go;
  CLI::App* grid = app.add_subcommand("grid", "periodic torus solver");
  grid->add_option("--n", go.n, "grid size");
  grid->add_option("--tmax", go.tmax, "final time")->check(CLI::PositiveNumber);
  grid->add_option("--dt", go.dt, "time step (0: h^2/16)")->check(CLI::NonNegativeNumber);
  for (int q = 0; q < 4; ++q)
    grid->add_option(std::string("--") + "abcd"[q], go.fields[q], "field as MEAN[,MODE:COS:SIN]...");
  grid->add_option("--p", go.p, "dilaton exponents")->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  grid->add_option("--record-every", go.record_every, "keep every k-th step");
  grid->add_option("--snapshot", go.snapshot, "snapshot times")->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  grid->add_option("--seed", go.seed, "recorded for reproducibility");
  grid->add_option("--out", go.out, "CSV of observables (default stdout)");
  grid->add_option("--snapshot-out", go.snapshot_out, "prefix for snapshot CSVs");
  grid->add_option("--summary", go.summary, "JSON summary path");
  add_config(grid);

  SymbolOpts so;
  CLI::App* symbol = app.add_subcommand("symbol", "principal symbol spectrum of the linearised flow");
  symbol->add_flag("--canonical", so.canonical, "standard frame instead of a random symplectic one");
  symbol->add_option("--seed", so.seed, "random seed");
  symbol->add_option("--xi", so.xi, "covector (6 components)")->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  symbol->add_option("--tol", so.tol, "eigenvalue tolerance")->check(CLI::PositiveNumber);
  add_config(symbol);

  try {
    std::vector<std::string> tokens = args;
    // Splice the config file right after the subcommand name.
    const auto cfg_it = std::find_if(tokens.begin(), tokens.end(),
                                     [](const std::string& t) { return t == "--config" || t.rfind("--config=", 0) == 0; });
    if (cfg_it != tokens.end() && !tokens.empty()) {
      std::string path;
      if (*cfg_it == "--config") {
        if (cfg_it + 1 == tokens.end()) throw UsageError("--config needs a path");
        path = *(cfg_it + 1);
      } else {
        path = cfg_it->substr(9);
      }
      CLI::App* sub = nullptr;
      for (CLI::App* s : app.get_subcommands([](CLI::App*) { return true; }))
        if (s->get_name() == tokens[0]) sub = s;
      if (sub == nullptr) throw UsageError("--config must follow a command name");
      std::set<std::string> given;
      for (const auto& t : tokens)
        if (t.rfind("--", 0) == 0) given.insert(t.substr(0, t.find('=')));
      const auto extra = config_tokens(path, *sub, given);
      tokens.insert(tokens.begin() + 1, extra.begin(), extra.end());
    }
    std::reverse(tokens.begin(), tokens.end());
    app.parse(tokens);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*verify) return cmd_verify(vo, out);
    if (*flow) return cmd_flow(fo, out, err);
    if (*oracle) return cmd_oracle(oo, out);
    if (*grid) return cmd_grid(go, out, err);
    if (*symbol) return cmd_symbol(so, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "failed: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace typeiia
