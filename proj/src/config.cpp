#include "bandinv/config.hpp"

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

namespace bandinv {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& msg) { throw ConfigError(path + ": " + msg); }

const json* find(const json& obj, const std::string& key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

double get_number(const json& obj, const std::string& key, const std::string& path, double dflt) {
  const json* v = find(obj, key);
  if (!v) return dflt;
  if (!v->is_number()) fail(path + "." + key, "expected a number");
  return v->get<double>();
}

long long get_int(const json& obj, const std::string& key, const std::string& path, long long dflt) {
  const json* v = find(obj, key);
  if (!v) return dflt;
  if (!v->is_number_integer()) fail(path + "." + key, "expected an integer");
  return v->get<long long>();
}

bool get_bool(const json& obj, const std::string& key, const std::string& path, bool dflt) {
  const json* v = find(obj, key);
  if (!v) return dflt;
  if (!v->is_boolean()) fail(path + "." + key, "expected true or false");
  return v->get<bool>();
}

IVec int_vector(const json& v, const std::string& path) {
  if (!v.is_array()) fail(path, "expected an array of integers");
  IVec out;
  for (size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number_integer()) fail(path + "[" + std::to_string(i) + "]", "expected an integer");
    out.push_back(v[i].get<long long>());
  }
  return out;
}

const json& object_at(const json& obj, const std::string& key, const std::string& path) {
  static const json empty = json::object();
  const json* v = find(obj, key);
  if (!v) return empty;
  if (!v->is_object()) fail(path + "." + key, "expected an object");
  return *v;
}

void check_keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) fail(path + "." + it.key(), "unknown key");
  }
}

}  // namespace

LatticeBasis parse_lattice(const json& spec, const std::string& path) {
  if (spec.is_string()) {
    const std::string s = spec.get<std::string>();
    if (s.rfind("cubic:", 0) != 0) fail(path, "expected \"cubic:<scale>:<d>\" or a d x d matrix");
    auto p = s.find(':', 6);
    if (p == std::string::npos) fail(path, "expected \"cubic:<scale>:<d>\"");
    double scale = 0;
    int d = 0;
    try {
      size_t used = 0;
      scale = std::stod(s.substr(6, p - 6), &used);
      if (used != p - 6) throw std::invalid_argument("scale");
      d = std::stoi(s.substr(p + 1), &used);
      if (used != s.size() - p - 1) throw std::invalid_argument("dim");
    } catch (const std::exception&) {
      fail(path, "malformed cubic lattice \"" + s + "\"");
    }
    if (!(scale > 0)) fail(path, "cubic scale must be positive");
    if (d < 2 || d > 3) fail(path, "dimension must be 2 or 3");
    return LatticeBasis::cubic(scale, d);
  }
  if (!spec.is_array() || spec.empty()) fail(path, "expected \"cubic:<scale>:<d>\" or a d x d matrix");
  const int d = static_cast<int>(spec.size());
  if (d < 2 || d > 3) fail(path, "dimension must be 2 or 3");
  Mat m(d, d);
  for (int r = 0; r < d; ++r) {
    const std::string rp = path + "[" + std::to_string(r) + "]";
    if (!spec[r].is_array() || static_cast<int>(spec[r].size()) != d) fail(rp, "expected a row of length " + std::to_string(d));
    for (int c = 0; c < d; ++c) {
      if (!spec[r][c].is_number()) fail(rp + "[" + std::to_string(c) + "]", "expected a number");
      m(c, r) = spec[r][c].get<double>();  // rows are generators
    }
  }
  try {
    return LatticeBasis::from_matrix(m);
  } catch (const std::exception& e) {
    fail(path, e.what());
  }
}

ExperimentConfig parse_config(const json& j) {
  if (!j.is_object()) fail("$", "expected a JSON object");
  check_keys(j, "$", {"lattice", "potential", "delta", "b", "v", "j", "schedule", "slack", "n_tau", "solver", "selection",
                      "hill", "identities", "tolerances", "inject_mu", "output", "threads"});
  ExperimentConfig cfg;
  cfg.source = j;

  const json* lat = find(j, "lattice");
  if (!lat) fail("$.lattice", "missing");
  cfg.omega = parse_lattice(*lat, "$.lattice");
  cfg.lattice_spec = lat->dump();
  try {
    cfg.gamma = dual_lattice(cfg.omega);
  } catch (const std::exception& e) {
    fail("$.lattice", e.what());
  }
  const int d = cfg.omega.dim;

  const json* pot = find(j, "potential");
  if (!pot) fail("$.potential", "missing");
  if (!pot->is_array()) fail("$.potential", "expected a list of {gamma, re, im}");
  for (size_t i = 0; i < pot->size(); ++i) {
    const std::string p = "$.potential[" + std::to_string(i) + "]";
    const json& t = (*pot)[i];
    if (!t.is_object()) fail(p, "expected {gamma, re, im}");
    check_keys(t, p, {"gamma", "re", "im"});
    const json* g = find(t, "gamma");
    if (!g) fail(p + ".gamma", "missing");
    IVec gamma = int_vector(*g, p + ".gamma");
    if (static_cast<int>(gamma.size()) != d) fail(p + ".gamma", "expected " + std::to_string(d) + " coordinates");
    cfg.terms.emplace_back(gamma, cplx(get_number(t, "re", p, 0.0), get_number(t, "im", p, 0.0)));
  }
  try {
    cfg.q = FourierPotential::from_terms(cfg.gamma, cfg.terms, &cfg.warnings);
  } catch (const std::exception& e) {
    fail("$.potential", e.what());
  }

  const json* dl = find(j, "delta");
  if (!dl) fail("$.delta", "missing");
  cfg.delta = int_vector(*dl, "$.delta");
  if (static_cast<int>(cfg.delta.size()) != d) fail("$.delta", "expected " + std::to_string(d) + " coordinates");
  if (!is_maximal(cfg.delta)) fail("$.delta", to_string(cfg.delta) + " is not a maximal element of Gamma");
  cfg.gd = gamma_delta(cfg.gamma, cfg.omega, cfg.delta);

  const json* bj = find(j, "b");
  if (!bj) fail("$.b", "missing");
  IVec bg = int_vector(*bj, "$.b");
  if (static_cast<int>(bg.size()) == d) {
    if (std::abs(cfg.gd.to_cart(bg).dot(cfg.gd.delta_cart)) > 1e-9 * cfg.gd.to_cart(bg).norm() * std::sqrt(cfg.gd.delta_norm2))
      fail("$.b", to_string(bg) + " is not orthogonal to delta");
    cfg.b = cfg.gd.gd_coords(bg);
  } else if (static_cast<int>(bg.size()) == d - 1) {
    cfg.b = bg;
  } else {
    fail("$.b", "expected Gamma coordinates (" + std::to_string(d) + ") or Gamma_delta coordinates (" +
                    std::to_string(d - 1) + ")");
  }
  if (!is_maximal(cfg.b)) fail("$.b", to_string(bg) + " is not a maximal element of Gamma_delta");

  if (const json* v = find(j, "v")) {
    if (!v->is_number()) fail("$.v", "expected a number");
    cfg.v = v->get<double>();
  } else {
    cfg.warnings.push_back("v not given; using the default v = 0.3");
  }
  if (!(cfg.v >= 0 && cfg.v < 1)) fail("$.v", "must lie in [0, 1)");

  if (const json* jl = find(j, "j")) {
    IVec js = jl->is_number_integer() ? IVec{jl->get<long long>()} : int_vector(*jl, "$.j");
    if (js.empty()) fail("$.j", "expected at least one label");
    cfg.js.assign(js.begin(), js.end());
  }

  PipelineConfig& pc = cfg.pipeline;
  pc.b = cfg.b;
  pc.v = cfg.v;
  pc.j = cfg.js.front();
  const json& sch = object_at(j, "schedule", "$");
  check_keys(sch, "$.schedule", {"rho0", "levels", "factor"});
  pc.rho0 = get_number(sch, "rho0", "$.schedule", 8);
  pc.levels = static_cast<int>(get_int(sch, "levels", "$.schedule", 2));
  pc.factor = get_number(sch, "factor", "$.schedule", 2);
  if (!(pc.rho0 > 0)) fail("$.schedule.rho0", "must be positive");
  if (pc.levels < 1 || pc.levels > 6) fail("$.schedule.levels", "must be between 1 and 6");
  if (!(pc.factor > 1)) fail("$.schedule.factor", "must exceed 1");
  pc.slack = get_number(j, "slack", "$", 4);
  if (!(pc.slack > 0)) fail("$.slack", "must be positive");
  pc.n_tau = static_cast<int>(get_int(j, "n_tau", "$", 64));
  if (pc.n_tau < 1) fail("$.n_tau", "must be positive");

  const json& sol = object_at(j, "solver", "$");
  check_keys(sol, "$.solver", {"max_dim", "window", "window_factor", "validate_window", "validate_tol"});
  pc.max_dim = static_cast<size_t>(get_int(sol, "max_dim", "$.solver", 6000));
  pc.window = get_number(sol, "window", "$.solver", 0);
  pc.window_factor = get_number(sol, "window_factor", "$.solver", 0);
  pc.validate_window = get_bool(sol, "validate_window", "$.solver", false);
  pc.validate_tol = get_number(sol, "validate_tol", "$.solver", 1e-8);
  if (pc.window < 0) fail("$.solver.window", "must be non-negative");

  pc.constants = SelectionParams::defaults(pc.rho0, d);
  const json& sel = object_at(j, "selection", "$");
  check_keys(sel, "$.selection", {"annulus_lo", "annulus_hi", "annulus_pad", "window_lo", "window_hi", "margin59",
                                  "margin60", "gap_exponent", "a_set_factor", "support_radius"});
  SelectionParams& sp = pc.constants;
  sp.annulus_lo = get_number(sel, "annulus_lo", "$.selection", sp.annulus_lo);
  sp.annulus_hi = get_number(sel, "annulus_hi", "$.selection", sp.annulus_hi);
  sp.annulus_pad = get_number(sel, "annulus_pad", "$.selection", sp.annulus_pad);
  sp.window_lo = get_number(sel, "window_lo", "$.selection", sp.window_lo);
  sp.window_hi = get_number(sel, "window_hi", "$.selection", sp.window_hi);
  sp.margin59 = get_number(sel, "margin59", "$.selection", sp.margin59);
  sp.margin60 = get_number(sel, "margin60", "$.selection", sp.margin60);
  sp.gap_exponent = get_number(sel, "gap_exponent", "$.selection", sp.gap_exponent);
  sp.a_set_factor = get_number(sel, "a_set_factor", "$.selection", sp.a_set_factor);
  if (find(sel, "support_radius")) sp.support_radius = get_number(sel, "support_radius", "$.selection", 0);

  const json& hill = object_at(j, "hill", "$");
  check_keys(hill, "$.hill", {"N", "fit_j_lo", "fit_j_hi", "m_lo", "m_hi"});
  pc.hill_N = static_cast<int>(get_int(hill, "N", "$.hill", 40));
  cfg.fit_j_lo = get_int(hill, "fit_j_lo", "$.hill", 10);
  cfg.fit_j_hi = get_int(hill, "fit_j_hi", "$.hill", 60);
  cfg.m_lo = get_int(hill, "m_lo", "$.hill", 5);
  cfg.m_hi = get_int(hill, "m_hi", "$.hill", 40);
  if (cfg.fit_j_lo < 10 || cfg.fit_j_hi <= cfg.fit_j_lo) fail("$.hill", "need 10 <= fit_j_lo < fit_j_hi");
  if (cfg.m_lo < 1 || cfg.m_hi <= cfg.m_lo + 1) fail("$.hill", "need 1 <= m_lo < m_hi - 1");

  const json& ids = object_at(j, "identities", "$");
  check_keys(ids, "$.identities", {"samples", "seed", "rhos", "n_tau"});
  cfg.identities.samples = static_cast<int>(get_int(ids, "samples", "$.identities", 50));
  cfg.identities.seed = static_cast<unsigned>(get_int(ids, "seed", "$.identities", 12345));
  cfg.identities.n_tau = static_cast<int>(get_int(ids, "n_tau", "$.identities", 16));
  if (const json* r = find(ids, "rhos")) {
    if (!r->is_array() || r->empty()) fail("$.identities.rhos", "expected a list of numbers");
    cfg.identities.rhos.clear();
    for (size_t i = 0; i < r->size(); ++i) {
      if (!(*r)[i].is_number()) fail("$.identities.rhos[" + std::to_string(i) + "]", "expected a number");
      cfg.identities.rhos.push_back((*r)[i].get<double>());
    }
  }

  const json& tol = object_at(j, "tolerances", "$");
  check_keys(tol, "$.tolerances", {"mu", "J", "I16", "I17", "I20", "Jk", "identity"});
  cfg.tol.mu = get_number(tol, "mu", "$.tolerances", cfg.tol.mu);
  cfg.tol.J = get_number(tol, "J", "$.tolerances", cfg.tol.J);
  cfg.tol.I16 = get_number(tol, "I16", "$.tolerances", cfg.tol.I16);
  cfg.tol.I17 = get_number(tol, "I17", "$.tolerances", cfg.tol.I17);
  cfg.tol.I20 = get_number(tol, "I20", "$.tolerances", cfg.tol.I20);
  cfg.tol.Jk = get_number(tol, "Jk", "$.tolerances", cfg.tol.Jk);
  cfg.tol.identity = get_number(tol, "identity", "$.tolerances", cfg.tol.identity);
  cfg.identities.tol = cfg.tol.identity;

  cfg.inject_mu = get_bool(j, "inject_mu", "$", true);
  if (const json* o = find(j, "output")) {
    if (!o->is_string()) fail("$.output", "expected a directory name");
    cfg.output_dir = o->get<std::string>();
  }
  pc.threads = static_cast<int>(get_int(j, "threads", "$", default_threads()));
  if (pc.threads < 1) fail("$.threads", "must be positive");
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return parse_config(j);
}

json ExperimentConfig::effective() const {
  json j;
  j["lattice"] = json::parse(lattice_spec);
  json pot = json::array();
  for (const auto& [g, val] : terms) pot.push_back({{"gamma", g}, {"re", val.real()}, {"im", val.imag()}});
  j["potential"] = pot;
  j["delta"] = delta;
  j["b"] = b;
  j["v"] = v;
  j["j"] = js;
  j["schedule"] = {{"rho0", pipeline.rho0}, {"levels", pipeline.levels}, {"factor", pipeline.factor}};
  j["slack"] = pipeline.slack;
  j["n_tau"] = pipeline.n_tau;
  j["solver"] = {{"max_dim", pipeline.max_dim},
                 {"window", pipeline.window},
                 {"window_factor", pipeline.window_factor},
                 {"validate_window", pipeline.validate_window},
                 {"validate_tol", pipeline.validate_tol}};
  const SelectionParams& sp = pipeline.constants;
  j["selection"] = {{"annulus_lo", sp.annulus_lo}, {"annulus_hi", sp.annulus_hi}, {"annulus_pad", sp.annulus_pad},
                    {"window_lo", sp.window_lo},   {"window_hi", sp.window_hi},   {"margin59", sp.margin59},
                    {"margin60", sp.margin60},     {"gap_exponent", sp.gap_exponent},
                    {"a_set_factor", sp.a_set_factor}};
  if (sp.support_radius) j["selection"]["support_radius"] = *sp.support_radius;
  j["hill"] = {{"N", pipeline.hill_N}, {"fit_j_lo", fit_j_lo}, {"fit_j_hi", fit_j_hi}, {"m_lo", m_lo}, {"m_hi", m_hi}};
  j["identities"] = {{"samples", identities.samples},
                     {"seed", identities.seed},
                     {"rhos", identities.rhos},
                     {"n_tau", identities.n_tau}};
  j["tolerances"] = {{"mu", tol.mu},   {"J", tol.J},     {"I16", tol.I16},          {"I17", tol.I17},
                     {"I20", tol.I20}, {"Jk", tol.Jk},   {"identity", tol.identity}};
  j["inject_mu"] = inject_mu;
  j["output"] = output_dir;
  return j;
}

std::string ExperimentConfig::hash() const {
  // FNV-1a over the canonical dump; thread count is excluded from effective().
  const std::string s = effective().dump();
  unsigned long long h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

int default_threads() {
  if (const char* env = std::getenv("BANDINV_THREADS")) {
    char* end = nullptr;
    long n = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && n >= 1) return static_cast<int>(n);
    throw ConfigError(std::string("BANDINV_THREADS: expected a positive integer, got \"") + env + "\"");
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace bandinv
