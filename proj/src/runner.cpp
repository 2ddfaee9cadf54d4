#include "bandinv/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace bandinv {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string num(double x) {
  if (!std::isfinite(x)) return std::isnan(x) ? "nan" : (x > 0 ? "inf" : "-inf");
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json deviations(const ExperimentConfig& cfg) {
  const PipelineConfig& pc = cfg.pipeline;
  json d = json::object();
  for (const auto& [k, v] : pc.constants.deviations()) d["selection." + k] = finite_or_null(v);
  d["schedule.factor"] = pc.factor;
  d["schedule.rho0"] = pc.rho0;
  d["slack"] = pc.slack;
  d["basis"] = pc.window > 0 ? "shell window W = " + num(pc.window) : "shell window, automatic W";
  d["window_validation"] = pc.validate_window;
  d["tau_quadrature"] = "midpoint grid, " + std::to_string(pc.n_tau) + " nodes";
  d["accepted_set_normalization"] = "accepted measure";
  d["limit"] = "linear extrapolation in 1/|beta_k| over the last two levels";
  d["mu_injected_for_J"] = cfg.inject_mu;
  return d;
}

DirectionalPotential directional_of(const ExperimentConfig& cfg) { return directional(cfg.q, cfg.gd.delta); }

double rel_err(double est, double oracle, double floor) {
  return std::abs(est - oracle) / std::max(std::abs(oracle), floor);
}

json compare(json e, double est, double oracle, double floor, double tol) {
  e["value"] = est;
  e["oracle"] = oracle;
  e["abs_error"] = std::abs(est - oracle);
  e["rel_error"] = rel_err(est, oracle, floor);
  e["tolerance"] = tol;
  e["pass"] = rel_err(est, oracle, floor) <= tol;
  return e;
}

json per_level(const ExtractionRun& run, const InvariantEstimate& est) {
  json lv = json::array();
  for (size_t k = 0; k < est.per_k.size(); ++k) {
    const LevelData& L = run.levels[k];
    int dmin = 1 << 30, dmax = 0;
    for (const auto& n : L.nodes) {
      dmin = std::min(dmin, n.dim);
      dmax = std::max(dmax, n.dim);
    }
    lv.push_back({{"rho", est.rho_k[k]},
                  {"beta", L.selection.beta},
                  {"beta_norm", est.beta_norm_k[k]},
                  {"value", est.per_k[k]},
                  {"acceptance", est.acceptance_k[k]},
                  {"window", L.window},
                  {"basis_dim_min", dmin},
                  {"basis_dim_max", dmax}});
  }
  return lv;
}

json base_entry(const InvariantEstimate& est, long long j) {
  return {{"name", est.name}, {"j", j}, {"method", est.method}, {"error_proxy", est.error_proxy},
          {"mu_injected", est.mu_injected}};
}

json failure_entry(const std::string& name, long long j, const std::string& what) {
  return {{"name", name}, {"j", j}, {"method", "pipeline"}, {"error", what}, {"pass", false}};
}

// mu and J for one label from a single set of band solves.
void pipeline_estimates(const ExperimentConfig& cfg, long long j, bool want_mu, bool want_J, json& out) {
  PipelineConfig pc = cfg.pipeline;
  pc.j = j;
  const double mu_oracle = hill_solve(directional_of(cfg), cfg.v, std::max<int>(pc.hill_N, std::llabs(j) + 20)).at(j).mu;
  ExtractionRun run;
  try {
    run = prepare_run(cfg.q, cfg.gd, pc);
  } catch (const std::exception& e) {
    if (want_mu) out.push_back(failure_entry("mu", j, e.what()));
    if (want_J) out.push_back(failure_entry("J", j, e.what()));
    return;
  }
  double mu_used = mu_oracle;
  if (want_mu || !cfg.inject_mu) {
    try {
      InvariantEstimate mu = extract_mu(run);
      if (!cfg.inject_mu) mu_used = mu.value;
      if (want_mu) {
        json e = base_entry(mu, j);
        e["per_level"] = per_level(run, mu);
        out.push_back(compare(e, mu.value, mu_oracle, 1e-12, cfg.tol.mu));
      }
    } catch (const std::exception& e) {
      if (want_mu) out.push_back(failure_entry("mu", j, e.what()));
      if (!cfg.inject_mu) {
        if (want_J) out.push_back(failure_entry("J", j, std::string("mu extraction failed: ") + e.what()));
        return;
      }
    }
  }
  if (!want_J) return;
  const double J_oracle = oracle_J(cfg.q, cfg.gd, cfg.b, j, cfg.v, pc.hill_N);
  const double J0 = oracle_invariants(cfg.q, cfg.gd, cfg.b).J0;
  try {
    InvariantEstimate J = extract_J(run, mu_used, cfg.inject_mu);
    json e = base_entry(J, j);
    e["per_level"] = per_level(run, J);
    e["mu_used"] = mu_used;
    const double qmax = cfg.q.max_abs();
    out.push_back(compare(e, J.value, J_oracle, std::max({1e-6 * J0, 1e-6 * qmax * qmax, 1e-9}), cfg.tol.J));
  } catch (const std::exception& e) {
    out.push_back(failure_entry("J", j, e.what()));
  }
}

json i17_entry(const ExperimentConfig& cfg) {
  try {
    DirectionalPotential Q = directional_of(cfg);
    I17Estimate est = extract_I17_from_mu(Q, cfg.m_lo, cfg.m_hi);
    const double oracle = oracle_invariants(cfg.q, cfg.gd, cfg.b).I17;
    json e = {{"name", "I17"}, {"j", nullptr}, {"method", "hill"}, {"m_lo", est.m_lo}, {"m_hi", est.m_hi},
              {"monotone", est.monotone}};
    if (!est.warning.empty()) e["warning"] = est.warning;
    I17Estimate half = extract_I17_from_mu(Q, cfg.m_lo, cfg.m_lo + (cfg.m_hi - cfg.m_lo) / 2);
    e["error_proxy"] = std::abs(est.estimate - half.estimate);
    double floor = std::max(1e-12, std::abs(oracle));
    if (oracle == 0) floor = 1e-12;
    return compare(e, est.estimate, oracle, floor, cfg.tol.I17);
  } catch (const std::exception& ex) {
    return {{"name", "I17"}, {"j", nullptr}, {"method", "hill"}, {"error", ex.what()}, {"pass", false}};
  }
}

// J_k family from oracle J values over the fit range, checked against the fitted A_k.
void fit_family(const ExperimentConfig& cfg, bool want_Jk, bool want_I16, bool want_I20, json& out) {
  try {
    DirectionalPotential Q = directional_of(cfg);
    FitSettings fs;
    AExpansion A = fit_A_expansion(Q, cfg.v, cfg.fit_j_lo, cfg.fit_j_hi, fs);
    const int N = static_cast<int>(cfg.fit_j_hi + 40 + Q.bandwidth());
    HillSpectrum hs = hill_solve(Q, cfg.v, N);
    auto g = line_restriction(abs2(q_delta_b(cfg.q, cfg.gd, cfg.b)), cfg.gd.delta);
    std::map<long long, double> Jv;
    for (long long j = cfg.fit_j_lo; j <= cfg.fit_j_hi; ++j) Jv[j] = moment(hs, j, g);
    JkFamily fam = extract_Jk_family(Jv, fs);
    const OracleInvariants orc = oracle_invariants(cfg.q, cfg.gd, cfg.b);
    const double J0 = std::abs(orc.J0);

    if (want_Jk) {
      for (int k = 0; k <= 2; ++k) {
        cplx s = 0;
        for (const auto& [n, gv] : g) s += gv * std::conj(A.A(k, n));
        json e = {{"name", "J" + std::to_string(k)}, {"j", nullptr}, {"method", "fit"},
                  {"condition", fam.condition}, {"error_proxy", 0.0}};
        out.push_back(compare(e, fam.J[k], s.real(), std::max(J0, 1e-12), cfg.tol.Jk));
      }
    }
    if (!want_I16 && !want_I20) return;
    if (!A.two_mode) {
      const std::string msg = "directional potential is not two-mode; I16/I20 derivation undefined";
      if (want_I16) out.push_back({{"name", "I16"}, {"j", nullptr}, {"method", "fit"}, {"error", msg}, {"pass", false}});
      if (want_I20) out.push_back({{"name", "I20"}, {"j", nullptr}, {"method", "fit"}, {"error", msg}, {"pass", false}});
      return;
    }
    I16I20 r = derive_I16_I20(fam, A);
    const double qd = std::abs(A.two_mode->q_delta);
    json e = {{"name", "I16"}, {"j", nullptr}, {"method", "fit"}, {"condition", fam.condition}, {"error_proxy", 0.0}};
    if (want_I16) out.push_back(compare(e, r.I16, orc.I16, std::max(J0 * qd, 1e-12), cfg.tol.I16));
    e["name"] = "I20";
    if (want_I20) out.push_back(compare(e, r.I20, orc.I20, std::max(J0 * qd * qd, 1e-12), cfg.tol.I20));
  } catch (const std::exception& ex) {
    for (auto [want, name] : {std::pair{want_Jk, "Jk"}, std::pair{want_I16, "I16"}, std::pair{want_I20, "I20"}})
      if (want) out.push_back({{"name", name}, {"j", nullptr}, {"method", "fit"}, {"error", ex.what()}, {"pass", false}});
  }
}

RunReport finish(const ExperimentConfig& cfg, const std::string& command, json estimates, json extra,
                 Clock::time_point t0) {
  RunReport rep;
  json& d = rep.doc;
  d["command"] = command;
  d["config"] = cfg.effective();
  d["config_hash"] = cfg.hash();
  d["warnings"] = cfg.warnings;
  d["deviations_from_paper_constants"] = deviations(cfg);
  d["seed"] = cfg.identities.seed;
  d["estimates"] = estimates;
  for (auto it = extra.begin(); it != extra.end(); ++it) d[it.key()] = it.value();
  for (const auto& e : estimates) {
    if (e.contains("error")) rep.failed = true;
    if (!e.value("pass", false)) rep.pass = false;
  }
  if (d.contains("identities") && !d["identities"].value("pass", false)) rep.pass = false;
  d["status"] = rep.failed ? "failed" : (rep.pass ? "pass" : "tolerance_fail");
  d["timings"] = {{"total_seconds", seconds_since(t0)}, {"threads", cfg.pipeline.threads}};
  return rep;
}

}  // namespace

Invariant parse_invariant(const std::string& name) {
  if (name == "mu") return Invariant::Mu;
  if (name == "J") return Invariant::J;
  if (name == "Jk") return Invariant::Jk;
  if (name == "I16") return Invariant::I16;
  if (name == "I17") return Invariant::I17;
  if (name == "I20") return Invariant::I20;
  throw ConfigError("--invariant: expected one of mu, J, Jk, I16, I17, I20");
}

std::string invariant_name(Invariant inv) {
  switch (inv) {
    case Invariant::Mu: return "mu";
    case Invariant::J: return "J";
    case Invariant::Jk: return "Jk";
    case Invariant::I16: return "I16";
    case Invariant::I17: return "I17";
    case Invariant::I20: return "I20";
  }
  return "";
}

RunReport run_extract(const ExperimentConfig& cfg, Invariant inv) {
  const auto t0 = Clock::now();
  json est = json::array();
  switch (inv) {
    case Invariant::Mu:
    case Invariant::J:
      for (long long j : cfg.js) pipeline_estimates(cfg, j, inv == Invariant::Mu, inv == Invariant::J, est);
      break;
    case Invariant::I17:
      est.push_back(i17_entry(cfg));
      break;
    case Invariant::Jk:
      fit_family(cfg, true, false, false, est);
      break;
    case Invariant::I16:
      fit_family(cfg, false, true, false, est);
      break;
    case Invariant::I20:
      fit_family(cfg, false, false, true, est);
      break;
  }
  return finish(cfg, "extract " + invariant_name(inv), est, json::object(), t0);
}

RunReport run_verify(const ExperimentConfig& cfg) {
  const auto t0 = Clock::now();
  json est = json::array();
  json extra;
  IdentityReport ids = check_identities(cfg.q, cfg.gd, cfg.pipeline, cfg.identities);
  json c1 = json::array();
  for (size_t i = 0; i < ids.c1_rho.size(); ++i)
    c1.push_back({{"rho", ids.c1_rho[i]}, {"beta_norm", ids.c1_beta_norm[i]}, {"median_rel_error", ids.c1_median_rel[i]}});
  extra["identities"] = {{"six_term_samples", ids.six_samples}, {"six_term_max_rel", ids.six_max_rel},
                         {"a9_samples", ids.a9_samples},        {"a9_max_rel", ids.a9_max_rel},
                         {"c1_vs_quarter", c1},                 {"tolerance", cfg.identities.tol},
                         {"pass", ids.pass}};
  for (long long j : cfg.js) pipeline_estimates(cfg, j, true, true, est);
  DirectionalPotential Q = directional_of(cfg);
  if (!Q.is_zero()) {
    est.push_back(i17_entry(cfg));
    const bool two_mode = Q.coeffs.size() == 2 && Q.coeffs.count(1) && Q.coeffs.count(-1);
    if (cfg.v > 0 && std::abs(cfg.v - 0.5) > 1e-12) fit_family(cfg, true, two_mode, two_mode, est);
  }
  return finish(cfg, "verify", est, extra, t0);
}

std::string estimates_csv(const json& doc) {
  std::ostringstream os;
  os << "name,j,method,value,oracle,rel_error,tolerance,pass\n";
  for (const auto& e : doc.at("estimates")) {
    os << e.at("name").get<std::string>() << ',' << (e.at("j").is_null() ? "" : std::to_string(e.at("j").get<long long>()))
       << ',' << e.at("method").get<std::string>() << ',';
    if (e.contains("error")) {
      os << ",,,," << "error\n";
      continue;
    }
    os << num(e.at("value").get<double>()) << ',' << num(e.at("oracle").get<double>()) << ','
       << num(e.at("rel_error").get<double>()) << ',' << num(e.at("tolerance").get<double>()) << ','
       << (e.at("pass").get<bool>() ? "true" : "false") << '\n';
  }
  return os.str();
}

std::string levels_csv(const json& doc) {
  std::ostringstream os;
  os << "name,j,level,rho,beta_norm,value,acceptance,window,basis_dim_max\n";
  for (const auto& e : doc.at("estimates")) {
    if (!e.contains("per_level")) continue;
    int k = 0;
    for (const auto& l : e.at("per_level")) {
      os << e.at("name").get<std::string>() << ',' << e.at("j").get<long long>() << ',' << k++ << ','
         << num(l.at("rho").get<double>()) << ',' << num(l.at("beta_norm").get<double>()) << ','
         << num(l.at("value").get<double>()) << ',' << num(l.at("acceptance").get<double>()) << ','
         << num(l.at("window").get<double>()) << ',' << l.at("basis_dim_max").get<int>() << '\n';
    }
  }
  return os.str();
}

std::string summary_text(const json& doc) {
  std::ostringstream os;
  os << doc.value("command", "") << "  config " << doc.value("config_hash", "") << "  status "
     << doc.value("status", "") << '\n';
  char buf[256];
  for (const auto& e : doc.at("estimates")) {
    std::string j = e.at("j").is_null() ? "-" : std::to_string(e.at("j").get<long long>());
    if (e.contains("error")) {
      std::snprintf(buf, sizeof buf, "  %-4s j=%-3s ERROR %s\n", e.at("name").get<std::string>().c_str(), j.c_str(),
                    e.at("error").get<std::string>().c_str());
    } else {
      std::snprintf(buf, sizeof buf, "  %-4s j=%-3s %-8s est % .8e  oracle % .8e  rel %.3e  tol %.1e  %s\n",
                    e.at("name").get<std::string>().c_str(), j.c_str(), e.at("method").get<std::string>().c_str(),
                    e.at("value").get<double>(), e.at("oracle").get<double>(), e.at("rel_error").get<double>(),
                    e.at("tolerance").get<double>(), e.at("pass").get<bool>() ? "ok" : "FAIL");
    }
    os << buf;
  }
  if (doc.contains("identities")) {
    const json& id = doc["identities"];
    std::snprintf(buf, sizeof buf, "  identities: six-term %.2e (%d)  A9 %.2e (%d)  %s\n",
                  id.at("six_term_max_rel").get<double>(), id.at("six_term_samples").get<int>(),
                  id.at("a9_max_rel").get<double>(), id.at("a9_samples").get<int>(),
                  id.at("pass").get<bool>() ? "ok" : "FAIL");
    os << buf;
    for (const auto& c : id.at("c1_vs_quarter")) {
      std::snprintf(buf, sizeof buf, "    C1 vs quarter integral: rho %g |beta| %g median rel %.4f\n",
                    c.at("rho").get<double>(), c.at("beta_norm").get<double>(), c.at("median_rel_error").get<double>());
      os << buf;
    }
  }
  return os.str();
}

void write_report(const RunReport& rep, const std::string& dir) {
  std::filesystem::create_directories(dir);
  auto put = [&](const std::string& name, const std::string& text) {
    std::ofstream f(std::filesystem::path(dir) / name);
    if (!f) throw std::runtime_error("cannot write " + (std::filesystem::path(dir) / name).string());
    f << text;
  };
  put("report.json", rep.doc.dump(2) + "\n");
  put("estimates.csv", estimates_csv(rep.doc));
  put("levels.csv", levels_csv(rep.doc));
}

std::string bands_csv(const ExperimentConfig& cfg, const Vec& t, double window, double cutoff, int n_bands) {
  BasisSpec spec;
  if (cutoff > 0) {
    spec = BasisSpec::full_ball(cutoff);
  } else {
    const double e_star = t.squaredNorm();
    double W = window > 0 ? window : 40.0 * cfg.q.max_abs() * static_cast<double>(cfg.q.coeffs.size());
    spec = BasisSpec::shell(e_star, std::max(W, 16.0), std::sqrt(std::max(W, 16.0)));
  }
  spec.max_dim = cfg.pipeline.max_dim;
  SolveOptions opt;
  opt.validate = cfg.pipeline.validate_window;
  opt.validate_tol = cfg.pipeline.validate_tol;
  BandSpectrum bs = assemble_and_solve(cfg.q, t, spec, opt);
  std::ostringstream os;
  os << "N,lambda,trusted,gap\n";
  const int n = std::min(bs.size(), n_bands > 0 ? n_bands : bs.size());
  for (int i = 0; i < n; ++i) {
    double gap = std::numeric_limits<double>::infinity();
    if (i > 0) gap = std::min(gap, bs.eigenvalues(i) - bs.eigenvalues(i - 1));
    if (i + 1 < bs.size()) gap = std::min(gap, bs.eigenvalues(i + 1) - bs.eigenvalues(i));
    os << i << ',' << num(bs.eigenvalues(i)) << ',' << (bs.trusted[i] ? "true" : "false") << ',' << num(gap) << '\n';
  }
  return os.str();
}

std::string hill_csv(const ExperimentConfig& cfg, double v, int n_max, const std::vector<long long>& js) {
  DirectionalPotential Q = directional_of(cfg);
  HillSpectrum hs = hill_solve(Q, v, n_max);
  std::ostringstream os;
  os << "j,mu,phi2_0,phi2_1_re,phi2_1_im,phi2_2_re,phi2_2_im\n";
  for (long long j : js) {
    auto P = phi_sq_coeffs(hs, j);
    os << j << ',' << num(hs.at(j).mu) << ',' << num(P[0].real()) << ',' << num(P[1].real()) << ','
       << num(P[1].imag()) << ',' << num(P[2].real()) << ',' << num(P[2].imag()) << '\n';
  }
  return os.str();
}

}  // namespace bandinv
