// Prints one PASS/FAIL line per acceptance criterion; exits 1 if any fails.
#include "bandinv/config.hpp"

#include <algorithm>
#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>

using namespace bandinv;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

ExperimentConfig shipped(const std::string& name) { return load_config(std::string(BANDINV_CONFIG_DIR) + "/" + name); }

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

int failures = 0;

void report(int n, bool ok, const std::string& detail) {
  std::printf("criterion %d: %s  %s\n", n, ok ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

double median(std::vector<double> v) {
  if (v.empty()) return NAN;
  std::sort(v.begin(), v.end());
  size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

PipelineConfig for_label(const ExperimentConfig& cfg, long long j) {
  PipelineConfig pc = cfg.pipeline;
  pc.j = j;
  return pc;
}

void criterion1() {
  auto t0 = Clock::now();
  auto cfg = shipped("free.json");
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-3, 3);
  double band_err = 0;
  for (int trial = 0; trial < 10; ++trial) {
    Vec t(2);
    t << u(rng), u(rng);
    const double R = 15;
    auto spec = assemble_and_solve(cfg.q, t, BasisSpec::full_ball(R), {false});
    std::vector<double> want;
    for (long long a = -12; a <= 12; ++a)
      for (long long b = -12; b <= 12; ++b) {
        Vec k = cfg.gamma.to_cart({a, b}) + t;
        if (k.norm() <= R) want.push_back(k.squaredNorm());
      }
    std::sort(want.begin(), want.end());
    if (want.size() != static_cast<size_t>(spec.size())) band_err = INFINITY;
    for (int i = 0; i < spec.size() && i < static_cast<int>(want.size()); ++i)
      band_err = std::max(band_err, std::abs(spec.eigenvalues(i) - want[i]));
  }
  double mu_err = 0;
  for (long long j : cfg.js) {
    auto run = prepare_run(cfg.q, cfg.gd, for_label(cfg, j));
    const double jv = j + cfg.v;
    mu_err = std::max(mu_err, std::abs(extract_mu(run).value - jv * jv * cfg.gd.delta_norm2));
  }
  double dt = seconds_since(t0);
  report(1, band_err <= 1e-12 && mu_err <= 1e-10 && dt < 10,
         fmt("bands max err %.2e (<=1e-12), mu max err %.2e (<=1e-10), %.1fs (<10s)", band_err, mu_err, dt));
}

void criterion2() {
  auto t0 = Clock::now();
  auto cfg = shipped("separable.json");
  auto hs = hill_solve(directional(cfg.q, cfg.delta), cfg.v, cfg.pipeline.hill_N);
  double worst = 0;
  size_t levels = 0;
  for (long long j : cfg.js) {
    auto run = prepare_run(cfg.q, cfg.gd, for_label(cfg, j));
    auto mu = extract_mu(run);
    for (double x : mu.per_k) worst = std::max(worst, std::abs(x - hs.at(j).mu));
    levels = mu.per_k.size();
  }
  double dt = seconds_since(t0);
  report(2, worst <= 1e-8 && dt < 120,
         fmt("max |mu_k - hill mu| %.2e over %zu levels (<=1e-8), %.1fs (<120s)", worst, levels, dt));
}

struct GenericRuns {
  ExperimentConfig cfg;
  std::vector<ExtractionRun> runs;  // per j, levels at rho 8 and 16
  std::vector<double> mu;
};

GenericRuns generic_runs() {
  GenericRuns g{shipped("generic.json"), {}, {}};
  auto hs = hill_solve(directional(g.cfg.q, g.cfg.delta), g.cfg.v, g.cfg.pipeline.hill_N);
  for (long long j : {0LL, 1LL}) {
    PipelineConfig pc = for_label(g.cfg, j);
    pc.rho0 = 8;
    pc.levels = 2;
    g.runs.push_back(prepare_run(g.cfg.q, g.cfg.gd, pc));
    extract_mu(g.runs.back());
    g.mu.push_back(hs.at(j).mu);
  }
  return g;
}

void criterion3(const GenericRuns& g) {
  bool ok = true;
  std::string detail;
  for (size_t r = 0; r < g.runs.size(); ++r) {
    const auto& run = g.runs[r];
    double med[2];
    size_t count[2];
    for (int k = 0; k < 2; ++k) {
      const auto& l = run.levels[k];
      std::vector<double> d;
      for (size_t i = 0; i < l.nodes.size(); ++i)
        if (l.A[i].accepted()) d.push_back(std::abs(l.A[i].lambda - l.nodes[i].bt2 - g.mu[r]));
      med[k] = median(d);
      count[k] = d.size();
    }
    ok = ok && count[0] >= 20 && count[1] >= 20 && med[1] < med[0];
    detail += fmt("j=%lld median %.3e (rho 8, %zu nodes) -> %.3e (rho 16, %zu nodes); ", run.cfg.j, med[0], count[0],
                  med[1], count[1]);
  }
  report(3, ok, detail);
}

void criterion4_5() {
  auto cfg = shipped("symmetric.json");
  IdentitySettings s = cfg.identities;
  s.rhos = {8, 16};
  s.samples = 50;
  auto t0 = Clock::now();
  auto rep = check_identities(cfg.q, cfg.gd, cfg.pipeline, s);
  double dt = seconds_since(t0);
  const double e8 = rep.c1_median_rel[0], e16 = rep.c1_median_rel[1];
  report(4, e16 < e8 && e16 <= 0.10,
         fmt("median C1 relative error %.4f (rho 8) -> %.4f (rho 16, <=0.10)", e8, e16));
  report(5, rep.six_samples == 50 && rep.a9_samples == 50 && rep.six_max_rel <= 1e-12 && rep.a9_max_rel <= 1e-12 && dt < 60,
         fmt("six-term %zu samples max %.2e, A9 %zu samples max %.2e (<=1e-12), %.1fs (<60s)", rep.six_samples,
             rep.six_max_rel, rep.a9_samples, rep.a9_max_rel, dt));
}

void criterion6() {
  auto cfg = shipped("mathieu.json");
  auto Q = directional(cfg.q, cfg.delta);
  // Normalized integral of Q^2 over a period by the trapezoid rule.
  const int n = 4096;
  double oracle = 0;
  for (int i = 0; i < n; ++i) {
    double z = 2 * M_PI * i / n, qz = 0;
    for (const auto& [k, c] : Q.coeffs) qz += (c * std::exp(cplx(0, k * z))).real();
    oracle += qz * qz / n;
  }
  const long long lo = cfg.m_lo, hi = cfg.m_hi, half = lo + (hi - lo) / 2;
  auto wide = extract_I17_from_mu(Q, lo, hi);
  auto narrow = extract_I17_from_mu(Q, lo, half);
  const double ew = rel(wide.estimate, oracle), en = rel(narrow.estimate, oracle);
  report(6, hi <= 40 && ew <= 0.02 && ew < en,
         fmt("I17 %.6f vs oracle %.6f: error %.2e with m in [%lld,%lld] (<=2e-2), %.2e with m in [%lld,%lld]",
             wide.estimate, oracle, ew, lo, hi, en, lo, half));
}

void criterion7() {
  auto cfg = shipped("generic.json");
  auto hs = hill_solve(directional(cfg.q, cfg.delta), cfg.v, cfg.pipeline.hill_N);
  bool ok = true;
  std::string detail;
  for (double rho0 : {8.0, 16.0}) {
    const double tol = rho0 == 8.0 ? 0.10 : 0.05;
    for (long long j : {0LL, 1LL}) {
      PipelineConfig pc = for_label(cfg, j);
      pc.rho0 = rho0;
      pc.levels = 2;
      auto run = prepare_run(cfg.q, cfg.gd, pc);
      double est = extract_J(run, hs.at(j).mu, true).value;
      double oracle = oracle_J(cfg.q, cfg.gd, cfg.b, j, cfg.v, cfg.pipeline.hill_N);
      double e = rel(est, oracle);
      ok = ok && e <= tol;
      detail += fmt("rho0=%g j=%lld err %.3f (<=%.2f); ", rho0, j, e, tol);
    }
  }
  report(7, ok, detail);
}

void criterion8_9() {
  auto cfg = shipped("twomode.json");
  auto Q = directional(cfg.q, cfg.delta);
  auto A = fit_A_expansion(Q, cfg.v, cfg.fit_j_lo, cfg.fit_j_hi);
  double a1 = 0, a2 = 0;
  for (const auto& [m, coeffs] : A.modes) {
    a1 = std::max(a1, std::abs(A.A(1, m)));
    a2 = std::max(a2, std::abs(A.A(2, m)));
  }
  std::map<long long, double> Jv;
  for (long long j = cfg.fit_j_lo; j <= cfg.fit_j_hi; ++j) Jv[j] = oracle_J(cfg.q, cfg.gd, cfg.b, j, cfg.v, 100);
  auto fam = extract_Jk_family(Jv);
  report(8, a1 <= 1e-3 * a2 && std::abs(fam.J[1]) <= 1e-3 * std::abs(fam.J[0]),
         fmt("max|A1| %.2e vs 1e-3 max|A2| %.2e; |J1| %.2e vs 1e-3|J0| %.2e", a1, 1e-3 * a2, std::abs(fam.J[1]),
             1e-3 * std::abs(fam.J[0])));

  auto inv = derive_I16_I20(fam, A);
  auto orc = oracle_invariants(cfg.q, cfg.gd, cfg.b);
  const double e16 = rel(inv.I16, orc.I16), e20 = rel(inv.I20, orc.I20);
  report(9, e16 <= 0.05 && e20 <= 0.10,
         fmt("I16 %.6g vs %.6g err %.2e (<=5e-2); I20 %.6g vs %.6g err %.2e (<=1e-1)", inv.I16, orc.I16, e16, inv.I20,
             orc.I20, e20));
}

void criterion10(const GenericRuns& g) {
  const auto& cfg = g.cfg;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-1, 1);
  std::uniform_int_distribution<int> pick(0, 30);
  double worst = 0;
  int checked = 0, guard = 0;
  while (checked < 20 && guard++ < 1000) {
    Vec t(2), h(2);
    t << 6 * u(rng), 6 * u(rng);
    h << u(rng), u(rng);
    h.normalize();
    const double R = 18, eps = 1e-5;
    auto spec = assemble_and_solve(cfg.q, t, BasisSpec::full_ball(R));
    int N = pick(rng);
    if (!is_simple(spec, N, 1e-2)) continue;
    auto p = assemble_and_solve(cfg.q, t + eps * h, BasisSpec::full_ball(R), {false});
    auto m = assemble_and_solve(cfg.q, t - eps * h, BasisSpec::full_ball(R), {false});
    if (p.basis.size() != spec.basis.size() || m.basis.size() != spec.basis.size()) continue;
    double fd = (p.eigenvalues(N) - m.eigenvalues(N)) / (2 * eps);
    double hf = band_derivative(spec, N, h, 1e-2);
    worst = std::max(worst, std::abs(hf - fd) / std::max(1.0, std::abs(fd)));
    ++checked;
  }

  bool sep_ok = true;
  std::string sep;
  for (size_t r = 0; r < g.runs.size(); ++r) {
    const auto& run = g.runs[r];
    const auto& l = run.levels[1];
    auto th = thresholds(l.params, run.cfg.slack);
    int acc = 0, separated = 0;
    for (size_t i = 0; i < l.nodes.size(); ++i) {
      if (!l.A[i].accepted()) continue;
      const auto& n = l.nodes[i];
      const int N = l.A[i].N;
      ++acc;
      Vec bt = l.selection.beta_cart + n.tau;
      Vec t = bt + (run.cfg.j + run.cfg.v) * run.gd.delta_cart;
      auto bs = assemble_and_solve(cfg.q, t, BasisSpec::shell(n.bt2 + run.free_delta_energy, l.window));
      bool ok = true;
      for (int M : {N - 1, N + 1}) {
        if (M < 0 || M >= static_cast<int>(n.eig.size()) || !n.simple[M]) continue;
        Eigen::Index a;
        bs.vectors.col(M).cwiseAbs().maxCoeff(&a);
        if (is_zero(run.gd.gd_coords(bs.basis.indices[a]))) continue;
        if (std::abs(n.deriv_dev[M]) < th.w64) ok = false;
      }
      separated += ok;
    }
    double frac = acc ? static_cast<double>(separated) / acc : 0.0;
    sep_ok = sep_ok && acc > 0 && frac >= 0.9;
    sep += fmt("j=%lld %d/%d; ", run.cfg.j, separated, acc);
  }
  report(10, checked == 20 && worst <= 1e-6 && sep_ok,
         fmt("HF vs FD max rel %.2e on %d simple eigenvalues (<=1e-6); separation at rho 16 (>=90%%): %s", worst,
             checked, sep.c_str()));
}

template <class F>
void guarded(std::initializer_list<int> ns, F f) {
  try {
    f();
  } catch (const std::exception& e) {
    for (int n : ns) report(n, false, std::string("error: ") + e.what());
  }
}

}  // namespace

int main() {
  guarded({1}, criterion1);
  guarded({2}, criterion2);
  GenericRuns g;
  bool have_generic = true;
  try {
    g = generic_runs();
  } catch (const std::exception& e) {
    have_generic = false;
    report(3, false, std::string("error: ") + e.what());
  }
  if (have_generic) guarded({3}, [&] { criterion3(g); });
  guarded({4, 5}, criterion4_5);
  guarded({6}, criterion6);
  guarded({7}, criterion7);
  guarded({8, 9}, criterion8_9);
  if (have_generic)
    guarded({10}, [&] { criterion10(g); });
  else
    report(10, false, "generic run unavailable");
  std::printf("%s: %d criterion(s) failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
