#include "bandinv/invariants.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace bandinv {

namespace {

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr err;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lk(mu);
          if (!err) err = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

std::vector<std::pair<Vec, double>> tau_grid(const GammaDelta& gd, int n_tau) {
  const int k = gd.rank();
  int per = std::max(1, static_cast<int>(std::lround(std::pow(static_cast<double>(n_tau), 1.0 / k))));
  int total = 1;
  for (int i = 0; i < k; ++i) total *= per;
  const double w = gd.fd_measure() / total;
  std::vector<std::pair<Vec, double>> out;
  out.reserve(total);
  for (int idx = 0; idx < total; ++idx) {
    Vec y(k);
    int r = idx;
    for (int i = 0; i < k; ++i) {
      y(i) = -0.5 + (r % per + 0.5) / per;
      r /= per;
    }
    out.emplace_back(gd.gd_basis * y, w);
  }
  return out;
}

double median(std::vector<double> x) {
  if (x.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(x.begin(), x.end());
  size_t n = x.size();
  return n % 2 ? x[n / 2] : 0.5 * (x[n / 2 - 1] + x[n / 2]);
}

std::string failure_summary(const std::vector<Classification>& cls) {
  std::map<std::string, size_t> counts;
  for (const auto& c : cls)
    if (!c.accepted()) ++counts[c.failure];
  std::ostringstream os;
  bool first = true;
  for (const auto& [k, n] : counts) {
    os << (first ? "" : ", ") << k << ": " << n;
    first = false;
  }
  return os.str();
}

}  // namespace

ClassifierThresholds thresholds(const SelectionParams& p, double slack) {
  ClassifierThresholds th;
  th.w62 = 1.0;
  th.w64 = slack * std::pow(p.rho, 2 - 2 * p.a + p.alpha);
  th.w65 = slack * std::pow(p.rho, -2 * p.a + p.alpha / 2);
  return th;
}

NodeData node_from_spectrum(const BandSpectrum& spec, const Vec& beta_tau, const Vec& b_cart, double weight) {
  NodeData nd;
  nd.weight = weight;
  nd.bt2 = beta_tau.squaredNorm();
  const double bn = std::sqrt(nd.bt2);
  const double pb = beta_tau.dot(b_cart);
  nd.prefactor = pb * pb / (b_cart.squaredNorm() * b_cart.squaredNorm());
  nd.gap_min = default_gap_min(spec);
  nd.dim = spec.size();
  Vec h = beta_tau / bn;
  Vec w = spec.kvecs.transpose() * h;
  Vec deriv = 2.0 * (spec.vectors.cwiseAbs2().transpose() * w);
  const int n = spec.size();
  nd.eig.resize(n);
  nd.deriv_dev.resize(n);
  nd.simple.resize(n);
  nd.trusted.resize(n);
  for (int i = 0; i < n; ++i) {
    nd.eig[i] = spec.eigenvalues(i);
    nd.deriv_dev[i] = 0.5 * bn * deriv(i) - nd.bt2;
    nd.simple[i] = is_simple(spec, i, nd.gap_min);
    nd.trusted[i] = spec.trusted[i];
  }
  return nd;
}

namespace {

template <class Window>
Classification classify(const NodeData& node, double target, Window in_window, const char* window_name,
                        double w64) {
  Classification c;
  int nearest = -1;
  double nd = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < node.eig.size(); ++i) {
    double d = std::abs(node.eig[i] - target);
    if (d < nd) {
      nd = d;
      nearest = static_cast<int>(i);
    }
    if (!node.trusted[i] || !in_window(node.eig[i]) || !node.simple[i] || !(std::abs(node.deriv_dev[i]) < w64))
      continue;
    ++c.passing;
    if (c.passing == 1) {
      c.N = static_cast<int>(i);
      c.lambda = node.eig[i];
    }
  }
  if (c.passing == 1) return c;
  if (c.passing > 1) {
    c.N = -1;
    c.failure = "ambiguous";
    return c;
  }
  if (nearest < 0 || !node.trusted[nearest])
    c.failure = "untrusted";
  else if (!in_window(node.eig[nearest]))
    c.failure = window_name;
  else if (!node.simple[nearest])
    c.failure = "c63";
  else
    c.failure = "c64";
  return c;
}

}  // namespace

Classification classify_A(const NodeData& node, double free_delta_energy, const ClassifierThresholds& th) {
  const double target = node.bt2 + free_delta_energy;
  return classify(
      node, target, [&](double e) { return std::abs(e - target) < th.w62; }, "c62", th.w64);
}

Classification classify_B(const NodeData& node, double mu, const ClassifierThresholds& th) {
  const double target = node.bt2 + mu;
  return classify(
      node, target, [&](double e) { return std::abs(e - target) < th.w65; }, "c65", th.w64);
}

ExtractionRun prepare_run(const FourierPotential& q, const GammaDelta& gd, const PipelineConfig& cfg) {
  if (cfg.levels < 1) throw std::invalid_argument("levels must be >= 1");
  ExtractionRun run;
  run.cfg = cfg;
  run.gd = gd;
  run.b_cart = gd.gd_to_cart(cfg.b);
  run.fd_measure = gd.fd_measure();
  const double jv = static_cast<double>(cfg.j) + cfg.v;
  run.free_delta_energy = jv * jv * gd.delta_norm2;
  const auto support = q.support();
  const auto grid = tau_grid(gd, cfg.n_tau);
  const double gmax = q.max_frequency();

  for (int k = 0; k < cfg.levels; ++k) {
    LevelData lvl;
    lvl.rho = cfg.rho0 * std::pow(cfg.factor, k);
    lvl.params = cfg.constants;
    lvl.params.rho = lvl.rho;
    lvl.selection = select_beta(gd, cfg.b, cfg.v, lvl.params, support);
    const Vec beta = lvl.selection.beta_cart;
    double W = cfg.window;
    if (W <= 0) {
      W = 40.0 * q.max_abs() * static_cast<double>(support.size());
      W = std::max(W, cfg.window_factor * (2.0 * beta.norm() * gmax + gmax * gmax));
      W = std::max(W, 16.0 + 4.0 * run.free_delta_energy);
    }
    lvl.window = W;
    lvl.nodes.resize(grid.size());
    parallel_for(static_cast<int>(grid.size()), cfg.threads, [&](int i) {
      const Vec bt = beta + grid[i].first;
      const Vec t = bt + jv * gd.delta_cart;
      BasisSpec spec = BasisSpec::shell(bt.squaredNorm() + run.free_delta_energy, W);
      spec.max_dim = cfg.max_dim;
      SolveOptions opt;
      opt.validate = cfg.validate_window;
      opt.validate_tol = cfg.validate_tol;
      BandSpectrum bs = assemble_and_solve(q, t, spec, opt);
      lvl.nodes[i] = node_from_spectrum(bs, bt, run.b_cart, grid[i].second);
      lvl.nodes[i].tau = grid[i].first;
    });
    run.levels.push_back(std::move(lvl));
  }
  return run;
}

InvariantEstimate oracle_estimate(const std::string& name, double value) {
  InvariantEstimate e;
  e.name = name;
  e.value = value;
  e.method = "oracle";
  return e;
}

double richardson_limit(const std::vector<double>& values, const std::vector<double>& beta_norms) {
  if (values.empty()) throw std::invalid_argument("no levels");
  const size_t n = values.size();
  if (n < 2) return values.back();
  double x0 = 1.0 / beta_norms[n - 2], x1 = 1.0 / beta_norms[n - 1];
  if (std::abs(x0 - x1) < 1e-14) return values.back();
  return (values[n - 1] * x0 - values[n - 2] * x1) / (x0 - x1);
}

InvariantEstimate extract_mu(ExtractionRun& run) {
  if (!(run.cfg.v > 0 && run.cfg.v < 1) || std::abs(run.cfg.v - 0.5) < 1e-15)
    throw std::invalid_argument("extract_mu requires v in (0, 1/2) or (1/2, 1)");
  InvariantEstimate est;
  est.name = "mu";
  est.method = "pipeline";
  for (auto& lvl : run.levels) {
    ClassifierThresholds th = thresholds(lvl.params, run.cfg.slack);
    lvl.A.clear();
    double s = 0, wsum = 0;
    size_t acc = 0;
    for (const auto& node : lvl.nodes) {
      Classification c = classify_A(node, run.free_delta_energy, th);
      if (c.accepted()) {
        ++acc;
        wsum += node.weight;
        s += node.weight * (c.lambda - node.bt2);
      }
      lvl.A.push_back(c);
    }
    double rate = static_cast<double>(acc) / static_cast<double>(lvl.nodes.size());
    if (rate < 0.5) {
      std::ostringstream os;
      os << "acceptance rate " << rate << " below 50% at rho=" << lvl.rho << " (" << failure_summary(lvl.A) << ")";
      throw std::runtime_error(os.str());
    }
    est.per_k.push_back(s / wsum);
    est.rho_k.push_back(lvl.rho);
    est.beta_norm_k.push_back(lvl.selection.beta_cart.norm());
    est.acceptance_k.push_back(rate);
  }
  est.value = richardson_limit(est.per_k, est.beta_norm_k);
  if (est.per_k.size() > 1) est.error_proxy = std::abs(est.per_k.back() - est.per_k[est.per_k.size() - 2]);
  return est;
}

InvariantEstimate extract_J(ExtractionRun& run, double mu, bool injected) {
  InvariantEstimate est;
  est.name = "J";
  est.method = "pipeline";
  est.mu_injected = injected;
  for (auto& lvl : run.levels) {
    ClassifierThresholds th = thresholds(lvl.params, run.cfg.slack);
    lvl.B.clear();
    double s = 0, wsum = 0;
    size_t acc = 0;
    for (const auto& node : lvl.nodes) {
      Classification c = classify_B(node, mu, th);
      if (c.accepted()) {
        ++acc;
        wsum += node.weight;
        s += node.weight * 4.0 * node.prefactor * (c.lambda - node.bt2 - mu);
      }
      lvl.B.push_back(c);
    }
    if (acc == 0) {
      std::ostringstream os;
      os << "empty B set at rho=" << lvl.rho << " (" << failure_summary(lvl.B) << ")";
      throw std::runtime_error(os.str());
    }
    est.per_k.push_back(s / wsum);
    est.rho_k.push_back(lvl.rho);
    est.beta_norm_k.push_back(lvl.selection.beta_cart.norm());
    est.acceptance_k.push_back(static_cast<double>(acc) / static_cast<double>(lvl.nodes.size()));
  }
  est.value = richardson_limit(est.per_k, est.beta_norm_k);
  if (est.per_k.size() > 1) est.error_proxy = std::abs(est.per_k.back() - est.per_k[est.per_k.size() - 2]);
  return est;
}

double oracle_J(const FourierPotential& q, const GammaDelta& gd, const IVec& b, long long j, double v, int hill_N) {
  DirectionalPotential Q = directional(q, gd.delta);
  HillSpectrum hs = hill_solve(Q, v, std::max<int>(hill_N, static_cast<int>(std::llabs(j) + 20 + Q.bandwidth())));
  auto g = line_restriction(abs2(q_delta_b(q, gd, b)), gd.delta);
  return moment(hs, j, g);
}

JkFamily extract_Jk_family(const std::map<long long, double>& J_values, const FitSettings& s) {
  std::vector<long long> js;
  std::vector<cplx> vals;
  for (const auto& [j, v] : J_values) {
    js.push_back(j);
    vals.emplace_back(v, 0.0);
  }
  JkFamily out;
  auto c = fit_inverse_powers(js, vals, s.fit_order, s.max_condition, &out.condition);
  for (int k = 0; k <= s.order; ++k) out.J.push_back(c[k].real());
  return out;
}

I16I20 derive_I16_I20(const JkFamily& Jk, const AExpansion& A) {
  if (!A.two_mode) throw std::invalid_argument("derive_I16_I20 requires a two-mode directional potential");
  if (Jk.J.size() < 5) throw std::invalid_argument("derive_I16_I20 needs J_0..J_4");
  const auto& t = *A.two_mode;
  const double q2 = std::norm(t.q_delta);
  I16I20 out;
  out.I16 = (Jk.J[2] - t.a1 * q2 * Jk.J[0]) / t.half;
  out.I20 = (Jk.J[4] - t.a4 * out.I16 - t.a6 * Jk.J[0]) / t.a5;
  return out;
}

SixTermResult six_term_identity(const Vec& beta, const Vec& b1, const Vec& b2, double min_rel_den) {
  SixTermResult r;
  const double x1 = beta.dot(b1), x2 = beta.dot(b2), x12 = beta.dot(b1 + b2);
  const double m1 = beta.dot(-b1), m2 = beta.dot(-b2), m12 = beta.dot(-b1 - b2);
  const double bn = beta.norm();
  for (double den : {x1, x2, x12}) {
    if (std::abs(den) < min_rel_den * bn * std::max(b1.norm(), b2.norm())) {
      r.rejected = true;
      return r;
    }
  }
  const double t[6] = {1.0 / (x1 * x12), 1.0 / (x2 * x12), 1.0 / (x1 * m2),
                       1.0 / (x2 * m1),  1.0 / (m12 * m2), 1.0 / (m12 * m1)};
  for (double v : t) {
    r.sum += v;
    r.scale = std::max(r.scale, std::abs(v));
  }
  return r;
}

A9Result a9_antisymmetry(const FourierPotential& q, const GammaDelta& gd, const HillSpectrum& hill, long long j,
                         long long jp, const Vec& beta, const IVec& beta1, long long n1, long long n2) {
  A9Result r;
  const Vec b1 = gd.gd_to_cart(beta1);
  auto c = [&](long long n, const IVec& bb) { return q.coeff(gd.join(n, bb)); };
  const CVec& cj = hill.at(j).coeffs;
  const CVec& cjp = hill.at(jp).coeffs;
  const long long N = hill.N;
  auto a = [&](long long n) {
    cplx s = 0;
    for (long long m = -N; m <= N; ++m) {
      long long mn = m + n;
      if (mn < -N || mn > N) continue;
      s += cjp(m + N) * std::conj(cj(mn + N));
    }
    return s;
  };
  const double d1 = -2.0 * beta.dot(b1);
  const double d2 = -2.0 * beta.dot(-b1);
  if (d1 == 0.0) {
    r.rejected = true;
    return r;
  }
  const IVec mb1 = -beta1;
  cplx t1 = c(n1, beta1) * c(n2, mb1) * a(n1 + n2) / d1;
  cplx t2 = c(n2, mb1) * c(n1, beta1) * a(n2 + n1) / d2;
  r.term = std::abs(t1);
  r.residual = std::abs(t1 + t2);
  return r;
}

C1Comparison c1_vs_quarter(const FourierPotential& q, const GammaDelta& gd, long long j, double v, const Vec& beta,
                           const Vec& tau, int hill_N, double radius) {
  DirectionalPotential Q = directional(q, gd.delta);
  HillSpectrum h0 = hill_solve(Q, v, hill_N);
  const Vec bt = beta + tau;
  const double lam = bt.squaredNorm() + h0.at(j).mu;
  constexpr double two_pi = 2.0 * std::numbers::pi;

  std::map<IVec, std::vector<std::pair<IVec, cplx>>> groups;
  for (const auto& [k, val] : q.coeffs) {
    IVec c = gd.gd_coords(k);
    if (is_zero(c)) continue;
    if (gd.to_cart(k).norm() >= radius) continue;
    groups[c].emplace_back(k, val);
  }

  std::map<long long, HillSpectrum> cache;
  const CVec& cj = h0.at(j).coeffs;
  const long long N = hill_N;
  double C1 = 0;
  for (const auto& [c, members] : groups) {
    const Vec b1 = gd.gd_to_cart(c);
    const double s = b1.dot(gd.delta_star) / two_pi;
    const double f = std::floor(v - s + 1e-12);
    double vp = v - s - f;
    if (vp < 0) vp = 0;
    long long key = std::llround(vp * 1e12);
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, hill_solve(Q, vp, hill_N)).first;
    const HillSpectrum& hp = it->second;
    const double base = (bt + b1).squaredNorm();
    for (const auto& [jp, pair] : hp.pairs) {
      if (std::llabs(jp) > N - 10) continue;
      cplx A = 0;
      for (const auto& [g, qg] : members) {
        long long na = gd.delta_index(g) + static_cast<long long>(f);
        cplx inner = 0;
        for (long long n = -N; n <= N; ++n) {
          long long m = n + na;
          if (m < -N || m > N) continue;
          inner += cj(n + N) * std::conj(pair.coeffs(m + N));
        }
        A += qg * inner;
      }
      C1 += std::norm(A) / (lam - (base + pair.mu));
    }
  }

  C1Comparison out;
  out.C1 = C1;
  auto g = line_restriction(abs2(f_field(q, gd, bt, radius)), gd.delta);
  out.quarter = 0.25 * moment(h0, j, g);
  const double diff = std::abs(out.C1 - out.quarter);
  out.rel_error = out.quarter != 0.0 ? diff / std::abs(out.quarter) : (diff == 0.0 ? 0.0 : diff);
  return out;
}

IdentityReport check_identities(const FourierPotential& q, const GammaDelta& gd, const PipelineConfig& cfg,
                                const IdentitySettings& s) {
  IdentityReport rep;
  std::mt19937_64 rng(s.seed);
  std::uniform_real_distribution<double> big(-40.0, 40.0), small(-4.0, 4.0);
  const int k = gd.rank();
  auto random_h = [&](std::uniform_real_distribution<double>& dist) {
    Vec y(k);
    for (int i = 0; i < k; ++i) y(i) = dist(rng);
    return Vec(gd.gd_basis * y);
  };

  int guard = 0;
  while (static_cast<int>(rep.six_samples) < s.samples && guard++ < 100 * s.samples) {
    auto r = six_term_identity(random_h(big), random_h(small), random_h(small));
    if (r.rejected) continue;
    ++rep.six_samples;
    rep.six_max_rel = std::max(rep.six_max_rel, std::abs(r.sum) / r.scale);
  }

  struct Triple {
    IVec beta1;
    long long n1, n2;
  };
  std::vector<Triple> triples;
  for (const auto& g1 : q.support()) {
    IVec c1 = gd.gd_coords(g1);
    if (is_zero(c1)) continue;
    for (const auto& g2 : q.support())
      if (gd.gd_coords(g2) == -c1) triples.push_back({c1, gd.delta_index(g1), gd.delta_index(g2)});
  }
  if (!triples.empty()) {
    DirectionalPotential Q = directional(q, gd.delta);
    HillSpectrum hs = hill_solve(Q, cfg.v, cfg.hill_N);
    std::uniform_int_distribution<int> pick(0, static_cast<int>(triples.size()) - 1), lab(-3, 3), coord(-60, 60);
    guard = 0;
    while (static_cast<int>(rep.a9_samples) < s.samples && guard++ < 100 * s.samples) {
      IVec bc(k);
      for (int i = 0; i < k; ++i) bc[i] = coord(rng);
      const Triple& t = triples[pick(rng)];
      auto r = a9_antisymmetry(q, gd, hs, lab(rng), lab(rng), gd.gd_to_cart(bc), t.beta1, t.n1, t.n2);
      if (r.rejected || r.term == 0.0) continue;
      ++rep.a9_samples;
      rep.a9_max_rel = std::max(rep.a9_max_rel, r.residual / r.term);
    }
  }

  const auto support = q.support();
  const auto grid = tau_grid(gd, s.n_tau);
  for (double rho : s.rhos) {
    SelectionParams p = cfg.constants;
    p.rho = rho;
    BetaSelection sel = select_beta(gd, cfg.b, cfg.v, p, support);
    std::vector<double> errs;
    for (const auto& [tau, w] : grid)
      errs.push_back(c1_vs_quarter(q, gd, cfg.j, cfg.v, sel.beta_cart, tau, cfg.hill_N, p.truncation_radius()).rel_error);
    rep.c1_rho.push_back(rho);
    rep.c1_beta_norm.push_back(sel.beta_cart.norm());
    rep.c1_median_rel.push_back(median(errs));
  }

  bool trend = true;
  double worst = 0;
  for (size_t i = 0; i < rep.c1_median_rel.size(); ++i) {
    worst = std::max(worst, rep.c1_median_rel[i]);
    if (i > 0) trend = trend && rep.c1_median_rel[i] < rep.c1_median_rel[i - 1];
  }
  if (worst <= s.tol) trend = true;
  rep.pass = rep.six_samples == static_cast<size_t>(s.samples) && rep.six_max_rel <= s.tol &&
             (triples.empty() || rep.a9_samples == static_cast<size_t>(s.samples)) && rep.a9_max_rel <= s.tol &&
             trend;
  return rep;
}

}  // namespace bandinv
