#include "bandinv/hill.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

namespace bandinv {

const HillPair& HillSpectrum::at(long long j) const {
  auto it = pairs.find(j);
  if (it == pairs.end()) throw std::out_of_range("Hill label " + std::to_string(j) + " not in spectrum");
  return it->second;
}

cplx HillSpectrum::coeff(long long j, long long n) const {
  if (n < -N || n > N) return 0;
  return at(j).coeffs(n + N);
}

std::vector<double> HillSpectrum::sorted_eigenvalues() const {
  std::vector<double> ev;
  ev.reserve(pairs.size());
  for (const auto& [j, p] : pairs) ev.push_back(p.mu);
  std::sort(ev.begin(), ev.end());
  return ev;
}

CMat hill_matrix(const DirectionalPotential& Q, double v, int N) {
  const int n = 2 * N + 1;
  const double d2 = Q.delta_norm * Q.delta_norm;
  CMat H = CMat::Zero(n, n);
  for (int a = 0; a < n; ++a) {
    double m = a - N + v;
    H(a, a) = d2 * m * m;
  }
  for (const auto& [k, val] : Q.coeffs) {
    if (k == 0) continue;
    for (int a = 0; a < n; ++a) {
      int b = a - static_cast<int>(k);
      if (b >= 0 && b < n) H(a, b) += val;
    }
  }
  return H;
}

HillSpectrum hill_solve(const DirectionalPotential& Q, double v, int N) {
  if (N < Q.bandwidth() + 8)
    throw std::invalid_argument("Hill truncation N=" + std::to_string(N) + " must exceed the bandwidth by 8");
  const int n = 2 * N + 1;
  CMat H = hill_matrix(Q, v, N);
  Eigen::SelfAdjointEigenSolver<CMat> es(H);
  if (es.info() != Eigen::Success) throw std::runtime_error("Hill eigensolver failed");
  const Vec& ev = es.eigenvalues();
  const CMat& V = es.eigenvectors();
  const double d2 = Q.delta_norm * Q.delta_norm;

  HillSpectrum s;
  s.v = v;
  s.delta_norm = Q.delta_norm;
  s.N = N;
  s.matrix_norm = std::max(std::abs(ev(0)), std::abs(ev(n - 1)));
  for (int i = 0; i < n; ++i)
    s.max_residual = std::max(s.max_residual, (H * V.col(i) - ev(i) * V.col(i)).norm());

  auto unperturbed = [&](long long lbl) {
    double m = static_cast<double>(lbl) + v;
    return d2 * m * m;
  };

  std::vector<long long> label(n);
  std::map<long long, std::vector<int>> claims;
  for (int i = 0; i < n; ++i) {
    double best = -1;
    long long lbl = 0;
    for (int a = 0; a < n; ++a) {
      double mag = std::abs(V(a, i));
      long long cand = a - N;
      if (mag > best * (1 + 1e-12)) {
        best = mag;
        lbl = cand;
      } else if (mag >= best * (1 - 1e-12) && std::llabs(cand) < std::llabs(lbl)) {
        lbl = cand;
      }
    }
    label[i] = lbl;
    claims[lbl].push_back(i);
  }

  std::set<long long> free_labels;
  for (long long l = -N; l <= N; ++l) free_labels.insert(l);
  std::vector<int> conflicted;
  for (const auto& [lbl, who] : claims) {
    if (who.size() == 1)
      free_labels.erase(lbl);
    else
      conflicted.insert(conflicted.end(), who.begin(), who.end());
  }
  std::sort(conflicted.begin(), conflicted.end());
  for (int i : conflicted) {
    if (free_labels.empty()) throw std::runtime_error("Hill label collision; increase N");
    long long best = *free_labels.begin();
    double bd = std::abs(ev(i) - unperturbed(best));
    for (long long l : free_labels) {
      double dd = std::abs(ev(i) - unperturbed(l));
      if (dd < bd - 1e-12 * std::max(1.0, bd) ||
          (std::abs(dd - bd) <= 1e-12 * std::max(1.0, bd) && std::llabs(l) < std::llabs(best))) {
        best = l;
        bd = dd;
      }
    }
    if (std::abs(V(best + N, i)) < 1e-3 * V.col(i).cwiseAbs().maxCoeff())
      throw std::runtime_error("Hill label collision after fallback at label " + std::to_string(best) +
                               "; increase N");
    label[i] = best;
    free_labels.erase(best);
  }

  for (int i = 0; i < n; ++i) s.pairs[label[i]] = HillPair{ev(i), V.col(i)};
  return s;
}

std::map<long long, cplx> phi_sq_coeffs(const HillSpectrum& spec, long long j) {
  const CVec& c = spec.at(j).coeffs;
  const int n = static_cast<int>(c.size());
  std::map<long long, cplx> out;
  for (int d = -(n - 1); d <= n - 1; ++d) {
    cplx s = 0;
    for (int m = std::max(0, -d); m < std::min(n, n - d); ++m) s += c(m + d) * std::conj(c(m));
    out[d] = s;
  }
  return out;
}

double moment(const HillSpectrum& spec, long long j, const std::map<long long, cplx>& g) {
  auto P = phi_sq_coeffs(spec, j);
  cplx s = 0;
  for (const auto& [n, gv] : g) {
    auto it = P.find(n);
    if (it != P.end()) s += gv * std::conj(it->second);
  }
  return s.real();
}

cplx AExpansion::A(int k, long long mode) const {
  auto it = modes.find(mode);
  if (it == modes.end() || k >= static_cast<int>(it->second.size())) return 0;
  return it->second[k];
}

std::vector<cplx> fit_inverse_powers(const std::vector<long long>& js, const std::vector<cplx>& values, int fit_order,
                                     double max_condition, double* condition) {
  if (js.size() != values.size() || static_cast<int>(js.size()) <= fit_order)
    throw std::invalid_argument("fit needs more samples than unknowns");
  double scale = std::numeric_limits<double>::infinity();
  for (auto j : js) {
    if (j == 0) throw std::invalid_argument("fit in 1/j requires j != 0");
    scale = std::min(scale, static_cast<double>(std::llabs(j)));
  }
  const int m = static_cast<int>(js.size());
  Mat A(m, fit_order + 1);
  CVec b(m);
  for (int r = 0; r < m; ++r) {
    double y = scale / static_cast<double>(js[r]);
    double p = 1;
    for (int k = 0; k <= fit_order; ++k) {
      A(r, k) = p;
      p *= y;
    }
    b(r) = values[r];
  }
  Eigen::JacobiSVD<Mat> svd(A);
  double cond = svd.singularValues()(0) / svd.singularValues()(fit_order);
  if (condition) *condition = cond;
  if (!(cond < max_condition)) {
    std::ostringstream os;
    os << "ill-conditioned 1/j fit (condition number " << cond << "); widen the j range";
    throw std::runtime_error(os.str());
  }
  Eigen::ColPivHouseholderQR<Mat> qr(A);
  CVec coef(fit_order + 1);
  coef.real() = qr.solve(b.real());
  coef.imag() = qr.solve(b.imag());
  std::vector<cplx> out(fit_order + 1);
  double p = 1;
  for (int k = 0; k <= fit_order; ++k) {
    out[k] = coef(k) * p;
    p *= scale;
  }
  return out;
}

AExpansion fit_A_expansion(const DirectionalPotential& Q, double v, long long j_lo, long long j_hi,
                           const FitSettings& s) {
  if (j_lo < 10 || j_hi <= j_lo) throw std::invalid_argument("fit_A_expansion needs 10 <= j_lo < j_hi");
  if (v <= 0 || v >= 1 || std::abs(v - 0.5) < 1e-12)
    throw std::invalid_argument("fit_A_expansion requires v in (0, 1/2) or (1/2, 1)");
  const int N = static_cast<int>(j_hi + 40 + Q.bandwidth());
  HillSpectrum spec = hill_solve(Q, v, N);

  AExpansion out;
  out.order = s.order;
  out.fit_order = s.fit_order;
  out.j_lo = j_lo;
  out.j_hi = j_hi;
  std::vector<long long> js;
  std::vector<std::map<long long, cplx>> P;
  for (long long j = j_lo; j <= j_hi; ++j) {
    js.push_back(j);
    P.push_back(phi_sq_coeffs(spec, j));
  }
  for (long long mode = -s.max_mode; mode <= s.max_mode; ++mode) {
    std::vector<cplx> vals;
    for (auto& p : P) vals.push_back(p.count(mode) ? p.at(mode) : cplx(0));
    double cond = 0;
    auto c = fit_inverse_powers(js, vals, s.fit_order, s.max_condition, &cond);
    out.condition = std::max(out.condition, cond);
    c.resize(s.order + 1);
    out.modes[mode] = c;
  }

  if (Q.coeffs.size() == 2 && Q.coeffs.count(1) && Q.coeffs.count(-1)) {
    TwoModeConstants t;
    t.q_delta = Q.at(1);
    double q2 = std::norm(t.q_delta);
    t.half = (out.A(2, 1) / t.q_delta).real();
    t.a1 = out.A(2, 0).real() / q2;
    t.a2 = (out.A(3, 1) / t.q_delta).real();
    t.a3 = out.A(3, 0).real() / q2;
    t.a4 = (out.A(4, 1) / t.q_delta).real();
    t.a5 = (out.A(4, 2) / (t.q_delta * t.q_delta)).real();
    t.a6 = out.A(4, 0).real();
    out.two_mode = t;
  }
  return out;
}

I17Estimate extract_I17_from_mu(const DirectionalPotential& Q, long long m_lo, long long m_hi) {
  if (m_lo < 1 || m_hi <= m_lo + 1) throw std::invalid_argument("extract_I17_from_mu needs 1 <= m_lo < m_hi - 1");
  const int N = static_cast<int>(m_hi + 40 + Q.bandwidth());
  HillSpectrum spec = hill_solve(Q, 0.0, N);
  std::vector<double> ev = spec.sorted_eigenvalues();
  const double dn = Q.delta_norm;

  std::vector<double> xs, ys;
  for (long long m = m_lo; m <= m_hi; ++m) {
    double k = static_cast<double>(m + 1) * dn;
    double e1 = ev[2 * m + 1], e2 = ev[2 * m + 2];
    double s = 0.5 * (std::sqrt(e1) + std::sqrt(e2)) - k;
    xs.push_back(1.0 / (k * k));
    ys.push_back(s * k * k * k);
  }
  const int n = static_cast<int>(xs.size());
  Mat A(n, 2);
  Vec y(n);
  for (int i = 0; i < n; ++i) {
    A(i, 0) = 1;
    A(i, 1) = xs[i];
    y(i) = ys[i];
  }
  Vec c = A.colPivHouseholderQr().solve(y);

  I17Estimate out;
  out.m_lo = m_lo;
  out.m_hi = m_hi;
  out.C = c(0);
  out.estimate = 8.0 * c(0);
  for (int i = 0; i < n; ++i) out.residuals.push_back(ys[i] - (c(0) + c(1) * xs[i]));
  int sign = 0;
  for (int i = 1; i < n; ++i) {
    double dlt = ys[i] - ys[i - 1];
    if (std::abs(dlt) <= 1e-13 * std::max(1.0, std::abs(ys[i]))) continue;
    int sg = dlt > 0 ? 1 : -1;
    if (sign != 0 && sg != sign) out.monotone = false;
    sign = sg;
  }
  if (!out.monotone) out.warning = "scaled sqrt(mu) corrections are not monotone in m; fit may be unreliable";
  return out;
}

}  // namespace bandinv
