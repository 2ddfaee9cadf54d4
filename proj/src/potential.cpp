#include "bandinv/potential.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace bandinv {

namespace {

bool parallel_index(const IVec& g, const IVec& delta, long long& n) {
  for (size_t i = 0; i < g.size(); ++i)
    for (size_t j = i + 1; j < g.size(); ++j)
      if (g[i] * delta[j] - g[j] * delta[i] != 0) return false;
  for (size_t i = 0; i < g.size(); ++i) {
    if (delta[i] != 0) {
      if (g[i] % delta[i] != 0) return false;
      n = g[i] / delta[i];
      return true;
    }
  }
  return false;
}

}  // namespace

FourierPotential FourierPotential::from_terms(const DualLattice& dual, const std::vector<std::pair<IVec, cplx>>& terms,
                                              std::vector<std::string>* warnings) {
  FourierPotential q;
  q.dual = dual;
  for (const auto& [k, val] : terms) {
    if (static_cast<int>(k.size()) != dual.dim())
      throw std::invalid_argument("potential mode " + to_string(k) + " has wrong dimension");
    if (is_zero(k)) {
      if (std::abs(val) != 0.0 && warnings) warnings->push_back("q_0 supplied nonzero; forced to 0");
      continue;
    }
    if (std::abs(val) == 0.0) continue;
    auto check = [&](const IVec& key, cplx want) {
      auto it = q.coeffs.find(key);
      if (it != q.coeffs.end() && std::abs(it->second - want) > 1e-14 * std::max(1.0, std::abs(want)))
        throw std::invalid_argument("potential mode " + to_string(key) + " conflicts with Hermitian symmetry");
      q.coeffs[key] = want;
    };
    check(k, val);
    check(-k, std::conj(val));
  }
  return q;
}

cplx FourierPotential::coeff(const IVec& k) const {
  auto it = coeffs.find(k);
  return it == coeffs.end() ? cplx(0) : it->second;
}

std::vector<IVec> FourierPotential::support() const {
  std::vector<IVec> out;
  out.reserve(coeffs.size());
  for (const auto& [k, v] : coeffs) out.push_back(k);
  return out;
}

cplx FourierPotential::evaluate(const Vec& x) const {
  cplx s = 0;
  for (const auto& [k, v] : coeffs) s += v * std::exp(cplx(0, dual.to_cart(k).dot(x)));
  return s;
}

double FourierPotential::max_abs() const {
  double m = 0;
  for (const auto& [k, v] : coeffs) m = std::max(m, std::abs(v));
  return m;
}

double FourierPotential::max_frequency() const {
  double m = 0;
  for (const auto& [k, v] : coeffs) m = std::max(m, dual.to_cart(k).norm());
  return m;
}

cplx DirectionalPotential::at(long long n) const {
  auto it = coeffs.find(n);
  return it == coeffs.end() ? cplx(0) : it->second;
}

long long DirectionalPotential::bandwidth() const {
  long long b = 0;
  for (const auto& [n, v] : coeffs) b = std::max(b, n < 0 ? -n : n);
  return b;
}

DirectionalPotential directional(const FourierPotential& q, const IVec& delta) {
  if (!is_maximal(delta)) throw std::invalid_argument("delta " + to_string(delta) + " is not maximal");
  DirectionalPotential Q;
  Q.delta = delta;
  Q.delta_norm = q.dual.to_cart(delta).norm();
  for (const auto& [k, v] : q.coeffs) {
    long long n = 0;
    if (parallel_index(k, delta, n)) Q.coeffs[n] = v;
  }
  return Q;
}

DirectionalPotential directional_from_modes(double delta_norm, const std::map<long long, cplx>& modes) {
  DirectionalPotential Q;
  Q.delta = {1};
  Q.delta_norm = delta_norm;
  for (const auto& [n, v] : modes) {
    if (n == 0 || std::abs(v) == 0.0) continue;
    Q.coeffs[n] = v;
    Q.coeffs[-n] = std::conj(v);
  }
  return Q;
}

cplx ScalarTrigPoly::evaluate(const Vec& x, const Mat& gamma_basis) const {
  cplx s = 0;
  for (const auto& [k, v] : terms) s += v * std::exp(cplx(0, (gamma_basis * GammaDelta::to_real(k)).dot(x)));
  return s;
}

CVec VectorTrigPoly::evaluate(const Vec& x, const Mat& gamma_basis) const {
  CVec s = CVec::Zero(dim);
  for (const auto& [k, v] : terms) s += v * std::exp(cplx(0, (gamma_basis * GammaDelta::to_real(k)).dot(x)));
  return s;
}

VectorTrigPoly f_field(const FourierPotential& q, const GammaDelta& gd, const Vec& x0, double radius) {
  VectorTrigPoly f;
  f.dim = q.dim();
  for (const auto& [k, v] : q.coeffs) {
    if (is_zero(gd.gd_coords(k))) continue;
    Vec g = gd.to_cart(k);
    if (g.norm() >= radius) continue;
    double den = x0.dot(g);
    if (std::abs(den) < 1e-9 * std::max(1.0, x0.norm() * g.norm()))
      throw std::invalid_argument("f_field: (x0, gamma) vanishes for gamma " + to_string(k) +
                                  " (selection predicate violated)");
    f.terms[k] = (v / den) * g.cast<cplx>();
  }
  return f;
}

VectorTrigPoly q_delta_b(const FourierPotential& q, const GammaDelta& gd, const IVec& b) {
  if (!is_maximal(b)) throw std::invalid_argument("b " + to_string(b) + " is not maximal in Gamma_delta");
  VectorTrigPoly f;
  f.dim = q.dim();
  const double nb2 = gd.gd_to_cart(b).squaredNorm();
  for (const auto& [k, v] : q.coeffs) {
    if (is_zero(gd.gd_coords(k))) continue;
    if (!gd.in_plane(k, b)) continue;
    long long n = gd.plane_index(k, b);
    Vec g = gd.to_cart(k);
    f.terms[k] = (v / (static_cast<double>(n) * nb2)) * g.cast<cplx>();
  }
  return f;
}

ScalarTrigPoly abs2(const VectorTrigPoly& g) {
  ScalarTrigPoly r;
  for (const auto& [k1, v1] : g.terms)
    for (const auto& [k2, v2] : g.terms) r.terms[k1 - k2] += v2.dot(v1);  // sum_i v1_i conj(v2_i)
  return r;
}

ScalarTrigPoly abs2(const ScalarTrigPoly& g) {
  ScalarTrigPoly r;
  for (const auto& [k1, v1] : g.terms)
    for (const auto& [k2, v2] : g.terms) r.terms[k1 - k2] += v1 * std::conj(v2);
  return r;
}

ScalarTrigPoly as_poly(const FourierPotential& q) {
  ScalarTrigPoly r;
  r.terms = q.coeffs;
  return r;
}

ScalarTrigPoly directional_poly(const FourierPotential& q, const IVec& delta) {
  ScalarTrigPoly r;
  for (const auto& [n, v] : directional(q, delta).coeffs) r.terms[n * delta] = v;
  return r;
}

std::map<long long, cplx> line_restriction(const ScalarTrigPoly& g, const IVec& delta) {
  std::map<long long, cplx> out;
  for (const auto& [k, v] : g.terms) {
    long long n = 0;
    if (is_zero(k))
      out[0] += v;
    else if (parallel_index(k, delta, n))
      out[n] += v;
  }
  return out;
}

cplx parseval_integral(const ScalarTrigPoly& g1, const ScalarTrigPoly& g2) {
  cplx s = 0;
  for (const auto& [k, v] : g1.terms) {
    auto it = g2.terms.find(k);
    if (it != g2.terms.end()) s += v * std::conj(it->second);
  }
  return s;
}

cplx parseval_integral(const VectorTrigPoly& g1, const VectorTrigPoly& g2) {
  cplx s = 0;
  for (const auto& [k, v] : g1.terms) {
    auto it = g2.terms.find(k);
    if (it != g2.terms.end()) s += it->second.dot(v);
  }
  return s;
}

OracleInvariants oracle_invariants(const FourierPotential& q, const GammaDelta& gd, const IVec& b) {
  OracleInvariants out;
  ScalarTrigPoly G = abs2(q_delta_b(q, gd, b));
  ScalarTrigPoly qd = directional_poly(q, gd.delta);
  ScalarTrigPoly one;
  one.terms[IVec(gd.dim(), 0)] = 1.0;
  ScalarTrigPoly h;
  cplx qdel = q.coeff(gd.delta);
  if (std::abs(qdel) > 0) {
    h.terms[2 * gd.delta] = qdel * qdel;
    h.terms[-2 * gd.delta] = std::conj(qdel) * std::conj(qdel);
  }
  out.I16 = parseval_integral(G, qd).real();
  out.I17 = parseval_integral(qd, qd).real();
  out.I20 = parseval_integral(G, h).real();
  out.J0 = parseval_integral(G, one).real();
  return out;
}

}  // namespace bandinv
