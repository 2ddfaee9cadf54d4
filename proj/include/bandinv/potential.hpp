#pragma once

#include "bandinv/lattice.hpp"
#include "bandinv/types.hpp"

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace bandinv {

// Real trigonometric polynomial q(x) = sum q_gamma e^{i(gamma, x)} on F.
struct FourierPotential {
  DualLattice dual;
  std::map<IVec, cplx> coeffs;

  // Hermitian completion of the given terms; a nonzero q_0 is dropped with a warning.
  static FourierPotential from_terms(const DualLattice& dual, const std::vector<std::pair<IVec, cplx>>& terms,
                                     std::vector<std::string>* warnings = nullptr);

  cplx coeff(const IVec& k) const;
  std::vector<IVec> support() const;
  cplx evaluate(const Vec& x) const;
  double max_abs() const;
  double max_frequency() const;
  int dim() const { return dual.dim(); }
};

struct DirectionalPotential {
  IVec delta;
  double delta_norm = 0;
  std::map<long long, cplx> coeffs;

  cplx at(long long n) const;
  long long bandwidth() const;
  bool is_zero() const { return coeffs.empty(); }
};

DirectionalPotential directional(const FourierPotential& q, const IVec& delta);
DirectionalPotential directional_from_modes(double delta_norm, const std::map<long long, cplx>& modes);

struct ScalarTrigPoly {
  std::map<IVec, cplx> terms;
  cplx evaluate(const Vec& x, const Mat& gamma_basis) const;
};

struct VectorTrigPoly {
  int dim = 0;
  std::map<IVec, CVec> terms;
  CVec evaluate(const Vec& x, const Mat& gamma_basis) const;
};

VectorTrigPoly f_field(const FourierPotential& q, const GammaDelta& gd, const Vec& x0, double radius);
VectorTrigPoly q_delta_b(const FourierPotential& q, const GammaDelta& gd, const IVec& b);

// Coefficients of |g|^2 (Euclidean norm for vector fields).
ScalarTrigPoly abs2(const VectorTrigPoly& g);
ScalarTrigPoly abs2(const ScalarTrigPoly& g);

ScalarTrigPoly as_poly(const FourierPotential& q);
ScalarTrigPoly directional_poly(const FourierPotential& q, const IVec& delta);

// Coefficients of g at the points n delta, as a function of zeta = (delta, x).
std::map<long long, cplx> line_restriction(const ScalarTrigPoly& g, const IVec& delta);

// Normalized integral over F of g1 conj(g2).
cplx parseval_integral(const ScalarTrigPoly& g1, const ScalarTrigPoly& g2);
cplx parseval_integral(const VectorTrigPoly& g1, const VectorTrigPoly& g2);

struct OracleInvariants {
  double I16 = 0;
  double I17 = 0;
  double I20 = 0;
  double J0 = 0;  // integral of |q_{delta,b}|^2
};

OracleInvariants oracle_invariants(const FourierPotential& q, const GammaDelta& gd, const IVec& b);

}  // namespace bandinv
