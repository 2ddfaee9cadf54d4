#pragma once

#include "bandinv/potential.hpp"
#include "bandinv/types.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace bandinv {

struct HillPair {
  double mu = 0;
  CVec coeffs;  // over modes n = -N..N, index n + N
};

struct HillSpectrum {
  double v = 0;
  double delta_norm = 1;
  int N = 0;
  std::map<long long, HillPair> pairs;
  double matrix_norm = 0;
  double max_residual = 0;

  const HillPair& at(long long j) const;
  bool has(long long j) const { return pairs.count(j) > 0; }
  cplx coeff(long long j, long long n) const;
  std::vector<double> sorted_eigenvalues() const;
};

CMat hill_matrix(const DirectionalPotential& Q, double v, int N);
HillSpectrum hill_solve(const DirectionalPotential& Q, double v, int N);

// Fourier coefficients of |phi_{j,v}|^2 on period 2 pi.
std::map<long long, cplx> phi_sq_coeffs(const HillSpectrum& spec, long long j);

// Normalized integral of g |phi_j|^2 over one period.
double moment(const HillSpectrum& spec, long long j, const std::map<long long, cplx>& g);

struct TwoModeConstants {
  cplx q_delta;
  double half = 0;  // A2 (+1 mode) / q_delta; 1/(2|delta|^2) expected
  double a1 = 0, a2 = 0, a3 = 0, a4 = 0, a5 = 0, a6 = 0;
};

struct AExpansion {
  int order = 4;      // reported orders 0..order
  int fit_order = 6;  // polynomial degree in 1/j used for the fit
  long long j_lo = 0, j_hi = 0;
  std::map<long long, std::vector<cplx>> modes;  // mode -> A_k, k = 0..order
  double condition = 0;
  std::optional<TwoModeConstants> two_mode;

  cplx A(int k, long long mode) const;
};

struct FitSettings {
  int order = 4;
  int fit_order = 6;
  int max_mode = 6;
  double max_condition = 1e10;
};

// Least squares of c(j) = sum_k c_k / j^k over j in [j_lo, j_hi]. Returns c_0..c_fit_order.
std::vector<cplx> fit_inverse_powers(const std::vector<long long>& js, const std::vector<cplx>& values, int fit_order,
                                     double max_condition, double* condition = nullptr);

AExpansion fit_A_expansion(const DirectionalPotential& Q, double v, long long j_lo, long long j_hi,
                           const FitSettings& s = {});

struct I17Estimate {
  double estimate = 0;
  double C = 0;
  long long m_lo = 0, m_hi = 0;
  std::vector<double> residuals;
  bool monotone = true;
  std::string warning;
};

I17Estimate extract_I17_from_mu(const DirectionalPotential& Q, long long m_lo, long long m_hi);

}  // namespace bandinv
