#pragma once

#include "bandinv/hill.hpp"
#include "bandinv/potential.hpp"
#include "bandinv/types.hpp"

#include <limits>
#include <vector>

namespace bandinv {

struct BasisSpec {
  enum class Mode { FullBall, ShellWindow };
  Mode mode = Mode::FullBall;
  double radius = 0;    // full ball: |gamma + t| <= radius
  double e_star = 0;    // shell: | |gamma + t|^2 - e_star | <= window
  double window = 0;
  double core = 0;      // shell: plus |gamma + t| <= core
  size_t max_dim = 6000;

  static BasisSpec full_ball(double radius);
  static BasisSpec shell(double e_star, double window, double core = 0);
  BasisSpec doubled() const;
  // Eigenvalues inside [lo, hi] are trusted before validation.
  double trust_lo() const;
  double trust_hi() const;
};

struct PlaneWaveBasis {
  Vec t;
  std::vector<IVec> indices;
  BasisSpec spec;
  size_t size() const { return indices.size(); }
};

class BasisTooLarge : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

PlaneWaveBasis make_basis(const DualLattice& gamma, const Vec& t, const BasisSpec& spec);

struct SolveOptions {
  bool vectors = true;
  bool validate = false;
  double validate_tol = 1e-8;
};

struct BandSpectrum {
  Vec t;
  PlaneWaveBasis basis;
  Vec eigenvalues;
  CMat vectors;
  Mat kvecs;  // columns gamma + t
  std::vector<bool> trusted;
  bool validated = false;
  double residual = 0;
  double operator_norm = 0;

  int size() const { return static_cast<int>(eigenvalues.size()); }
  std::vector<double> free_levels() const;
};

CMat assemble(const FourierPotential& q, const PlaneWaveBasis& basis);
BandSpectrum assemble_and_solve(const FourierPotential& q, const Vec& t, const BasisSpec& spec,
                                const SolveOptions& opt = {});

// Half the smallest free-spectrum gap inside the trusted window, floored at 1e-6.
double default_gap_min(const BandSpectrum& spec);

std::vector<double> model_eigs(const HillSpectrum& hill, const Vec& beta, const Vec& tau,
                               const std::vector<long long>& js);

struct EigenMatch {
  int N = -1;
  double lambda = 0;
  bool simple = false;
};

bool is_simple(const BandSpectrum& spec, int N, double gap_min);
EigenMatch match_eigenvalue(const BandSpectrum& spec, double target, double gap_min);
double band_derivative(const BandSpectrum& spec, int N, const Vec& h, double gap_min);
// Unchecked Hellmann-Feynman sum 2 sum_gamma (gamma + t, h) |c_gamma|^2.
double hellmann_feynman(const BandSpectrum& spec, int N, const Vec& h);

}  // namespace bandinv
