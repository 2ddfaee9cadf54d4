#pragma once

#include "bandinv/bands.hpp"
#include "bandinv/hill.hpp"
#include "bandinv/lattice.hpp"
#include "bandinv/potential.hpp"

#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace bandinv {

struct PipelineConfig {
  IVec b;
  long long j = 0;
  double v = 0.3;
  double rho0 = 8;
  int levels = 2;
  double factor = 2;
  double slack = 4;
  int n_tau = 64;
  SelectionParams constants;  // rho is replaced per level
  double window = 0;          // 0 selects the automatic shell width
  double window_factor = 0;  // > 0 widens W to cover first-order neighbours of beta
  size_t max_dim = 6000;
  bool validate_window = false;
  double validate_tol = 1e-8;
  std::optional<double> mu_injected;
  int hill_N = 40;
  int threads = 1;
};

// Per-node band data restricted to what the classifiers need.
struct NodeData {
  Vec tau;
  double weight = 0;
  double bt2 = 0;         // |beta + tau|^2
  double prefactor = 0;   // (beta + tau, b)^2 / |b|^4
  double gap_min = 0;
  int dim = 0;
  std::vector<double> eig;
  std::vector<double> deriv_dev;  // (1/2)|beta+tau| dLambda/dh - |beta+tau|^2
  std::vector<char> simple;
  std::vector<char> trusted;
};

struct Classification {
  int N = -1;
  int passing = 0;
  double lambda = 0;
  std::string failure;  // empty when accepted
  bool accepted() const { return N >= 0; }
};

struct ClassifierThresholds {
  double w62 = 1.0;
  double w64 = 0;
  double w65 = 0;
};

ClassifierThresholds thresholds(const SelectionParams& p, double slack);

NodeData node_from_spectrum(const BandSpectrum& spec, const Vec& beta_tau, const Vec& b_cart, double weight);
Classification classify_A(const NodeData& node, double free_delta_energy, const ClassifierThresholds& th);
Classification classify_B(const NodeData& node, double mu, const ClassifierThresholds& th);

struct LevelData {
  double rho = 0;
  SelectionParams params;
  BetaSelection selection;
  double window = 0;
  std::vector<NodeData> nodes;
  std::vector<Classification> A, B;
};

struct ExtractionRun {
  PipelineConfig cfg;
  GammaDelta gd;
  Vec b_cart;
  double fd_measure = 0;
  double free_delta_energy = 0;  // |(j+v) delta|^2
  std::vector<LevelData> levels;
};

ExtractionRun prepare_run(const FourierPotential& q, const GammaDelta& gd, const PipelineConfig& cfg);

struct InvariantEstimate {
  std::string name;
  double value = 0;
  std::string method;  // "pipeline" or "oracle"
  std::vector<double> per_k;
  std::vector<double> rho_k;
  std::vector<double> beta_norm_k;
  std::vector<double> acceptance_k;
  double error_proxy = 0;
  bool mu_injected = false;
};

InvariantEstimate oracle_estimate(const std::string& name, double value);

// Linear extrapolation in 1/|beta_k| from the last two levels.
double richardson_limit(const std::vector<double>& values, const std::vector<double>& beta_norms);

InvariantEstimate extract_mu(ExtractionRun& run);
InvariantEstimate extract_J(ExtractionRun& run, double mu, bool injected);

double oracle_J(const FourierPotential& q, const GammaDelta& gd, const IVec& b, long long j, double v, int hill_N = 40);

struct JkFamily {
  std::vector<double> J;  // J_0 .. J_order
  double condition = 0;
};

JkFamily extract_Jk_family(const std::map<long long, double>& J_values, const FitSettings& s = {});

struct I16I20 {
  double I16 = 0;
  double I20 = 0;
};

I16I20 derive_I16_I20(const JkFamily& Jk, const AExpansion& A);

struct SixTermResult {
  double sum = 0;
  double scale = 0;
  bool rejected = false;
};

SixTermResult six_term_identity(const Vec& beta, const Vec& b1, const Vec& b2, double min_rel_den = 1e-6);

struct A9Result {
  double term = 0;      // |C1'(beta1, n1, n2)|
  double residual = 0;  // |C1'(beta1, n1, n2) + C1'(-beta1, n2, n1)|
  bool rejected = false;
};

A9Result a9_antisymmetry(const FourierPotential& q, const GammaDelta& gd, const HillSpectrum& hill, long long j,
                         long long jp, const Vec& beta, const IVec& beta1, long long n1, long long n2);

struct C1Comparison {
  double C1 = 0;
  double quarter = 0;
  double rel_error = 0;
};

C1Comparison c1_vs_quarter(const FourierPotential& q, const GammaDelta& gd, long long j, double v, const Vec& beta,
                           const Vec& tau, int hill_N = 40, double radius = std::numeric_limits<double>::infinity());

struct IdentityReport {
  size_t six_samples = 0;
  double six_max_rel = 0;
  size_t a9_samples = 0;
  double a9_max_rel = 0;
  std::vector<double> c1_rho;
  std::vector<double> c1_median_rel;
  std::vector<double> c1_beta_norm;
  bool pass = false;
};

struct IdentitySettings {
  int samples = 50;
  unsigned seed = 12345;
  std::vector<double> rhos = {8, 16};
  int n_tau = 16;
  double tol = 1e-12;
};

IdentityReport check_identities(const FourierPotential& q, const GammaDelta& gd, const PipelineConfig& cfg,
                                const IdentitySettings& s);

}  // namespace bandinv
