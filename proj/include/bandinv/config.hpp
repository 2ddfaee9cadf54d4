#pragma once

#include "bandinv/invariants.hpp"

#include "json.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace bandinv {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Tolerances {
  double mu = 5e-2;
  double J = 1e-1;
  double I16 = 5e-2;
  double I17 = 2e-2;
  double I20 = 1e-1;
  double Jk = 1e-2;
  double identity = 1e-12;
};

struct ExperimentConfig {
  nlohmann::json source;  // as given, before defaults
  std::string lattice_spec;
  LatticeBasis omega;
  DualLattice gamma;
  std::vector<std::pair<IVec, cplx>> terms;
  FourierPotential q;
  IVec delta;
  IVec b;  // Gamma_delta coordinates
  GammaDelta gd;
  std::vector<long long> js = {0, 1};
  double v = 0.3;
  PipelineConfig pipeline;
  bool inject_mu = true;
  long long fit_j_lo = 10, fit_j_hi = 60;
  long long m_lo = 5, m_hi = 40;
  IdentitySettings identities;
  Tolerances tol;
  std::string output_dir = "out";
  std::vector<std::string> warnings;

  // Canonical JSON of the effective configuration; re-loadable.
  nlohmann::json effective() const;
  std::string hash() const;
};

LatticeBasis parse_lattice(const nlohmann::json& spec, const std::string& path);
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

// Threads from BANDINV_THREADS, else hardware concurrency.
int default_threads();

}  // namespace bandinv
