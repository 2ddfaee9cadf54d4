#pragma once

#include "bandinv/config.hpp"

#include <string>
#include <vector>

namespace bandinv {

enum class Invariant { Mu, J, Jk, I16, I17, I20 };

Invariant parse_invariant(const std::string& name);
std::string invariant_name(Invariant inv);

struct RunReport {
  nlohmann::json doc;
  bool pass = true;
  bool failed = false;  // an estimate raised an error
};

RunReport run_extract(const ExperimentConfig& cfg, Invariant inv);
RunReport run_verify(const ExperimentConfig& cfg);

// report.json, estimates.csv and levels.csv under dir.
void write_report(const RunReport& rep, const std::string& dir);
std::string estimates_csv(const nlohmann::json& doc);
std::string levels_csv(const nlohmann::json& doc);
std::string summary_text(const nlohmann::json& doc);

std::string bands_csv(const ExperimentConfig& cfg, const Vec& t, double window, double cutoff, int n_bands);
std::string hill_csv(const ExperimentConfig& cfg, double v, int n_max, const std::vector<long long>& js);

}  // namespace bandinv
