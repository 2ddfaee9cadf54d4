#include "bandinv/runner.hpp"

#include "CLI11.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace bandinv;

namespace {

constexpr int kOk = 0;
constexpr int kToleranceFail = 1;
constexpr int kConfigError = 2;

std::vector<double> parse_reals(const std::string& s, const std::string& flag) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw ConfigError(flag + ": cannot parse \"" + tok + "\"");
    }
  }
  return out;
}

std::vector<long long> parse_ints(const std::string& s, const std::string& flag) {
  std::vector<long long> out;
  for (double x : parse_reals(s, flag)) {
    if (x != std::floor(x)) throw ConfigError(flag + ": expected integers");
    out.push_back(static_cast<long long>(x));
  }
  return out;
}

void emit(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Band functions and spectral invariants of periodic Schroedinger operators"};
  app.require_subcommand(1);

  std::string config_path, out;

  auto* bands = app.add_subcommand("bands", "Band eigenvalues at one quasimomentum (CSV)");
  std::string t_str;
  double window = 0, cutoff = 0;
  int n_bands = 20;
  bands->add_option("-c,--config", config_path, "Experiment config (JSON)")->required();
  bands->add_option("--t", t_str, "Quasimomentum, comma separated Cartesian components")->required();
  bands->add_option("--window", window, "Shell half width W around |t|^2");
  bands->add_option("--cutoff", cutoff, "Full-ball radius; overrides --window");
  bands->add_option("--n-bands", n_bands, "Number of bands to print");
  bands->add_option("-o,--out", out, "Output CSV (default stdout)");

  auto* hill = app.add_subcommand("hill", "Hill eigenpairs of the directional potential (CSV)");
  double hv = -1;
  int n_max = 40;
  std::string j_list = "-2,-1,0,1,2";
  hill->add_option("-c,--config", config_path, "Experiment config (JSON)")->required();
  hill->add_option("--v", hv, "Quasi-periodicity parameter (default from config)");
  hill->add_option("--n-max", n_max, "Mode truncation N");
  hill->add_option("--j-list", j_list, "Comma separated labels");
  hill->add_option("-o,--out", out, "Output CSV (default stdout)");

  auto* extract = app.add_subcommand("extract", "Extract one invariant and compare with its oracle");
  std::string inv_name = "J", delta_s, b_s, j_s;
  double ev = -1, rho0 = -1, slack = -1;
  int levels = -1;
  extract->add_option("-c,--config", config_path, "Experiment config (JSON)")->required();
  extract->add_option("--invariant", inv_name, "mu, J, Jk, I16, I17 or I20");
  extract->add_option("--delta", delta_s, "Override delta (Gamma coordinates)");
  extract->add_option("--b", b_s, "Override b (Gamma or Gamma_delta coordinates)");
  extract->add_option("--j", j_s, "Override the label list");
  extract->add_option("--v", ev, "Override v");
  extract->add_option("--rho0", rho0, "Override the first rho");
  extract->add_option("--levels", levels, "Override the number of levels");
  extract->add_option("--slack", slack, "Override the classifier slack");
  extract->add_option("-o,--out", out, "Output directory (default from config)");

  auto* verify = app.add_subcommand("verify", "Identity lab and every oracle comparison");
  verify->add_option("-c,--config", config_path, "Experiment config (JSON)")->required();
  verify->add_option("-o,--out", out, "Output directory (default from config)");

  auto* report = app.add_subcommand("report", "Summarize an existing report and regenerate its CSV tables");
  std::string report_in;
  report->add_option("report", report_in, "report.json")->required();
  report->add_option("-o,--out", out, "Directory for regenerated CSV tables");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }

  try {
    if (*report) {
      std::ifstream f(report_in);
      if (!f) throw ConfigError(report_in + ": cannot open");
      nlohmann::json doc;
      try {
        f >> doc;
      } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(report_in + ": " + e.what());
      }
      if (!doc.contains("estimates")) throw ConfigError(report_in + ": not a report");
      std::cout << summary_text(doc);
      if (!out.empty()) {
        std::filesystem::create_directories(out);
        emit(estimates_csv(doc), (std::filesystem::path(out) / "estimates.csv").string());
        emit(levels_csv(doc), (std::filesystem::path(out) / "levels.csv").string());
      }
      return doc.value("status", "") == "pass" ? kOk : kToleranceFail;
    }

    nlohmann::json raw;
    {
      std::ifstream f(config_path);
      if (!f) throw ConfigError(config_path + ": cannot open");
      try {
        f >> raw;
      } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(config_path + ": " + e.what());
      }
    }
    if (*extract) {
      if (!delta_s.empty()) raw["delta"] = parse_ints(delta_s, "--delta");
      if (!b_s.empty()) raw["b"] = parse_ints(b_s, "--b");
      if (!j_s.empty()) raw["j"] = parse_ints(j_s, "--j");
      if (ev >= 0) raw["v"] = ev;
      if (rho0 > 0) raw["schedule"]["rho0"] = rho0;
      if (levels > 0) raw["schedule"]["levels"] = levels;
      if (slack > 0) raw["slack"] = slack;
    }
    ExperimentConfig cfg = parse_config(raw);
    for (const auto& w : cfg.warnings) std::cerr << "warning: " << w << '\n';

    if (*bands) {
      auto t = parse_reals(t_str, "--t");
      if (static_cast<int>(t.size()) != cfg.omega.dim) throw ConfigError("--t: expected " + std::to_string(cfg.omega.dim) + " components");
      emit(bands_csv(cfg, Eigen::Map<Vec>(t.data(), t.size()), window, cutoff, n_bands), out);
      return kOk;
    }
    if (*hill) {
      emit(hill_csv(cfg, hv >= 0 ? hv : cfg.v, n_max, parse_ints(j_list, "--j-list")), out);
      return kOk;
    }

    RunReport rep = *extract ? run_extract(cfg, parse_invariant(inv_name)) : run_verify(cfg);
    write_report(rep, out.empty() ? cfg.output_dir : out);
    std::cout << summary_text(rep.doc);
    return rep.pass && !rep.failed ? kOk : kToleranceFail;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kToleranceFail;
  }
}
