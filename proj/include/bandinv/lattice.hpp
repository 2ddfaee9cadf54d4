#pragma once

#include "bandinv/types.hpp"

#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace bandinv {

// Period lattice Omega; columns of `basis` are the generators.
struct LatticeBasis {
  int dim = 0;
  Mat basis;

  static LatticeBasis from_matrix(const Mat& m);
  static LatticeBasis cubic(double scale, int d);
};

// Dual lattice Gamma with (delta_i, omega_j) = 2 pi [i == j].
struct DualLattice {
  Mat basis;

  int dim() const { return static_cast<int>(basis.cols()); }
  Vec to_cart(const IVec& k) const;
  // Nearest integer coordinates of x together with the rounding residual norm.
  IVec nearest_coords(const Vec& x, double* residual = nullptr) const;
};

DualLattice dual_lattice(const LatticeBasis& omega);
LatticeBasis dual_of(const DualLattice& gamma);

// All integer vectors c with |B c + shift| <= radius; B has full column rank.
std::vector<IVec> lattice_points(const Mat& B, double radius, const Vec& shift);
std::vector<IVec> lattice_points(const Mat& B, double radius);

bool is_maximal(const IVec& k);
std::vector<IVec> maximal_elements(const DualLattice& gamma, double radius);

// Gamma_delta, Omega_delta and the hyperplane H_delta for a maximal delta.
// Every gamma in Gamma is split exactly as (m, c): m = (gamma, delta*)/(2 pi) is an
// integer and c are the Gamma_delta coordinates of the projection of gamma onto
// H_delta, so that gamma = proj + (m - (proj, delta*)/(2 pi)) delta.
struct GammaDelta {
  Mat gamma_basis;
  IVec delta;
  Vec delta_cart;
  double delta_norm2 = 0;
  Mat hyperplane_basis;   // d x (d-1), orthonormal
  Mat gd_basis;           // d x (d-1), reduced generators of Gamma_delta
  Mat omega_delta_basis;  // d x (d-1)
  Vec delta_star;         // element of Omega with (delta*, delta) = 2 pi
  IMat unimodular;        // U: first column gives delta*, the rest span the kernel
  IMat unimodular_inv;
  IMat reduction;         // gd_basis = raw_gd * reduction
  IMat reduction_inv;

  int dim() const { return static_cast<int>(delta_cart.size()); }
  int rank() const { return dim() - 1; }

  long long delta_index(const IVec& gamma) const;
  IVec gd_coords(const IVec& gamma) const;
  IVec join(long long m, const IVec& c) const;

  Vec to_cart(const IVec& gamma) const { return gamma_basis * to_real(gamma); }
  static Vec to_real(const IVec& k);
  Vec gd_to_cart(const IVec& c) const;
  // Real Gamma_delta coordinates of a vector in H_delta.
  Vec gd_real_coords(const Vec& x) const;
  // Real delta coefficient a in gamma = proj + a delta.
  double delta_coefficient(const IVec& gamma) const;

  // gamma lies in the plane spanned by delta and the Gamma_delta point b.
  bool in_plane(const IVec& gamma, const IVec& b) const;
  // For gamma in the plane: the integer n with proj(gamma) = n b.
  long long plane_index(const IVec& gamma, const IVec& b) const;

  double fd_measure() const;
  double fd_diameter() const;
};

GammaDelta gamma_delta(const DualLattice& gamma, const LatticeBasis& omega, const IVec& delta);

struct QuasiDecomp {
  IVec beta;
  Vec tau;
  long long j = 0;
  double v = 0;
};

QuasiDecomp decompose(const Vec& point, const GammaDelta& gd);
Vec reconstruct(const QuasiDecomp& q, const GammaDelta& gd);

bool in_V(const Vec& x, const Vec& b, double c);

struct SelectionParams {
  double rho = 0;
  int dim = 2;
  double alpha = 0;
  std::vector<double> alpha_k;  // alpha_k[k-1] for k = 1..d
  double a = 0;

  double annulus_lo = 0.5;
  double annulus_hi = 1.5;
  double annulus_pad = 0.0;
  double window_lo = 1.0 / 3.0;
  double window_hi = 3.0;
  double margin59 = 1.0 / 3.0;
  double margin60 = 1.0 / 3.0;
  double gap_exponent = 0.5;
  double a_set_factor = 4.0;
  std::optional<double> support_radius;

  static SelectionParams defaults(double rho, int d);
  double alpha_d() const { return alpha_k.back(); }
  double rho_a() const;
  double truncation_radius() const {
    return support_radius ? *support_radius : std::numeric_limits<double>::infinity();
  }
  // Names and values of every constant that differs from its asymptotic default.
  std::map<std::string, double> deviations() const;
};

struct PredicateMargin {
  std::string name;
  double margin = 0;  // log ratio; positive means satisfied
  bool satisfied() const { return margin > 0; }
};

std::vector<PredicateMargin> evaluate_predicates(const GammaDelta& gd, const IVec& beta, const IVec& b, double v,
                                                 const SelectionParams& p, const std::vector<IVec>& support);

struct BetaSelection {
  IVec beta;
  Vec beta_cart;
  std::vector<PredicateMargin> margins;
  double min_margin = 0;
  size_t scanned = 0;
  size_t feasible = 0;
};

class SelectionInfeasible : public std::runtime_error {
 public:
  SelectionInfeasible(const std::string& msg, std::map<std::string, size_t> violations)
      : std::runtime_error(msg), violations_(std::move(violations)) {}
  const std::map<std::string, size_t>& violations() const { return violations_; }

 private:
  std::map<std::string, size_t> violations_;
};

BetaSelection select_beta(const GammaDelta& gd, const IVec& b, double v, const SelectionParams& p,
                          const std::vector<IVec>& support);

}  // namespace bandinv
