#include "bandinv/bands.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

namespace bandinv {

BasisSpec BasisSpec::full_ball(double radius) {
  if (radius <= 0) throw std::invalid_argument("basis radius must be positive");
  BasisSpec s;
  s.mode = Mode::FullBall;
  s.radius = radius;
  return s;
}

BasisSpec BasisSpec::shell(double e_star, double window, double core) {
  if (window <= 0) throw std::invalid_argument("shell window must be positive");
  BasisSpec s;
  s.mode = Mode::ShellWindow;
  s.e_star = e_star;
  s.window = window;
  s.core = core;
  return s;
}

BasisSpec BasisSpec::doubled() const {
  BasisSpec s = *this;
  if (mode == Mode::FullBall) {
    s.radius = radius * std::sqrt(2.0);
  } else {
    s.window = 2 * window;
    s.core = core * std::sqrt(2.0);
  }
  s.max_dim = 4 * max_dim;
  return s;
}

double BasisSpec::trust_lo() const {
  if (mode == Mode::FullBall) return -std::numeric_limits<double>::infinity();
  if (core > 0 && core * core >= e_star - 0.5 * window) return -std::numeric_limits<double>::infinity();
  return e_star - 0.5 * window;
}

double BasisSpec::trust_hi() const {
  if (mode == Mode::FullBall) return 0.5 * radius * radius;
  return e_star + 0.5 * window;
}

PlaneWaveBasis make_basis(const DualLattice& gamma, const Vec& t, const BasisSpec& spec) {
  PlaneWaveBasis basis;
  basis.t = t;
  basis.spec = spec;
  double outer = spec.mode == BasisSpec::Mode::FullBall ? spec.radius : std::sqrt(std::max(0.0, spec.e_star + spec.window));
  // Rough count before enumeration, so an oversized request fails fast.
  double cell = std::abs(gamma.basis.determinant());
  double ball = std::pow(outer, gamma.dim()) * std::pow(M_PI, gamma.dim() / 2.0) / std::tgamma(gamma.dim() / 2.0 + 1);
  double estimate = ball / cell;
  if (spec.mode == BasisSpec::Mode::ShellWindow) {
    double inner = std::sqrt(std::max(0.0, spec.e_star - spec.window));
    estimate -= std::pow(inner, gamma.dim()) * std::pow(M_PI, gamma.dim() / 2.0) / std::tgamma(gamma.dim() / 2.0 + 1) / cell;
  }
  if (estimate > 2.0 * static_cast<double>(spec.max_dim)) {
    std::ostringstream os;
    os << "plane-wave basis too large: about " << static_cast<long long>(estimate) << " functions exceeds the cap "
       << spec.max_dim << "; reduce the window or raise solver.max_dim";
    throw BasisTooLarge(os.str());
  }
  for (auto& k : lattice_points(gamma.basis, outer, t)) {
    if (spec.mode == BasisSpec::Mode::ShellWindow) {
      double e = (gamma.to_cart(k) + t).squaredNorm();
      bool in_shell = std::abs(e - spec.e_star) <= spec.window;
      bool in_core = std::sqrt(e) <= spec.core;
      if (!in_shell && !in_core) continue;
    }
    basis.indices.push_back(std::move(k));
  }
  if (basis.indices.size() > spec.max_dim) {
    std::ostringstream os;
    os << "plane-wave basis too large: " << basis.indices.size() << " functions exceeds the cap " << spec.max_dim
       << "; reduce the window or raise solver.max_dim";
    throw BasisTooLarge(os.str());
  }
  if (basis.indices.empty()) throw std::invalid_argument("empty plane-wave basis");
  return basis;
}

CMat assemble(const FourierPotential& q, const PlaneWaveBasis& basis) {
  const int n = static_cast<int>(basis.size());
  std::map<IVec, int> pos;
  for (int i = 0; i < n; ++i) pos[basis.indices[i]] = i;
  CMat H = CMat::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    H(i, i) = (q.dual.to_cart(basis.indices[i]) + basis.t).squaredNorm();
    for (const auto& [g, val] : q.coeffs) {
      auto it = pos.find(basis.indices[i] + g);
      if (it != pos.end()) H(it->second, i) += val;
    }
  }
  return H;
}

std::vector<double> BandSpectrum::free_levels() const {
  std::vector<double> out(kvecs.cols());
  for (Eigen::Index i = 0; i < kvecs.cols(); ++i) out[i] = kvecs.col(i).squaredNorm();
  std::sort(out.begin(), out.end());
  return out;
}

BandSpectrum assemble_and_solve(const FourierPotential& q, const Vec& t, const BasisSpec& spec,
                                const SolveOptions& opt) {
  BandSpectrum out;
  out.t = t;
  out.basis = make_basis(q.dual, t, spec);
  const int n = static_cast<int>(out.basis.size());
  out.kvecs.resize(t.size(), n);
  for (int i = 0; i < n; ++i) out.kvecs.col(i) = q.dual.to_cart(out.basis.indices[i]) + t;

  CMat H = assemble(q, out.basis);
  const int mode = opt.vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly;
  if (H.imag().isZero(0.0)) {
    const Mat Hr = H.real();
    Eigen::SelfAdjointEigenSolver<Mat> es(Hr, mode);
    if (es.info() != Eigen::Success) throw std::runtime_error("band eigensolver failed");
    out.eigenvalues = es.eigenvalues();
    if (opt.vectors) {
      Mat R = Hr * es.eigenvectors() - es.eigenvectors() * out.eigenvalues.asDiagonal();
      out.residual = R.colwise().norm().maxCoeff();
      out.vectors = es.eigenvectors().cast<cplx>();
    }
  } else {
    Eigen::SelfAdjointEigenSolver<CMat> es(H, mode);
    if (es.info() != Eigen::Success) throw std::runtime_error("band eigensolver failed");
    out.eigenvalues = es.eigenvalues();
    if (opt.vectors) {
      out.vectors = es.eigenvectors();
      CMat R = H * out.vectors - out.vectors * out.eigenvalues.cast<cplx>().asDiagonal();
      out.residual = R.colwise().norm().maxCoeff();
    }
  }
  out.operator_norm = std::max(std::abs(out.eigenvalues(0)), std::abs(out.eigenvalues(n - 1)));

  out.trusted.assign(n, false);
  const double lo = spec.trust_lo(), hi = spec.trust_hi();
  for (int i = 0; i < n; ++i) out.trusted[i] = out.eigenvalues(i) >= lo && out.eigenvalues(i) <= hi;

  if (opt.validate) {
    SolveOptions o2;
    o2.vectors = false;
    BandSpectrum big = assemble_and_solve(q, t, spec.doubled(), o2);
    const Vec& e2 = big.eigenvalues;
    for (int i = 0; i < n; ++i) {
      if (!out.trusted[i]) continue;
      const double x = out.eigenvalues(i);
      auto it = std::lower_bound(e2.data(), e2.data() + e2.size(), x);
      double d = std::numeric_limits<double>::infinity();
      if (it != e2.data() + e2.size()) d = std::min(d, std::abs(*it - x));
      if (it != e2.data()) d = std::min(d, std::abs(*(it - 1) - x));
      out.trusted[i] = d <= opt.validate_tol;
    }
    out.validated = true;
  }
  return out;
}

double default_gap_min(const BandSpectrum& spec) {
  const double lo = spec.basis.spec.trust_lo(), hi = spec.basis.spec.trust_hi();
  std::vector<double> lv;
  for (double e : spec.free_levels())
    if (e >= lo && e <= hi) lv.push_back(e);
  double g = std::numeric_limits<double>::infinity();
  for (size_t i = 1; i < lv.size(); ++i) g = std::min(g, lv[i] - lv[i - 1]);
  if (!std::isfinite(g)) return 1e-6;
  return std::max(0.5 * g, 1e-6);
}

std::vector<double> model_eigs(const HillSpectrum& hill, const Vec& beta, const Vec& tau,
                               const std::vector<long long>& js) {
  const double b2 = (beta + tau).squaredNorm();
  std::vector<double> out;
  out.reserve(js.size());
  for (auto j : js) out.push_back(b2 + hill.at(j).mu);
  return out;
}

bool is_simple(const BandSpectrum& spec, int N, double gap_min) {
  const Vec& e = spec.eigenvalues;
  bool ok = true;
  if (N > 0) ok = ok && (e(N) - e(N - 1) > gap_min);
  if (N + 1 < e.size()) ok = ok && (e(N + 1) - e(N) > gap_min);
  return ok;
}

EigenMatch match_eigenvalue(const BandSpectrum& spec, double target, double gap_min) {
  const Vec& e = spec.eigenvalues;
  Eigen::Index best = 0;
  (e.array() - target).abs().minCoeff(&best);
  if (!spec.trusted[best]) {
    std::ostringstream os;
    os << "nearest eigenvalue " << e(best) << " to target " << target << " is outside the trusted window; enlarge it";
    throw std::runtime_error(os.str());
  }
  EigenMatch m;
  m.N = static_cast<int>(best);
  m.lambda = e(best);
  m.simple = is_simple(spec, m.N, gap_min);
  return m;
}

double hellmann_feynman(const BandSpectrum& spec, int N, const Vec& h) {
  if (spec.vectors.cols() == 0) throw std::logic_error("band derivative needs eigenvectors");
  double s = 0;
  for (Eigen::Index i = 0; i < spec.kvecs.cols(); ++i) s += spec.kvecs.col(i).dot(h) * std::norm(spec.vectors(i, N));
  return 2 * s;
}

double band_derivative(const BandSpectrum& spec, int N, const Vec& h, double gap_min) {
  if (!is_simple(spec, N, gap_min)) throw std::invalid_argument("band_derivative: eigenvalue is not simple");
  return hellmann_feynman(spec, N, h);
}

}  // namespace bandinv
