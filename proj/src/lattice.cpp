#include "bandinv/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>

namespace bandinv {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Returns g = gcd(a, b) >= 0 and x, y with a x + b y = g.
long long ext_gcd(long long a, long long b, long long& x, long long& y) {
  long long x0 = 1, y0 = 0, x1 = 0, y1 = 1;
  while (b != 0) {
    long long q = a / b;
    long long t = a - q * b;
    a = b;
    b = t;
    t = x0 - q * x1;
    x0 = x1;
    x1 = t;
    t = y0 - q * y1;
    y0 = y1;
    y1 = t;
  }
  if (a < 0) {
    a = -a;
    x0 = -x0;
    y0 = -y0;
  }
  x = x0;
  y = y0;
  return a;
}

IMat integer_inverse(const IMat& m) {
  Mat inv = m.cast<double>().inverse();
  IMat r = inv.array().round().cast<long long>().matrix();
  IMat check = m * r;
  if (check != IMat::Identity(m.rows(), m.cols()))
    throw std::runtime_error("integer matrix is not unimodular");
  return r;
}

IVec column_times(const IMat& m, const IVec& k) {
  IVec r(m.rows(), 0);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) r[i] += m(i, j) * k[j];
  return r;
}

double condition_number(const Mat& m) {
  Eigen::JacobiSVD<Mat> svd(m);
  const auto& s = svd.singularValues();
  if (s(s.size() - 1) == 0.0) return std::numeric_limits<double>::infinity();
  return s(0) / s(s.size() - 1);
}

}  // namespace

LatticeBasis LatticeBasis::from_matrix(const Mat& m) {
  if (m.rows() != m.cols() || m.rows() < 2)
    throw std::invalid_argument("lattice basis must be a square matrix of size >= 2");
  return LatticeBasis{static_cast<int>(m.rows()), m};
}

LatticeBasis LatticeBasis::cubic(double scale, int d) {
  if (scale <= 0) throw std::invalid_argument("cubic lattice scale must be positive");
  return from_matrix(scale * Mat::Identity(d, d));
}

Vec DualLattice::to_cart(const IVec& k) const {
  return basis * GammaDelta::to_real(k);
}

IVec DualLattice::nearest_coords(const Vec& x, double* residual) const {
  Vec c = basis.fullPivLu().solve(x);
  IVec k(c.size());
  for (Eigen::Index i = 0; i < c.size(); ++i) k[i] = std::llround(c(i));
  if (residual) *residual = (to_cart(k) - x).norm();
  return k;
}

DualLattice dual_lattice(const LatticeBasis& omega) {
  double cond = condition_number(omega.basis);
  if (!std::isfinite(cond) || cond > 1e12) {
    std::ostringstream os;
    os << "singular lattice basis (condition number " << cond << ")";
    throw std::invalid_argument(os.str());
  }
  Mat g = kTwoPi * omega.basis.transpose().inverse();
  return DualLattice{g};
}

LatticeBasis dual_of(const DualLattice& gamma) {
  return LatticeBasis::from_matrix(kTwoPi * gamma.basis.transpose().inverse());
}

std::vector<IVec> lattice_points(const Mat& B, double radius, const Vec& shift) {
  const int k = static_cast<int>(B.cols());
  Mat P = (B.transpose() * B).inverse() * B.transpose();
  Vec c0 = -(P * shift);
  std::vector<long long> lo(k), hi(k);
  for (int i = 0; i < k; ++i) {
    double w = P.row(i).norm() * radius;
    lo[i] = static_cast<long long>(std::floor(c0(i) - w)) - 1;
    hi[i] = static_cast<long long>(std::ceil(c0(i) + w)) + 1;
  }
  const double tol = 1e-12 * std::max(1.0, radius);
  std::vector<IVec> out;
  IVec c(k);
  std::function<void(int)> rec = [&](int i) {
    if (i == k) {
      Vec x = B * GammaDelta::to_real(c) + shift;
      if (x.norm() <= radius + tol) out.push_back(c);
      return;
    }
    for (long long m = lo[i]; m <= hi[i]; ++m) {
      c[i] = m;
      rec(i + 1);
    }
  };
  rec(0);
  return out;
}

std::vector<IVec> lattice_points(const Mat& B, double radius) {
  return lattice_points(B, radius, Vec::Zero(B.rows()));
}

bool is_maximal(const IVec& k) { return gcd_of(k) == 1; }

std::vector<IVec> maximal_elements(const DualLattice& gamma, double radius) {
  if (radius <= 0) throw std::invalid_argument("radius must be positive");
  std::vector<std::pair<double, IVec>> tmp;
  for (auto& k : lattice_points(gamma.basis, radius))
    if (is_maximal(k)) tmp.emplace_back(gamma.to_cart(k).norm(), k);
  std::sort(tmp.begin(), tmp.end(), [](const auto& a, const auto& b) {
    if (std::abs(a.first - b.first) > 1e-12 * std::max(1.0, a.first)) return a.first < b.first;
    return a.second < b.second;
  });
  std::vector<IVec> out;
  out.reserve(tmp.size());
  for (auto& t : tmp) out.push_back(std::move(t.second));
  return out;
}

Vec GammaDelta::to_real(const IVec& k) {
  Vec r(k.size());
  for (size_t i = 0; i < k.size(); ++i) r(i) = static_cast<double>(k[i]);
  return r;
}

long long GammaDelta::delta_index(const IVec& gamma) const {
  long long m = 0;
  for (int i = 0; i < dim(); ++i) m += unimodular(i, 0) * gamma[i];
  return m;
}

IVec GammaDelta::gd_coords(const IVec& gamma) const {
  IVec raw(rank(), 0);
  for (int j = 0; j < rank(); ++j)
    for (int i = 0; i < dim(); ++i) raw[j] += unimodular(i, j + 1) * gamma[i];
  return column_times(reduction_inv, raw);
}

IVec GammaDelta::join(long long m, const IVec& c) const {
  IVec raw = column_times(reduction, c);
  IVec full(dim());
  full[0] = m;
  for (int j = 0; j < rank(); ++j) full[j + 1] = raw[j];
  IMat uinv_t = unimodular_inv.transpose();
  return column_times(uinv_t, full);
}

Vec GammaDelta::gd_to_cart(const IVec& c) const { return gd_basis * to_real(c); }

Vec GammaDelta::gd_real_coords(const Vec& x) const {
  return (gd_basis.transpose() * gd_basis).ldlt().solve(gd_basis.transpose() * x);
}

double GammaDelta::delta_coefficient(const IVec& gamma) const {
  return to_cart(gamma).dot(delta_cart) / delta_norm2;
}

bool GammaDelta::in_plane(const IVec& gamma, const IVec& b) const {
  IVec c = gd_coords(gamma);
  for (int i = 0; i < rank(); ++i)
    for (int j = i + 1; j < rank(); ++j)
      if (c[i] * b[j] - c[j] * b[i] != 0) return false;
  return true;
}

long long GammaDelta::plane_index(const IVec& gamma, const IVec& b) const {
  if (!in_plane(gamma, b)) throw std::invalid_argument("point is not in the plane P(delta, b)");
  IVec c = gd_coords(gamma);
  for (int i = 0; i < rank(); ++i) {
    if (b[i] != 0) {
      if (c[i] % b[i] != 0) throw std::invalid_argument("b is not maximal in Gamma_delta");
      return c[i] / b[i];
    }
  }
  throw std::invalid_argument("b must be nonzero");
}

double GammaDelta::fd_measure() const {
  return std::sqrt((gd_basis.transpose() * gd_basis).determinant());
}

double GammaDelta::fd_diameter() const {
  const int k = rank();
  double best = 0;
  for (int mask = 0; mask < (1 << (k - 1)); ++mask) {
    Vec s = gd_basis.col(0);
    for (int i = 1; i < k; ++i) s += ((mask >> (i - 1)) & 1 ? -1.0 : 1.0) * gd_basis.col(i);
    best = std::max(best, s.norm());
  }
  return best;
}

GammaDelta gamma_delta(const DualLattice& gamma, const LatticeBasis& omega, const IVec& delta) {
  const int d = gamma.dim();
  if (static_cast<int>(delta.size()) != d) throw std::invalid_argument("delta has wrong dimension");
  if (is_zero(delta)) throw std::invalid_argument("delta must be nonzero");
  if (!is_maximal(delta))
    throw std::invalid_argument("delta " + to_string(delta) + " is not a maximal element of Gamma");

  GammaDelta gd;
  gd.gamma_basis = gamma.basis;
  gd.delta = delta;
  gd.delta_cart = gamma.to_cart(delta);
  gd.delta_norm2 = gd.delta_cart.squaredNorm();

  // Integer row (B_Omega)^T delta / 2pi.
  Vec rr = omega.basis.transpose() * gd.delta_cart / kTwoPi;
  IVec r(d);
  for (int i = 0; i < d; ++i) {
    r[i] = std::llround(rr(i));
    if (std::abs(rr(i) - static_cast<double>(r[i])) > 1e-9 * std::max(1.0, std::abs(rr(i))))
      throw std::invalid_argument("delta is not a point of the dual lattice");
  }

  // Column operations reducing r to (g, 0, ..., 0).
  IMat U = IMat::Identity(d, d);
  for (int i = 1; i < d; ++i) {
    long long a = r[0], b = r[i];
    if (b == 0) continue;
    long long x, y;
    long long g = ext_gcd(a, b, x, y);
    long long p = -b / g, q = a / g;
    for (int row = 0; row < d; ++row) {
      long long c0 = U(row, 0), ci = U(row, i);
      U(row, 0) = x * c0 + y * ci;
      U(row, i) = p * c0 + q * ci;
    }
    r[0] = g;
    r[i] = 0;
  }
  if (r[0] < 0) {
    U.col(0) = -U.col(0);
    r[0] = -r[0];
  }
  if (r[0] != 1) throw std::invalid_argument("delta is not maximal (gcd " + std::to_string(r[0]) + ")");

  gd.unimodular = U;
  gd.unimodular_inv = integer_inverse(U);
  gd.delta_star = omega.basis * U.col(0).cast<double>();

  Mat W(d, d - 1);
  for (int j = 0; j < d - 1; ++j) W.col(j) = omega.basis * U.col(j + 1).cast<double>();
  gd.omega_delta_basis = W;

  Mat G = kTwoPi * W * (W.transpose() * W).inverse();
  IMat R = IMat::Identity(d - 1, d - 1);
  if (d - 1 == 1) {
    for (int i = 0; i < d; ++i) {
      if (std::abs(G(i, 0)) > 1e-12 * G.col(0).norm()) {
        if (G(i, 0) < 0) {
          G = -G;
          R = -R;
        }
        break;
      }
    }
  } else if (d - 1 == 2) {
    for (int it = 0; it < 1000; ++it) {
      if (G.col(0).squaredNorm() > G.col(1).squaredNorm()) {
        G.col(0).swap(G.col(1));
        R.col(0).swap(R.col(1));
      }
      long long m = std::llround(G.col(0).dot(G.col(1)) / G.col(0).squaredNorm());
      if (m == 0) break;
      G.col(1) -= static_cast<double>(m) * G.col(0);
      R.col(1) -= m * R.col(0);
    }
  }
  gd.gd_basis = G;
  gd.reduction = R;
  gd.reduction_inv = integer_inverse(R);

  Eigen::HouseholderQR<Mat> qr(G);
  Mat Q = qr.householderQ() * Mat::Identity(d, d - 1);
  gd.hyperplane_basis = Q;
  return gd;
}

QuasiDecomp decompose(const Vec& point, const GammaDelta& gd) {
  QuasiDecomp q;
  double c = point.dot(gd.delta_cart) / gd.delta_norm2;
  double fl = std::floor(c);
  q.j = static_cast<long long>(fl);
  q.v = c - fl;
  if (q.v >= 1.0) {
    q.v = 0.0;
    q.j += 1;
  }
  Vec p = point - c * gd.delta_cart;
  Vec y = gd.gd_real_coords(p);
  q.beta.resize(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) q.beta[i] = static_cast<long long>(std::floor(y(i) + 0.5));
  q.tau = p - gd.gd_to_cart(q.beta);
  return q;
}

Vec reconstruct(const QuasiDecomp& q, const GammaDelta& gd) {
  return gd.gd_to_cart(q.beta) + q.tau + (static_cast<double>(q.j) + q.v) * gd.delta_cart;
}

bool in_V(const Vec& x, const Vec& b, double c) {
  return std::abs((x + b).squaredNorm() - x.squaredNorm()) < c;
}

SelectionParams SelectionParams::defaults(double rho, int d) {
  if (rho <= 0) throw std::invalid_argument("rho must be positive");
  SelectionParams p;
  p.rho = rho;
  p.dim = d;
  p.alpha = 1.0 / (4.0 * std::pow(3.0, d) * (d + 1));
  p.alpha_k.resize(d);
  for (int k = 1; k <= d; ++k) p.alpha_k[k - 1] = std::pow(3.0, k) * p.alpha;
  p.a = 1.0 - p.alpha_k.back() + p.alpha;
  return p;
}

double SelectionParams::rho_a() const { return std::pow(rho, a); }

std::map<std::string, double> SelectionParams::deviations() const {
  SelectionParams base = defaults(rho, dim);
  std::map<std::string, double> out;
  auto cmp = [&](const char* name, double mine, double ref) {
    if (std::abs(mine - ref) > 1e-15 * std::max(1.0, std::abs(ref))) out[name] = mine;
  };
  cmp("alpha", alpha, base.alpha);
  cmp("a", a, base.a);
  for (int k = 0; k < dim; ++k) cmp(("alpha_" + std::to_string(k + 1)).c_str(), alpha_k[k], base.alpha_k[k]);
  cmp("annulus_lo", annulus_lo, 0.5);
  cmp("annulus_hi", annulus_hi, 1.5);
  cmp("window_lo", window_lo, 1.0 / 3.0);
  cmp("window_hi", window_hi, 3.0);
  cmp("margin59", margin59, 1.0 / 3.0);
  cmp("margin60", margin60, 1.0 / 3.0);
  cmp("gap_exponent", gap_exponent, 0.5);
  cmp("a_set_factor", a_set_factor, 4.0);
  // Asymptotic values: annulus padded by d_delta + 1, support truncated at rho^alpha.
  out["annulus_pad"] = annulus_pad;
  out["support_radius"] = truncation_radius();
  return out;
}

namespace {

double log_ratio(double x, double threshold) {
  if (threshold <= 0) return std::numeric_limits<double>::infinity();
  if (x <= 0) return -std::numeric_limits<double>::infinity();
  return std::log(x / threshold);
}

}  // namespace

std::vector<PredicateMargin> evaluate_predicates(const GammaDelta& gd, const IVec& beta, const IVec& b, double v,
                                                 const SelectionParams& p, const std::vector<IVec>& support) {
  const double inf = std::numeric_limits<double>::infinity();
  Vec bc = gd.gd_to_cart(beta);
  Vec bb = gd.gd_to_cart(b);
  const double nb = bc.norm();
  const double ra = p.rho_a();
  std::vector<PredicateMargin> out;

  double lo = p.annulus_lo * p.rho + p.annulus_pad;
  double hi = p.annulus_hi * p.rho - p.annulus_pad;
  out.push_back({"annulus", hi <= lo ? -inf : std::min(log_ratio(nb, lo), log_ratio(hi, nb))});

  double x = std::abs(bc.dot(bb));
  out.push_back({"window_58", std::min(log_ratio(x, p.window_lo * ra), log_ratio(p.window_hi * ra, x))});

  double m59 = inf, m60 = inf;
  const double rs = p.truncation_radius();
  for (const auto& g : support) {
    if (is_zero(g)) continue;
    Vec gc = gd.to_cart(g);
    if (gc.norm() >= rs) continue;
    if (is_zero(gd.gd_coords(g))) continue;
    double y = std::abs(bc.dot(gc));
    if (gd.in_plane(g, b))
      m59 = std::min(m59, log_ratio(y, p.margin59 * ra));
    else
      m60 = std::min(m60, log_ratio(y, p.margin60 * std::pow(p.rho, p.a + 2 * p.alpha)));
  }
  out.push_back({"in_plane_59", m59});
  out.push_back({"off_plane_60", m60});

  const double rb = std::pow(p.rho, p.alpha_d());
  const double gap = std::pow(p.rho, p.gap_exponent);
  const double aset = p.a_set_factor * gd.fd_diameter() * rb;
  double mgap = inf, maset = inf;
  for (const auto& bp : lattice_points(gd.gd_basis, rb)) {
    if (is_zero(bp)) continue;
    Vec bpc = gd.gd_to_cart(bp);
    if (bpc.norm() >= rb) continue;
    double X = 2 * bc.dot(bpc) + bpc.squaredNorm();
    mgap = std::min(mgap, log_ratio(std::abs(X), gap));
    // Closest value of |X + |(j+v) delta|^2| over integers j.
    double best = inf;
    double s = X < 0 ? std::sqrt(-X / gd.delta_norm2) : 0.0;
    for (double root : {s, -s}) {
      double c0 = std::floor(root - v);
      for (double jj = c0 - 1; jj <= c0 + 2; jj += 1)
        best = std::min(best, std::abs(X + (jj + v) * (jj + v) * gd.delta_norm2));
    }
    maset = std::min(maset, log_ratio(best, aset));
  }
  out.push_back({"s2_gap", mgap});
  out.push_back({"a_set", maset});
  return out;
}

BetaSelection select_beta(const GammaDelta& gd, const IVec& b, double v, const SelectionParams& p,
                          const std::vector<IVec>& support) {
  if (!(v > 0 && v < 1) || std::abs(v - 0.5) < 1e-15)
    throw std::invalid_argument("select_beta requires v in (0, 1/2) or (1/2, 1)");
  if (static_cast<int>(b.size()) != gd.rank() || !is_maximal(b))
    throw std::invalid_argument("b must be a maximal element of Gamma_delta");

  BetaSelection best;
  bool found = false;
  std::map<std::string, size_t> violations;
  const double hi = p.annulus_hi * p.rho;
  for (const auto& beta : lattice_points(gd.gd_basis, hi)) {
    if (is_zero(beta)) continue;
    auto margins = evaluate_predicates(gd, beta, b, v, p, support);
    if (!margins[0].satisfied()) continue;
    ++best.scanned;
    double mn = std::numeric_limits<double>::infinity();
    bool ok = true;
    for (const auto& m : margins) {
      mn = std::min(mn, m.margin);
      if (!m.satisfied()) {
        ok = false;
        ++violations[m.name];
      }
    }
    if (!ok) continue;
    ++best.feasible;
    bool better = !found || mn > best.min_margin + 1e-12 ||
                  (std::abs(mn - best.min_margin) <= 1e-12 && beta < best.beta);
    if (better) {
      found = true;
      best.beta = beta;
      best.margins = margins;
      best.min_margin = mn;
    }
  }
  if (!found) {
    std::ostringstream os;
    os << "no feasible beta at rho=" << p.rho << " (" << best.scanned << " candidates in annulus";
    for (const auto& [k, n] : violations) os << "; " << k << " failed " << n;
    os << ")";
    throw SelectionInfeasible(os.str(), violations);
  }
  best.beta_cart = gd.gd_to_cart(best.beta);
  return best;
}

}  // namespace bandinv
