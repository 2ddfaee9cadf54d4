#include "bandinv/potential.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace bandinv;

namespace {

struct Geometry {
  LatticeBasis omega = LatticeBasis::cubic(M_PI, 2);
  DualLattice dual = dual_lattice(omega);
  GammaDelta gd = gamma_delta(dual, omega, {1, 0});
};

// Midpoint average of f over the fundamental cell of Omega.
template <class F>
double cell_average(const LatticeBasis& omega, int n, F f) {
  double s = 0;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      Vec u(2);
      u << (a + 0.5) / n, (b + 0.5) / n;
      s += f(Vec(omega.basis * u));
    }
  return s / (static_cast<double>(n) * n);
}

}  // namespace

TEST(Potential, HermitianCompletion) {
  Geometry s;
  std::vector<std::string> warnings;
  auto q = FourierPotential::from_terms(s.dual, {{{1, 0}, {0.5, 0.2}}, {{0, 1}, 0.4}, {{0, 0}, 3.0}}, &warnings);
  EXPECT_EQ(q.coeff({-1, 0}), std::conj(cplx(0.5, 0.2)));
  EXPECT_EQ(q.coeff({0, -1}), cplx(0.4));
  EXPECT_EQ(q.coeff({0, 0}), cplx(0.0));
  EXPECT_EQ(warnings.size(), 1u);
  EXPECT_EQ(q.support().size(), 4u);
  for (double x : {0.1, 0.7, 2.3})
    for (double y : {-0.4, 1.9}) {
      Vec p(2);
      p << x, y;
      EXPECT_LT(std::abs(q.evaluate(p).imag()), 1e-14);
    }
  EXPECT_THROW(FourierPotential::from_terms(s.dual, {{{1, 0}, 0.5}, {{-1, 0}, 0.7}}), std::invalid_argument);
  EXPECT_THROW(FourierPotential::from_terms(s.dual, {{{1, 0, 0}, 0.5}}), std::invalid_argument);
}

TEST(Potential, ParsevalMatchesGridQuadrature) {
  Geometry s;
  auto q = FourierPotential::from_terms(s.dual, {{{1, 0}, 0.5}, {{0, 1}, {0.4, -0.1}}, {{1, -1}, 0.3}, {{2, 1}, 0.2}});
  auto poly = as_poly(q);
  double grid = cell_average(s.omega, 256, [&](const Vec& x) { return std::norm(q.evaluate(x)); });
  EXPECT_NEAR(parseval_integral(poly, poly).real(), grid, 1e-12);

  auto g2 = abs2(poly);
  double grid4 = cell_average(s.omega, 256, [&](const Vec& x) { return std::pow(std::norm(q.evaluate(x)), 2); });
  EXPECT_NEAR(parseval_integral(g2, g2).real(), grid4, 1e-12);
}

TEST(Potential, DirectionalRestriction) {
  Geometry s;
  auto q = FourierPotential::from_terms(s.dual, {{{1, 0}, 0.5}, {{2, 0}, 0.2}, {{0, 1}, 0.4}, {{1, 1}, 0.3}});
  DirectionalPotential Q = directional(q, {1, 0});
  EXPECT_NEAR(Q.delta_norm, 2.0, 1e-14);
  EXPECT_EQ(Q.bandwidth(), 2);
  EXPECT_EQ(Q.at(1), cplx(0.5));
  EXPECT_EQ(Q.at(-2), cplx(0.2));
  EXPECT_EQ(Q.at(0), cplx(0.0));
  EXPECT_EQ(Q.at(3), cplx(0.0));
  EXPECT_TRUE(directional(q, {1, 2}).is_zero());
  EXPECT_THROW(directional(q, {2, 0}), std::invalid_argument);
}

TEST(Potential, QDeltaBByQuadrature) {
  Geometry s;
  auto q = FourierPotential::from_terms(s.dual, {{{1, 0}, 0.5}, {{0, 1}, 0.4}, {{1, 1}, 0.3}, {{3, 1}, 0.1}, {{1, 2}, 0.25}});
  VectorTrigPoly qb = q_delta_b(q, s.gd, {1});
  // Only modes in the plane spanned by delta and b, off the delta line.
  for (const auto& [k, v] : qb.terms) {
    EXPECT_TRUE(s.gd.in_plane(k, {1}));
    EXPECT_NE(s.gd.gd_coords(k)[0], 0);
  }
  Vec x(2);
  x << 0.37, -1.1;
  const Vec bc = s.gd.gd_to_cart({1});
  CVec direct = CVec::Zero(2);
  for (const auto& [k, v] : q.coeffs) {
    Vec g = s.dual.to_cart(k);
    double n = g.dot(bc) / bc.squaredNorm();
    if (std::abs(n) < 0.5) continue;
    direct += v / (n * bc.squaredNorm()) * std::exp(cplx(0, g.dot(x))) * g.cast<cplx>();
  }
  EXPECT_LT((qb.evaluate(x, s.gd.gamma_basis) - direct).norm(), 1e-14);
  double grid = cell_average(s.omega, 256, [&](const Vec& x) { return qb.evaluate(x, s.gd.gamma_basis).squaredNorm(); });
  EXPECT_NEAR(parseval_integral(qb, qb).real(), grid, 1e-12);
  EXPECT_NEAR(oracle_invariants(q, s.gd, {1}).J0, grid, 1e-12);
}

TEST(Potential, LineRestrictionOfSquare) {
  Geometry s;
  auto q = FourierPotential::from_terms(s.dual, {{{1, 0}, 0.5}, {{0, 1}, 0.4}});
  auto line = line_restriction(abs2(as_poly(q)), {1, 0});
  // |q|^2 along delta: 2 * 0.5^2 + 2 * 0.4^2 at zero, 0.5^2 at +-2.
  EXPECT_NEAR(line[0].real(), 0.82, 1e-14);
  EXPECT_NEAR(line[2].real(), 0.25, 1e-14);
  EXPECT_NEAR(line[-2].real(), 0.25, 1e-14);
  EXPECT_NEAR(std::abs(line[1]), 0.0, 1e-14);
}

TEST(Potential, MathieuI17) {
  Geometry s;
  auto q = FourierPotential::from_terms(s.dual, {{{1, 0}, 1.0}});
  auto inv = oracle_invariants(q, s.gd, {1});
  EXPECT_NEAR(inv.I17, 2.0, 1e-14);
  EXPECT_NEAR(inv.J0, 0.0, 1e-14);
}

TEST(Potential, FFieldPoles) {
  Geometry s;
  auto q = FourierPotential::from_terms(s.dual, {{{1, 0}, 0.5}, {{0, 1}, 0.4}});
  Vec x0(2);
  x0 << 1.0, 0.0;
  EXPECT_THROW(f_field(q, s.gd, x0, 10.0), std::invalid_argument);
  x0 << 0.3, 1.0;
  auto f = f_field(q, s.gd, x0, 10.0);
  EXPECT_FALSE(f.terms.empty());
}
