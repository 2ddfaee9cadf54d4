#include "bandinv/bands.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace bandinv;

namespace {

struct Geometry {
  LatticeBasis omega = LatticeBasis::cubic(M_PI, 2);
  DualLattice dual = dual_lattice(omega);
};

Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

}  // namespace

TEST(Bands, FreeSpectrumIsSortedKinetic) {
  Geometry s;
  auto q = FourierPotential::from_terms(s.dual, {});
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-5, 5);
  for (int trial = 0; trial < 5; ++trial) {
    Vec t = vec2(u(rng), u(rng));
    const double R = 12.0;
    auto spec = assemble_and_solve(q, t, BasisSpec::full_ball(R), {false});
    std::vector<double> want;
    for (long long a = -10; a <= 10; ++a)
      for (long long b = -10; b <= 10; ++b) {
        Vec k = vec2(2.0 * a, 2.0 * b) + t;
        if (k.norm() <= R) want.push_back(k.squaredNorm());
      }
    std::sort(want.begin(), want.end());
    ASSERT_EQ(static_cast<size_t>(spec.size()), want.size());
    for (int i = 0; i < spec.size(); ++i) EXPECT_NEAR(spec.eigenvalues(i), want[i], 1e-12 * std::max(1.0, want[i]));
  }
}

TEST(Bands, MatrixEntriesAreFourierCoefficients) {
  Geometry s;
  auto q = FourierPotential::from_terms(s.dual, {{{1, 0}, {0.5, 0.1}}, {{1, 1}, 0.3}});
  Vec t = vec2(0.3, -0.7);
  auto basis = make_basis(s.dual, t, BasisSpec::full_ball(8.0));
  CMat H = assemble(q, basis);
  EXPECT_LT((H - H.adjoint()).norm(), 1e-15);
  for (size_t a = 0; a < basis.size(); ++a)
    for (size_t b = 0; b < basis.size(); ++b) {
      cplx want = q.coeff(basis.indices[a] - basis.indices[b]);
      if (a == b) want += (s.dual.to_cart(basis.indices[a]) + t).squaredNorm();
      EXPECT_EQ(H(a, b), want);
    }
}

TEST(Bands, DegenerateSplitting) {
  Geometry s;
  const double eps = 1e-3;
  auto q = FourierPotential::from_terms(s.dual, {{{1, 0}, eps}});
  // |t| = |t + delta| with delta = (2, 0).
  Vec t = vec2(-1.0, 0.37);
  auto spec = assemble_and_solve(q, t, BasisSpec::full_ball(14.0), {false});
  const double e0 = t.squaredNorm();
  std::vector<double> near;
  for (int i = 0; i < spec.size(); ++i)
    if (std::abs(spec.eigenvalues(i) - e0) < 0.1) near.push_back(spec.eigenvalues(i));
  ASSERT_EQ(near.size(), 2u);
  EXPECT_NEAR(near[1] - near[0], 2 * eps, 1e-8);
  EXPECT_FALSE(is_simple(spec, static_cast<int>(std::lower_bound(spec.eigenvalues.data(),
                                                                  spec.eigenvalues.data() + spec.size(), near[0]) -
                                                 spec.eigenvalues.data()),
                         1e-2));
}

TEST(Bands, SeparableMatchesHill) {
  Geometry s;
  auto omega = s.omega;
  GammaDelta gd = gamma_delta(s.dual, omega, {1, 0});
  auto q = FourierPotential::from_terms(s.dual, {{{1, 0}, 0.5}, {{2, 0}, 0.2}});
  auto hill = hill_solve(directional(q, {1, 0}), 0.3, 40);
  Vec beta = gd.gd_to_cart({5}), tau = gd.gd_to_cart({0}) + vec2(0, 0.21);
  for (long long j : {0, 1, 2}) {
    Vec t = beta + tau + (j + 0.3) * gd.delta_cart;
    double target = (beta + tau).squaredNorm() + hill.at(j).mu;
    auto spec = assemble_and_solve(q, t, BasisSpec::shell(target, 300.0), {false});
    double best = 1e9;
    for (int i = 0; i < spec.size(); ++i)
      if (spec.trusted[i]) best = std::min(best, std::abs(spec.eigenvalues(i) - target));
    EXPECT_LT(best, 1e-9) << "j=" << j;
  }
  auto me = model_eigs(hill, beta, tau, {0, 1});
  ASSERT_EQ(me.size(), 2u);
  EXPECT_NEAR(me[1], (beta + tau).squaredNorm() + hill.at(1).mu, 1e-12);
}

TEST(Bands, WindowDoublingStable) {
  Geometry s;
  auto q = FourierPotential::from_terms(s.dual, {{{1, 0}, 0.5}, {{0, 1}, 0.4}, {{1, -1}, 0.3}});
  Vec t = vec2(1.3, 12.4);
  const double e = t.squaredNorm();
  auto a = assemble_and_solve(q, t, BasisSpec::shell(e, 40.0), {false, true, 1e-8});
  EXPECT_TRUE(a.validated);
  auto b = assemble_and_solve(q, t, BasisSpec::shell(e, 40.0).doubled(), {false});
  for (int i = 0; i < a.size(); ++i) {
    if (!a.trusted[i]) continue;
    double best = 1e9;
    for (int k = 0; k < b.size(); ++k) best = std::min(best, std::abs(a.eigenvalues(i) - b.eigenvalues(k)));
    EXPECT_LT(best, 1e-8);
  }
}

TEST(Bands, GaugeCovariance) {
  Geometry s;
  auto q = FourierPotential::from_terms(s.dual, {{{1, 0}, 0.5}, {{0, 1}, 0.4}, {{1, 1}, {0.2, 0.3}}});
  Vec t = vec2(0.41, -0.23);
  auto a = assemble_and_solve(q, t, BasisSpec::full_ball(16.0), {false});
  auto b = assemble_and_solve(q, t + s.dual.to_cart({2, -1}), BasisSpec::full_ball(16.0), {false});
  for (int i = 0; i < 20; ++i) EXPECT_NEAR(a.eigenvalues(i), b.eigenvalues(i), 1e-9);
}

TEST(Bands, HellmannFeynmanMatchesFiniteDifference) {
  Geometry s;
  auto q = FourierPotential::from_terms(s.dual, {{{1, 0}, 0.5}, {{0, 1}, 0.4}, {{1, -1}, 0.3}});
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1, 1);
  int checked = 0;
  for (int trial = 0; trial < 10; ++trial) {
    Vec t = vec2(u(rng), u(rng));
    Vec h = vec2(u(rng), u(rng)).normalized();
    const double eps = 1e-5;
    auto spec = assemble_and_solve(q, t, BasisSpec::full_ball(14.0));
    auto p = assemble_and_solve(q, t + eps * h, BasisSpec::full_ball(14.0), {false});
    auto m = assemble_and_solve(q, t - eps * h, BasisSpec::full_ball(14.0), {false});
    for (int N = 0; N < 8; ++N) {
      if (!is_simple(spec, N, 1e-2)) continue;
      double fd = (p.eigenvalues(N) - m.eigenvalues(N)) / (2 * eps);
      double hf = band_derivative(spec, N, h, 1e-2);
      EXPECT_NEAR(hf, fd, 1e-6 * std::max(1.0, std::abs(fd)));
      ++checked;
    }
  }
  EXPECT_GE(checked, 20);
}

TEST(Bands, Errors) {
  Geometry s;
  auto q = FourierPotential::from_terms(s.dual, {});
  Vec t = vec2(-1.0, 0.0);
  auto spec = assemble_and_solve(q, t, BasisSpec::full_ball(6.0));
  // |t|^2 = |t + delta|^2 = 1 is doubly degenerate.
  EXPECT_THROW(band_derivative(spec, 0, vec2(1, 0), 1e-6), std::invalid_argument);
  EXPECT_THROW(match_eigenvalue(spec, 35.0, 1e-6), std::runtime_error);
  EXPECT_THROW(BasisSpec::full_ball(0), std::invalid_argument);
  BasisSpec big = BasisSpec::full_ball(1e4);
  big.max_dim = 100;
  EXPECT_THROW(make_basis(s.dual, t, big), BasisTooLarge);
}
