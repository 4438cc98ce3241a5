#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "protmeas/errors.hpp"
#include "protmeas/grid.hpp"
#include "protmeas/pointer.hpp"
#include "protmeas/protection.hpp"
#include "protmeas/tsvf.hpp"
#include "protmeas/weak_measurement.hpp"

using namespace protmeas;

namespace {

StateVector vec2(double a, double b) {
  CVector v(2);
  v << a, b;
  return StateVector(v).normalized();
}

}  // namespace

TEST(WeakValue, EqualsExpectationWhenPostIsPre) {
  Rng rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    const StateVector psi(oracle::random_vector(rng, 5));
    const Operator a = Operator::hermitian(oracle::random_hermitian(rng, 5));
    const cplx w = weak_value(a, TwoStateVector(psi, psi));
    EXPECT_NEAR(w.real(), expectation(psi, a), 1e-12);
    EXPECT_NEAR(w.imag(), 0.0, 1e-12);
  }
}

TEST(WeakValue, ProjectorExamples) {
  const Operator pa = Operator::basis_projector(2, 0);
  const StateVector psi = vec2(1.0, 1.0);
  EXPECT_NEAR(std::abs(weak_value(pa, TwoStateVector(psi, vec2(1.0, 0.0))) - 1.0), 0.0, 1e-15);
  const cplx w = weak_value(pa, TwoStateVector(psi, vec2(2.0, -1.0)));
  EXPECT_NEAR(w.real(), 2.0, 1e-14);
  EXPECT_NEAR(w.imag(), 0.0, 1e-14);
}

TEST(WeakValue, LinearityProperty) {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const TwoStateVector tsv(StateVector(oracle::random_vector(rng, 4)), StateVector(oracle::random_vector(rng, 4)));
    const Operator a = Operator::hermitian(oracle::random_hermitian(rng, 4));
    const Operator b = Operator::hermitian(oracle::random_hermitian(rng, 4));
    const double x = rng.uniform() * 4 - 2, y = rng.uniform() * 4 - 2;
    const cplx lhs = weak_value(a.scaled(x) + b.scaled(y), tsv);
    const cplx rhs = x * weak_value(a, tsv) + y * weak_value(b, tsv);
    EXPECT_LT(std::abs(lhs - rhs), 1e-12 * std::max(1.0, std::abs(lhs)));
  }
}

TEST(WeakValue, ResolutionOfIdentitySumsToOne) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const TwoStateVector tsv(StateVector(oracle::random_vector(rng, 6)), StateVector(oracle::random_vector(rng, 6)));
    cplx sum = 0.0;
    for (std::size_t k = 0; k < 6; ++k) sum += weak_value(Operator::basis_projector(6, k), tsv);
    EXPECT_LT(std::abs(sum - 1.0), 1e-10);
    // Also for a rotated complete family.
    const Spectrum s = spectrum(Operator::hermitian(oracle::random_hermitian(rng, 6)));
    sum = 0.0;
    for (Eigen::Index k = 0; k < 6; ++k) sum += weak_value(Operator::projector(StateVector(CVector(s.vectors.col(k)))), tsv);
    EXPECT_LT(std::abs(sum - 1.0), 1e-10);
  }
}

TEST(Postselect, IdentityGivesReducedPointer) {
  Rng rng(4);
  const Grid1D pg(128, -2.0, 2.0);
  const Operator a = Operator::hermitian(oracle::random_hermitian(rng, 3));
  const StateVector comp = couple_weak(tensor(StateVector(oracle::random_vector(rng, 3)), make_pointer(pg, 0.1).state()),
                                       impulsive_coupling(a, 0.05, 1), pg, 0.05);
  const ConditionalPointer cp = postselect(comp, Operator::identity(3), pg);
  EXPECT_NEAR(cp.probability, 1.0, 1e-12);
  const PointerReadout r = readout(comp, 1, pg);
  EXPECT_LT((cp.readout.distribution - r.distribution).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Postselect, ProductStateLeavesPointerUnchanged) {
  Rng rng(5);
  const Grid1D pg(128, -2.0, 2.0);
  const PointerState p = make_pointer(pg, 0.1).displaced(0.3);
  const StateVector comp = tensor(StateVector(oracle::random_vector(rng, 3)), p.state());
  for (std::size_t k = 0; k < 3; ++k) {
    const ConditionalPointer cp = postselect(comp, StateVector::basis({3}, k), pg);
    EXPECT_NEAR(cp.readout.mean, 0.3, 1e-8);
    EXPECT_NEAR(cp.readout.variance, 0.01, 1e-6);
  }
}

TEST(Postselect, RejectsImpossibleAndNonProjector) {
  const Grid1D pg(64, -2.0, 2.0);
  const StateVector comp = tensor(StateVector::basis({2}, 0), make_pointer(pg, 0.2).state());
  EXPECT_THROW(postselect(comp, StateVector::basis({2}, 1), pg), ImpossiblePostselection);
  EXPECT_THROW(postselect(comp, Operator::identity(2).scaled(0.5), pg), ContractViolation);
}

// Weak-coupling simulation vs the formula: the conditional pointer position
// gives eps Re A_w and the momentum gives eps Im A_w / (2 delta^2), both
// with second-order estimator error.
TEST(Postselect, RandomTriplesMatchWeakValueFormula) {
  Rng rng(6);
  const Grid1D pg(256, -4.0, 4.0);
  const double delta = 0.1;
  int triples = 0;
  while (triples < 10) {
    const StateVector psi(oracle::random_vector(rng, 3));
    const StateVector phi(oracle::random_vector(rng, 3));
    if (std::abs(phi.inner(psi)) < 0.3) continue;
    ++triples;
    const Operator a = Operator::hermitian(oracle::random_hermitian(rng, 3));
    const cplx w = weak_value(a, TwoStateVector(psi, phi));
    std::vector<double> eps{1e-2, 3e-3, 1e-3}, err_re, err_im;
    for (const double e : eps) {
      const StateVector out =
          couple_weak(tensor(psi, make_pointer(pg, delta).state()), impulsive_coupling(a, e, 1), pg, e);
      const ConditionalPointer cp = postselect(out, phi, pg);
      err_re.push_back(std::abs(cp.readout.mean / e - w.real()));
      err_im.push_back(std::abs(cp.momentum_mean * 2.0 * delta * delta / e - w.imag()));
    }
    EXPECT_LT(err_re.back(), 1e-3 * std::max(1.0, std::abs(w)));
    EXPECT_LT(err_im.back(), 1e-3 * std::max(1.0, std::abs(w)));
    EXPECT_NEAR(oracle::log_slope(eps, err_re), 2.0, 0.1) << "triple " << triples;
    EXPECT_NEAR(oracle::log_slope(eps, err_im), 2.0, 0.1) << "triple " << triples;
  }
}

TEST(Postselect, AnomalousWeakValueTwo) {
  const Grid1D pg(256, -1.0, 1.0);
  const double eps = 1e-3;
  const StateVector out = couple_weak(tensor(vec2(1.0, 1.0), make_pointer(pg, 0.1).state()),
                                      impulsive_coupling(Operator::basis_projector(2, 0), eps, 1), pg, eps);
  const ConditionalPointer cp = postselect(out, vec2(2.0, -1.0), pg);
  EXPECT_NEAR(cp.readout.mean / eps, 2.0, 0.1);
  EXPECT_NEAR(cp.probability, 0.1, 1e-4);  // |<phi|psi>|^2 = 1/10
}

TEST(Postselect, TotalProbabilityIdentity) {
  Rng rng(7);
  const Grid1D pg(128, -2.0, 2.0);
  const Operator a = Operator::hermitian(oracle::random_hermitian(rng, 4));
  const StateVector out = couple_weak(tensor(StateVector(oracle::random_vector(rng, 4)), make_pointer(pg, 0.1).state()),
                                      impulsive_coupling(a, 0.2, 1), pg, 0.2);
  double weighted = 0.0, total = 0.0;
  for (std::size_t k = 0; k < 4; ++k) {
    const ConditionalPointer cp = postselect(out, StateVector::basis({4}, k), pg);
    weighted += cp.probability * cp.readout.mean;
    total += cp.probability;
  }
  EXPECT_NEAR(total, 1.0, 1e-12);
  EXPECT_NEAR(weighted, readout(out, 1, pg).mean, 1e-10);
}

TEST(FiniteDifference, ExactForQuadraticsOnUnevenGrid) {
  const std::vector<double> t{0.0, 0.1, 0.25, 0.3, 0.55, 0.6};
  RVector v(6);
  for (int i = 0; i < 6; ++i) v[i] = 3.0 * t[i] * t[i] - t[i] + 2.0;
  const RVector d = finite_difference_velocity(t, v);
  for (int i = 1; i < 5; ++i) EXPECT_NEAR(d[i], 6.0 * t[i] - 1.0, 1e-12);
  EXPECT_THROW(finite_difference_velocity({0.0, 0.0, 1.0}, RVector::Zero(3)), ConfigurationError);
}

TEST(WeakValueTrajectory, EndsAtTheOutcome) {
  Rng rng(8);
  const Operator h = Operator::hermitian(oracle::random_hermitian(rng, 4));
  const StateVector psi0(oracle::random_vector(rng, 4));
  const StateVector y(oracle::random_vector(rng, 4));
  const Operator a = Operator::basis_projector(4, 1);
  const double t_final = 2.0;
  const auto w = weak_value_trajectory(a, psi0, y, h, t_final, {0.5, 2.0});
  const StateVector psi_t = evolve_dense(psi0, h, 2.0);
  EXPECT_LT(std::abs(w[1] - weak_value(a, TwoStateVector(psi_t, y))), 1e-10);
  // At t = 0.5 the backward state is U(1.5)^dagger y.
  const StateVector phi(CVector(oracle::expm(h.matrix(), 1.5).adjoint() * y.amplitudes()));
  EXPECT_LT(std::abs(w[0] - weak_value(a, TwoStateVector(evolve_dense(psi0, h, 0.5), phi))), 1e-10);
}

namespace {

struct SmallSetup {
  Grid1D grid{16, -5.0, 5.0};
  Operator h = spectral::oscillator(grid, 1.0);
  StateVector psi = eigenstate(h, 0);
  std::size_t j = 8;
  CouplingSpec target = continuous_coupling(Operator::basis_projector(16, 8), 0.25, 0.0, 10.0, 1.0, "x8");
  SubensembleOptions opts;
  SmallSetup() {
    opts.pointer_grid = Grid1D(256, -3.0, 3.0);
    opts.delta = 0.1;
    opts.dt = 0.02;
    opts.t_final = 10.0;
    for (int i = 1; i <= 200; ++i) opts.sample_times.push_back(0.05 * i);
  }
};

RVector flat_part(const SmallSetup& s, const RVector& v) {
  std::vector<double> out;
  for (std::size_t i = 0; i < s.opts.sample_times.size(); ++i)
    if (s.opts.sample_times[i] >= 1.0 && s.opts.sample_times[i] <= 9.0) out.push_back(v[static_cast<Eigen::Index>(i)]);
  return Eigen::Map<RVector>(out.data(), static_cast<Eigen::Index>(out.size()));
}

}  // namespace

TEST(Subensemble, PreselectionGivesConstantVelocity) {
  const SmallSetup s;
  Rng rng(9);
  const auto a = subensemble_analysis(s.psi, make_hamiltonian_scheme(s.h, 0), s.target, {s.psi}, {"psi"}, 100,
                                      s.opts, rng);
  ASSERT_EQ(a.bins.size(), 1u);
  const RVector v = flat_part(s, a.bins[0].velocity);
  EXPECT_LT((v.array() - v.mean()).abs().maxCoeff() / v.mean(), 0.05);
  const double q = std::norm(s.psi[s.j]);
  EXPECT_NEAR(a.bins[0].mean_final / 0.25, q, 0.01 * q);
  EXPECT_EQ(a.bins[0].count, 100u);
}

TEST(Subensemble, PositionBinsFollowWeakValueAndAggregateIsUnconditioned) {
  const SmallSetup s;
  std::vector<StateVector> fam;
  std::vector<std::string> labels;
  for (std::size_t y = 0; y < 16; ++y) {
    fam.push_back(StateVector::basis({16}, y));
    labels.push_back("y" + std::to_string(y));
  }
  Rng rng(10);
  const auto a = subensemble_analysis(s.psi, make_hamiltonian_scheme(s.h, 0), s.target, fam, labels, 5000, s.opts, rng);
  int scored = 0;
  std::size_t counted = 0;
  for (const auto& b : a.bins) {
    EXPECT_GE(b.count, 1u);
    counted += b.count;
    if (b.distortion < 0.01) continue;
    ++scored;
    const RVector v = flat_part(s, b.velocity);
    EXPECT_GT((v.array() - v.mean()).abs().maxCoeff() / std::abs(v.mean()), 0.05) << b.postselection_label;
    EXPECT_GT(correlation(v, flat_part(s, b.predicted_velocity)), 0.9) << b.postselection_label;
  }
  EXPECT_GT(scored, 3);
  EXPECT_LE(counted, 5000u);
  EXPECT_LT((a.aggregate.means - a.unconditioned).cwiseAbs().maxCoeff(), 1e-10);
  const RVector va = flat_part(s, a.aggregate.velocity);
  EXPECT_LT((va.array() - va.mean()).abs().maxCoeff() / va.mean(), 0.05);
  EXPECT_FALSE(a.backaction_flag);
}

TEST(Subensemble, RejectsNonHamiltonianScheme) {
  const SmallSetup s;
  Rng rng(11);
  const ProtectionScheme z = make_zeno_scheme(s.h, 0.01, ZenoMode::Stochastic, s.psi);
  EXPECT_THROW(subensemble_analysis(s.psi, z, s.target, {s.psi}, {"psi"}, 10, s.opts, rng), ContractViolation);
}

TEST(Correlation, Basics) {
  RVector a(4), b(4);
  a << 1, 2, 3, 4;
  b << 2, 4, 6, 8;
  EXPECT_NEAR(correlation(a, b), 1.0, 1e-15);
  EXPECT_NEAR(correlation(a, -b), -1.0, 1e-15);
}
