#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "protmeas/errors.hpp"
#include "protmeas/grid.hpp"
#include "protmeas/pointer.hpp"
#include "protmeas/protection.hpp"
#include "protmeas/weak_measurement.hpp"

using namespace protmeas;

namespace {

Operator sigma_z() {
  RVector d(2);
  d << 1.0, -1.0;
  return Operator::diagonal(d);
}

}  // namespace

TEST(ZenoStep, EigenstateIsUntouched) {
  const ZenoScheme s = make_zeno_scheme(sigma_z(), 0.1, ZenoMode::Stochastic, StateVector::basis({2}, 1));
  Rng rng(1);
  const StateVector in = StateVector::basis({2}, 1);
  for (int k = 0; k < 100; ++k) {
    const ZenoStepResult r = zeno_step(in, s, rng);
    EXPECT_EQ(r.outcome, static_cast<int>(s.protected_outcome));
    EXPECT_NEAR(r.state.fidelity(in), 1.0, 1e-12);
  }
}

TEST(ZenoStep, FailureFrequencyMatchesComplementWeight) {
  const StateVector up = StateVector::basis({2}, 0);
  const ZenoScheme s = make_zeno_scheme(sigma_z(), 0.1, ZenoMode::Stochastic, up);
  CVector a(2);
  a << std::sqrt(0.99), std::sqrt(0.01);
  const StateVector in(a);
  Rng rng(2024);
  const int n = 100000;
  int fails = 0;
  for (int k = 0; k < n; ++k) {
    const ZenoStepResult r = zeno_step(in, s, rng);
    if (r.outcome != static_cast<int>(s.protected_outcome)) {
      ++fails;
      EXPECT_NEAR(r.state.fidelity(StateVector::basis({2}, 1)), 1.0, 1e-12);
    }
  }
  const double sigma = std::sqrt(0.01 * 0.99 / n);
  EXPECT_NEAR(static_cast<double>(fails) / n, 0.01, 3.0 * sigma);
}

TEST(ZenoStep, ActsOnSystemFactorOfComposite) {
  const Grid1D pg(64, -2.0, 2.0);
  const StateVector up = StateVector::basis({2}, 0);
  const ZenoScheme s = make_zeno_scheme(sigma_z(), 0.1, ZenoMode::Stochastic, up);
  const StateVector comp = tensor(up, make_pointer(pg, 0.2).state());
  Rng rng(3);
  const ZenoStepResult r = zeno_step(comp, s, rng);
  EXPECT_NEAR(r.state.fidelity(comp), 1.0, 1e-12);
}

TEST(ZenoStep, NonselectiveModeIsBlockDiagonalPart) {
  Rng rng(4);
  const CVector a = oracle::random_vector(rng, 3);
  RVector d(3);
  d << 0.0, 1.0, 2.0;
  const ZenoScheme s =
      make_zeno_scheme(Operator::diagonal(d), 0.1, ZenoMode::Nonselective, StateVector::basis({3}, 0));
  const ZenoMixedStepResult r = zeno_step(DensityMatrix::pure(StateVector(a)), s);
  EXPECT_EQ(r.outcome, -1);
  CMatrix expect = CMatrix::Zero(3, 3);
  for (int i = 0; i < 3; ++i) expect(i, i) = std::norm(a[i]);
  EXPECT_LT((r.state.matrix() - expect).cwiseAbs().maxCoeff(), 1e-14);
  Rng r2(5);
  EXPECT_THROW(zeno_step(StateVector(a), s, r2), ContractViolation);
}

TEST(ZenoScheme, Preconditions) {
  const StateVector up = StateVector::basis({2}, 0);
  EXPECT_THROW(make_zeno_scheme(sigma_z(), 0.0, ZenoMode::Stochastic, up), ConfigurationError);
  RVector d(3);
  d << 1.0, 1.0, 3.0;
  EXPECT_THROW(make_zeno_scheme(Operator::diagonal(d), 0.1, ZenoMode::Stochastic, StateVector::basis({3}, 0)),
               ProtectionImpossible);
  CVector plus(2);
  plus << 1.0, 1.0;
  EXPECT_THROW(make_zeno_scheme(sigma_z(), 0.1, ZenoMode::Stochastic, StateVector(plus).normalized()),
               ProtectionImpossible);
}

TEST(ZenoOutcomeLogTest, SurvivedIffAllProtected) {
  ZenoOutcomeLog log;
  log.record(0.1, 2, 2);
  log.record(0.2, 2, 2);
  EXPECT_TRUE(log.survived);
  log.record(0.3, 0, 2);
  log.record(0.4, 2, 2);
  EXPECT_FALSE(log.survived);
  EXPECT_EQ(log.outcomes.size(), 4u);
}

TEST(ComputeGap, OscillatorGroundState) {
  const Grid1D g(64, -8.0, 8.0);
  EXPECT_NEAR(compute_gap(spectral::oscillator(g, 1.0), 0), 1.0, 1e-6);
}

TEST(ComputeGap, DiagonalCases) {
  RVector d(2);
  d << 0.0, 5.0;
  EXPECT_DOUBLE_EQ(compute_gap(Operator::diagonal(d), 0), 5.0);
  RVector dd(3);
  dd << 1.0, 1.0, 3.0;
  EXPECT_THROW(compute_gap(Operator::diagonal(dd), 0), ProtectionImpossible);
  EXPECT_DOUBLE_EQ(compute_gap(Operator::diagonal(dd), 2), 2.0);
}

TEST(ComputeGap, ShiftInvarianceProperty) {
  Rng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const Operator h = Operator::hermitian(oracle::random_hermitian(rng, 6));
    const double c = 10.0 * (rng.uniform() - 0.5);
    const Operator shifted = h + Operator::identity(6).scaled(c);
    for (std::size_t k = 0; k < 6; ++k) EXPECT_NEAR(compute_gap(h, k), compute_gap(shifted, k), 1e-10);
  }
}

TEST(HamiltonianSchemeTest, GapMatchesSpectrum) {
  const Grid1D g(48, -7.0, 7.0);
  const Operator h = spectral::oscillator(g, 1.3);
  const HamiltonianScheme s = make_hamiltonian_scheme(h, 0);
  const Spectrum sp = spectrum(h);
  EXPECT_NEAR(s.gap, sp.values[1] - sp.values[0], 1e-10);
}

TEST(Envelope, ShapeAndMidpoints) {
  EXPECT_DOUBLE_EQ(adiabatic_envelope(5.0, 0.0, 10.0, 2.0), 1.0);
  EXPECT_DOUBLE_EQ(adiabatic_envelope(0.0, 0.0, 10.0, 2.0), 0.0);
  EXPECT_NEAR(adiabatic_envelope(1.0, 0.0, 10.0, 2.0), 0.5, 1e-15);
  EXPECT_NEAR(adiabatic_envelope(9.0, 0.0, 10.0, 2.0), 0.5, 1e-15);
  EXPECT_DOUBLE_EQ(adiabatic_envelope(-1.0, 0.0, 10.0, 2.0), 0.0);
  EXPECT_DOUBLE_EQ(adiabatic_envelope(11.0, 0.0, 10.0, 2.0), 0.0);
}

TEST(Envelope, IntegralMatchesQuadrature) {
  const double t_on = 1.0, t_off = 26.0, ramp = 5.0;
  // Composite Simpson on a fine grid.
  auto simpson = [&](double a, double b) {
    const int n = 200000;
    const double h = (b - a) / n;
    double s = adiabatic_envelope(a, t_on, t_off, ramp) + adiabatic_envelope(b, t_on, t_off, ramp);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * adiabatic_envelope(a + i * h, t_on, t_off, ramp);
    return s * h / 3.0;
  };
  EXPECT_NEAR(adiabatic_envelope_integral(t_off, t_on, t_off, ramp), t_off - t_on - ramp, 1e-12);
  EXPECT_NEAR(simpson(t_on, t_off), t_off - t_on - ramp, 1e-9);
  for (const double t : {2.3, 6.0, 13.7, 23.1, 25.9})
    EXPECT_NEAR(adiabatic_envelope_integral(t, t_on, t_off, ramp), simpson(t_on, t), 1e-9);
}

TEST(TwoStateVectorTest, RejectsOrthogonalPair) {
  EXPECT_THROW(TwoStateVector(StateVector::basis({2}, 0), StateVector::basis({2}, 1)), DegenerateTwoStateVector);
}

TEST(EvolveTwoState, HermitianEigenpairUnchanged) {
  Rng rng(7);
  const Operator h = Operator::hermitian(oracle::random_hermitian(rng, 4));
  const StateVector e = eigenstate(h, 2);
  const EffectiveComplexScheme s = make_effective_complex_scheme(h);
  const TwoStateVector out = evolve_two_state(TwoStateVector(e, e), s, 37.0);
  EXPECT_NEAR(out.forward().fidelity(e), 1.0, 1e-10);
  EXPECT_NEAR(out.backward().fidelity(e), 1.0, 1e-10);
}

TEST(EvolveTwoState, HermitianProtectsSameSetBothWays) {
  // For Hermitian H the backward map exp(+iHt) is the forward map run in
  // reverse, so any state held forward is also held backward.
  Rng rng(8);
  const Operator h = Operator::hermitian(oracle::random_hermitian(rng, 4));
  const EffectiveComplexScheme s = make_effective_complex_scheme(h);
  for (std::size_t k = 0; k < 4; ++k) {
    const StateVector e = eigenstate(h, k);
    const StateVector other = StateVector(oracle::random_vector(rng, 4));
    const TwoStateVector out = evolve_two_state(TwoStateVector(e, other), s, 5.0);
    EXPECT_NEAR(out.forward().fidelity(e), 1.0, 1e-10);
  }
}

TEST(EvolveTwoState, MatchesBiorthogonalOracle) {
  Rng rng(9);
  const Eigen::Index n = 4;
  CMatrix r = CMatrix::Identity(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < n; ++k) r(i, k) += 0.5 * oracle::gauss(rng);
  const CMatrix rinv = r.inverse();
  CVector lam(n);
  lam << cplx(1.0, 0.0), cplx(2.0, -0.5), cplx(3.0, -0.8), cplx(0.5, -1.0);
  const CMatrix h = r * lam.asDiagonal() * rinv;
  const StateVector psi(oracle::random_vector(rng, n));
  const StateVector phi(oracle::random_vector(rng, n));
  const double t = 3.3;
  const TwoStateVector out = evolve_two_state(TwoStateVector(psi, phi), make_effective_complex_scheme(Operator::general(h)), t);
  // exp(-iHt) = R exp(-i Lambda t) R^-1 straight from the eigensystem.
  CVector ph(n);
  for (Eigen::Index k = 0; k < n; ++k) ph[k] = std::exp(cplx(0.0, -t) * lam[k]);
  const CMatrix u = r * ph.asDiagonal() * rinv;
  const CVector f = (u * psi.amplitudes()).normalized();
  const CVector b = (u.adjoint() * phi.amplitudes()).normalized();
  EXPECT_NEAR(std::abs(f.dot(out.forward().amplitudes())), 1.0, 1e-10);
  EXPECT_NEAR(std::abs(b.dot(out.backward().amplitudes())), 1.0, 1e-10);
}

TEST(EvolveTwoState, NonHermitianHoldsDistinctPair) {
  Rng rng(10);
  const Eigen::Index n = 4;
  CMatrix r = CMatrix::Identity(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < n; ++k) r(i, k) += 0.8 * oracle::gauss(rng);
  const CMatrix rinv = r.inverse();
  CVector lam(n);
  lam << cplx(1.0, 0.0), cplx(2.0, -0.5), cplx(3.0, -0.8), cplx(0.5, -1.0);
  const EffectiveComplexScheme s = make_effective_complex_scheme(Operator::general(r * lam.asDiagonal() * rinv));
  const StateVector psi0 = StateVector(CVector(r.col(0))).normalized();
  const StateVector phi0 = StateVector(CVector(rinv.row(0).adjoint())).normalized();
  ASSERT_LT(psi0.fidelity(phi0), 0.95);  // genuinely distinct
  const TwoStateVector out = evolve_two_state(TwoStateVector(psi0, phi0), s, 100.0 / 0.5);
  EXPECT_GT(out.forward().fidelity(psi0), 0.99);
  EXPECT_GT(out.backward().fidelity(phi0), 0.99);
  // A generic start is attracted to the same pair.
  const TwoStateVector gen(StateVector(oracle::random_vector(rng, n)), StateVector(oracle::random_vector(rng, n)));
  const TwoStateVector out2 = evolve_two_state(gen, s, 100.0 / 0.5);
  EXPECT_GT(out2.forward().fidelity(psi0), 0.99);
  EXPECT_GT(out2.backward().fidelity(phi0), 0.99);
}

TEST(EvolveTwoState, RejectsOtherSchemes) {
  const ProtectionScheme z = make_zeno_scheme(sigma_z(), 0.1, ZenoMode::Stochastic, StateVector::basis({2}, 0));
  const TwoStateVector tsv(StateVector::basis({2}, 0), StateVector::basis({2}, 0));
  EXPECT_THROW(evolve_two_state(tsv, z, 1.0), ContractViolation);
}

TEST(ZenoSurvival, EpsilonOneHundredthMatchesClosedForm) {
  const SurvivalResult r = zeno_survival(0.01, 0.1, 10000, 99, 2);
  const double closed = std::pow(1.0 - 0.01, 100);
  EXPECT_NEAR(r.predicted, closed, 1e-15);
  EXPECT_NEAR(r.branch_probability, closed, 1e-12);
  const double sigma = std::sqrt(closed * (1.0 - closed) / 1e4);
  EXPECT_NEAR(static_cast<double>(r.survived) / 1e4, closed, 3.0 * sigma);
}

TEST(ZenoSurvival, SmallEpsilonRegime) {
  const SurvivalResult r = zeno_survival(1e-3, 0.1, 10000, 123, 2);
  EXPECT_GE(r.branch_probability, 0.90);
  const double sigma = std::sqrt(r.predicted * (1.0 - r.predicted) / 1e4);
  EXPECT_NEAR(static_cast<double>(r.survived) / 1e4, r.predicted, 3.0 * sigma);
}

TEST(ZenoSurvival, MonotoneInEpsilon) {
  double last = 0.0;
  for (const double eps : {0.05, 0.02, 0.01, 0.005}) {
    const SurvivalResult r = zeno_survival(eps, 0.1, 2000, 77, 1);
    EXPECT_GT(r.branch_probability, last);
    last = r.branch_probability;
  }
}

TEST(ZenoSurvival, IndependentOfThreadCount) {
  const SurvivalResult a = zeno_survival(0.02, 0.1, 3000, 5, 1);
  const SurvivalResult b = zeno_survival(0.02, 0.1, 3000, 5, 3);
  EXPECT_EQ(a.survived, b.survived);
}

// Zeno limit: a qubit held in |0> against a drive 5 sigma_x over T = 1;
// shorter measurement periods give higher survival.
TEST(ZenoLimit, SurvivalRisesAsPeriodShrinks) {
  const StateVector up = StateVector::basis({2}, 0);
  CMatrix sx(2, 2);
  sx << 0.0, 5.0, 5.0, 0.0;
  const Operator drive = Operator::hermitian(sx);
  std::vector<double> freq;
  for (const int steps : {10, 100, 1000}) {
    const double tau = 1.0 / steps;
    const ZenoScheme s = make_zeno_scheme(sigma_z(), tau, ZenoMode::Stochastic, up);
    const CMatrix u = propagator(drive, tau);
    Rng rng(100 + static_cast<std::uint64_t>(steps));
    int survived = 0;
    const int trials = 2000;
    for (int t = 0; t < trials; ++t) {
      StateVector psi = up;
      bool ok = true;
      for (int k = 0; k < steps && ok; ++k) {
        const ZenoStepResult r = zeno_step(StateVector(CVector(u * psi.amplitudes())), s, rng);
        ok = r.outcome == static_cast<int>(s.protected_outcome);
        psi = r.state;
      }
      survived += ok ? 1 : 0;
    }
    freq.push_back(static_cast<double>(survived) / trials);
  }
  EXPECT_LT(freq[0], freq[1]);
  EXPECT_LT(freq[1], freq[2]);
  EXPECT_GT(freq[2], 0.95);  // (cos^2 0.005)^1000 = 0.975
}

// Nonselective evolution is the trial average of stochastic trajectories, so
// pointer means agree statistically.
TEST(ZenoModes, StochasticAverageMatchesNonselective) {
  const Grid1D pg(64, -2.0, 2.0);
  const StateVector up = StateVector::basis({2}, 0);
  CMatrix am(2, 2);
  am << 1.0, 0.5, 0.5, 0.0;
  const Operator a = Operator::hermitian(am);
  const CouplingSpec spec = impulsive_coupling(a, 0.1, 10);
  const ZenoScheme stoch = make_zeno_scheme(sigma_z(), 0.1, ZenoMode::Stochastic, up);
  const ZenoScheme mixed = make_zeno_scheme(sigma_z(), 0.1, ZenoMode::Nonselective, up);
  const StateVector start = tensor(up, make_pointer(pg, 0.2).state());

  DensityMatrix rho = DensityMatrix::pure(start);
  for (int k = 0; k < 10; ++k) rho = zeno_step(couple_weak(rho, spec, pg, 0.1), mixed).state;
  const RVector marg = partial_trace(rho, 1).matrix().diagonal().real();
  const double mean_mixed = readout_distribution(marg, pg, 0.0).mean;

  Rng rng(2718);
  const int trials = 10000;
  double sum = 0.0, sum2 = 0.0;
  int failures = 0;
  for (int t = 0; t < trials; ++t) {
    StateVector s = start;
    for (int k = 0; k < 10; ++k) {
      const ZenoStepResult r = zeno_step(couple_weak(s, spec, pg, 0.1), stoch, rng);
      failures += r.outcome != static_cast<int>(stoch.protected_outcome);
      s = r.state;
    }
    const double m = readout(s, 1, pg).mean;
    sum += m;
    sum2 += m * m;
  }
  ASSERT_GT(failures, 100);  // both branches are sampled
  const double mean = sum / trials;
  const double sem = std::sqrt((sum2 / trials - mean * mean) / trials);
  EXPECT_NEAR(mean, mean_mixed, 3.0 * sem);
}
