#include "protmeas/tsvf.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "engine.hpp"
#include "protmeas/composite.hpp"
#include "protmeas/errors.hpp"

namespace protmeas {

cplx weak_value(const Operator& a, const TwoStateVector& tsv) {
  if (a.dim() != tsv.forward().dim()) throw StructuralError("weak_value: operator does not match the state");
  const cplx ov = tsv.overlap();
  if (!(std::abs(ov) > kMinOverlap))
    throw DegenerateTwoStateVector("weak_value: vanishing overlap <phi|psi>");
  const cplx num = tsv.backward().amplitudes().dot(a.matrix() * tsv.forward().amplitudes());
  return num / ov;
}

ConditionalPointer postselect(const StateVector& composite, const Operator& projector, const Grid1D& pointer_grid,
                              std::size_t factor) {
  const auto& dims = composite.dims();
  if (dims.size() < 2 || factor == 0 || factor >= dims.size())
    throw StructuralError("postselect: composite needs a system factor and a pointer factor");
  if (projector.dim() != dims[0]) throw StructuralError("postselect: projector does not act on the system");
  if (dims[factor] != pointer_grid.size()) throw StructuralError("postselect: pointer grid size mismatch");
  const CMatrix& p = projector.matrix();
  if ((p * p - p).cwiseAbs().maxCoeff() > 1e-10 || !projector.is_hermitian())
    throw ContractViolation("postselect: outcome operator is not a projector");

  CVector amps = composite.amplitudes();
  composite::apply_system(amps, dims, p);
  const double prob = amps.squaredNorm();
  if (!(prob >= 1e-300)) throw ImpossiblePostselection("postselect: outcome probability below 1e-300");
  amps /= std::sqrt(prob);
  const StateVector conditioned(dims, std::move(amps));
  ConditionalPointer out;
  out.probability = prob;
  out.readout = readout(conditioned, factor, pointer_grid);
  out.momentum_mean = momentum_readout(conditioned, factor, pointer_grid);
  return out;
}

ConditionalPointer postselect(const StateVector& composite, const StateVector& outcome, const Grid1D& pointer_grid,
                              std::size_t factor) {
  return postselect(composite, Operator::projector(outcome.normalized()), pointer_grid, factor);
}

RVector finite_difference_velocity(const std::vector<double>& times, const RVector& values) {
  const auto n = static_cast<Eigen::Index>(times.size());
  if (values.size() != n) throw StructuralError("finite_difference_velocity: length mismatch");
  if (n < 2) throw ConfigurationError("finite_difference_velocity: need at least two samples");
  for (Eigen::Index i = 1; i < n; ++i)
    if (!(times[i] > times[i - 1]))
      throw ConfigurationError("finite_difference_velocity: times must increase strictly");
  RVector v(n);
  v[0] = (values[1] - values[0]) / (times[1] - times[0]);
  v[n - 1] = (values[n - 1] - values[n - 2]) / (times[n - 1] - times[n - 2]);
  for (Eigen::Index i = 1; i + 1 < n; ++i) {
    // Second-order centred difference on a possibly non-uniform grid.
    const double h0 = times[i] - times[i - 1];
    const double h1 = times[i + 1] - times[i];
    v[i] = (h0 * h0 * values[i + 1] - h1 * h1 * values[i - 1] + (h1 * h1 - h0 * h0) * values[i]) /
           (h0 * h1 * (h0 + h1));
  }
  return v;
}

std::vector<cplx> weak_value_trajectory(const Operator& a, const StateVector& psi0, const StateVector& outcome,
                                        const Operator& hamiltonian, double t_final,
                                        const std::vector<double>& times) {
  const Spectrum spec = spectrum(hamiltonian);
  std::vector<cplx> out;
  out.reserve(times.size());
  for (const double t : times) {
    const StateVector psi(psi0.dims(), propagator(spec, t) * psi0.amplitudes());
    const StateVector phi(outcome.dims(), propagator(spec, -(t_final - t)) * outcome.amplitudes());
    out.push_back(weak_value(a, TwoStateVector(psi, phi)));
  }
  return out;
}

double correlation(const RVector& a, const RVector& b) {
  if (a.size() != b.size() || a.size() < 2) throw StructuralError("correlation: need equal lengths >= 2");
  const RVector da = (a.array() - a.mean()).matrix();
  const RVector db = (b.array() - b.mean()).matrix();
  const double den = da.norm() * db.norm();
  if (!(den > 0.0)) return 0.0;
  return da.dot(db) / den;
}

SubensembleAnalysis subensemble_analysis(const StateVector& psi0, const ProtectionScheme& scheme,
                                         const CouplingSpec& target, const std::vector<StateVector>& family,
                                         const std::vector<std::string>& labels, std::size_t n_trials,
                                         const SubensembleOptions& options, Rng& rng) {
  const auto* hs = std::get_if<HamiltonianScheme>(&scheme);
  if (hs == nullptr) throw ContractViolation("subensemble_analysis: needs Hamiltonian protection");
  if (target.schedule != ScheduleKind::Continuous)
    throw ConfigurationError("subensemble_analysis: target must use a continuous schedule");
  target.validate();
  if (family.empty()) throw ConfigurationError("subensemble_analysis: empty postselection family");
  if (labels.size() != family.size()) throw ConfigurationError("subensemble_analysis: one label per outcome");
  if (n_trials < 1) throw ConfigurationError("subensemble_analysis: n_trials must be >= 1");
  const auto& times = options.sample_times;
  if (times.size() < 2) throw ConfigurationError("subensemble_analysis: need at least two sample times");
  if (!(options.t_final >= times.back()))
    throw ConfigurationError("subensemble_analysis: postselection must follow the last sample");
  const std::size_t ns = psi0.dim();
  if (hs->hamiltonian.dim() != ns || target.observable.dim() != ns)
    throw StructuralError("subensemble_analysis: operator sizes do not match the system");
  if (ns * options.pointer_grid.size() > kMaxCompositeDim)
    throw StructuralError("subensemble_analysis: composite exceeds 8192");
  if (eigenstate(hs->hamiltonian, hs->protected_index).fidelity(psi0.normalized()) < 1.0 - 1e-6)
    throw ContractViolation("subensemble_analysis: psi0 is not the protected eigenstate");

  const Spectrum spec = spectrum(hs->hamiltonian);
  const PointerState pointer = make_pointer(options.pointer_grid, options.delta);
  const std::vector<std::size_t> dims{ns, options.pointer_grid.size()};
  const composite::CouplingKernel kernel(target.observable, options.pointer_grid);
  const std::vector<const composite::CouplingKernel*> kernels{&kernel};
  const std::vector<const CouplingSpec*> specs{&target};
  detail::SystemPropagator prop(hs->hamiltonian);

  const auto nt = static_cast<Eigen::Index>(times.size());
  const std::size_t nf = family.size();
  CMatrix outcomes(static_cast<Eigen::Index>(ns), static_cast<Eigen::Index>(nf));
  for (std::size_t y = 0; y < nf; ++y) {
    if (family[y].dim() != ns) throw StructuralError("subensemble_analysis: outcome state size");
    outcomes.col(static_cast<Eigen::Index>(y)) = family[y].normalized().amplitudes();
  }
  const RVector x = options.pointer_grid.points();

  std::vector<RVector> means(nf, RVector::Zero(nt));
  std::vector<RVector> probs(nf, RVector::Zero(nt));
  RVector aggregate = RVector::Zero(nt);
  RVector unconditioned = RVector::Zero(nt);

  CVector amps = detail::attach_pointers(psi0.normalized().amplitudes(), pointer, 1);
  double t = std::min(target.t_on, times.front());
  for (Eigen::Index i = 0; i < nt; ++i) {
    detail::advance_continuous(amps, dims, kernels, specs, prop, t, times[i], options.dt);
    t = times[i];
    unconditioned[i] = detail::readout_momentum_held(amps, dims, 1, options.pointer_grid, t).mean;
    CVector snap = amps;
    composite::apply_system(snap, dims, propagator(spec, options.t_final - t));
    composite::to_position(snap, dims, 1);
    const Eigen::Map<const CMatrix> m(snap.data(), static_cast<Eigen::Index>(dims[1]),
                                      static_cast<Eigen::Index>(ns));
    const CMatrix cond = m * outcomes.conjugate();  // pointer amplitude per outcome
    double weight = 0.0;
    for (std::size_t y = 0; y < nf; ++y) {
      const RVector d = cond.col(static_cast<Eigen::Index>(y)).cwiseAbs2();
      const double p = d.sum();
      probs[y][i] = p;
      means[y][i] = p > 0.0 ? d.dot(x) / p : 0.0;
      aggregate[i] += d.dot(x);
      weight += p;
    }
    aggregate[i] /= weight;
  }

  // Trial counts drawn from the final-time outcome probabilities; trials
  // falling outside the family are discarded.
  std::vector<std::size_t> counts(nf, 0);
  for (std::size_t trial = 0; trial < n_trials; ++trial) {
    const double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t y = 0; y < nf; ++y) {
      acc += probs[y][nt - 1];
      if (u < acc) {
        ++counts[y];
        break;
      }
    }
  }

  SubensembleAnalysis out;
  out.unconditioned = unconditioned;
  RVector rate(nt);
  for (Eigen::Index i = 0; i < nt; ++i) rate[i] = target.rate(times[i]);
  for (std::size_t y = 0; y < nf; ++y) {
    if (counts[y] == 0) continue;
    SubensembleStats s;
    s.postselection_label = labels[y];
    s.outcome = y;
    s.count = counts[y];
    s.probability = probs[y][nt - 1];
    s.distortion = std::norm(family[y].normalized().inner(psi0.normalized()));
    s.times = times;
    s.means = means[y];
    s.velocity = finite_difference_velocity(times, s.means);
    s.predicted_velocity = RVector::Zero(nt);
    if (s.distortion > kMinOverlap * kMinOverlap) {
      const auto wv = weak_value_trajectory(target.observable, psi0.normalized(), family[y].normalized(),
                                            hs->hamiltonian, options.t_final, times);
      for (Eigen::Index i = 0; i < nt; ++i) s.predicted_velocity[i] = rate[i] * wv[static_cast<std::size_t>(i)].real();
    }
    s.mean_final = s.means[nt - 1];
    out.bins.push_back(std::move(s));
  }

  SubensembleStats& agg = out.aggregate;
  agg.postselection_label = "aggregate";
  agg.outcome = nf;
  agg.count = n_trials;
  agg.probability = 1.0;
  agg.distortion = 1.0;
  agg.times = times;
  agg.means = aggregate;
  agg.velocity = finite_difference_velocity(times, aggregate);
  agg.predicted_velocity = rate * expectation(psi0.normalized(), target.observable);
  agg.mean_final = aggregate[nt - 1];

  const double eps = target.total_strength() / static_cast<double>(times.size());
  out.backaction_metric = eps * eps * static_cast<double>(times.size());
  out.backaction_flag = out.backaction_metric > 0.01;
  return out;
}

}  // namespace protmeas
