#include "protmeas/weak_measurement.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>
#include <utility>

#include "engine.hpp"
#include "protmeas/composite.hpp"
#include "protmeas/errors.hpp"

namespace protmeas {

// ---------------------------------------------------------------------------
// CouplingSpec

double CouplingSpec::peak_rate() const {
  if (schedule != ScheduleKind::Continuous) return 0.0;
  return strength / (t_off - t_on - ramp);
}

double CouplingSpec::rate(double t) const {
  return peak_rate() * adiabatic_envelope(t, t_on, t_off, ramp);
}

double CouplingSpec::integrated(double t0, double t1) const {
  return peak_rate() * (adiabatic_envelope_integral(t1, t_on, t_off, ramp) -
                        adiabatic_envelope_integral(t0, t_on, t_off, ramp));
}

double CouplingSpec::total_strength() const {
  if (schedule == ScheduleKind::Impulsive) return strength * static_cast<double>(pulses);
  return integrated(t_on, t_off);
}

void CouplingSpec::validate() const {
  if (!observable.is_hermitian()) throw ContractViolation("CouplingSpec: observable must be Hermitian");
  if (!(strength > 0.0) || !std::isfinite(strength))
    throw ConfigurationError("CouplingSpec: strength must be positive");
  if (schedule == ScheduleKind::Impulsive) {
    if (pulses < 1) throw ConfigurationError("CouplingSpec: impulsive schedule needs at least one pulse");
    return;
  }
  if (!(ramp >= 0.0) || !(t_off - t_on - 2.0 * ramp > 0.0))
    throw ConfigurationError("CouplingSpec: continuous window has no flat part");
  const double total = total_strength();
  if (std::abs(total - strength) > 1e-9 * std::max(1.0, strength))
    throw NumericalIntegrityError("CouplingSpec: envelope integral does not match strength");
}

CouplingSpec impulsive_coupling(Operator observable, double epsilon, std::size_t pulses, std::string label) {
  const std::size_t n = pulses > 0 ? pulses : static_cast<std::size_t>(std::llround(1.0 / epsilon));
  CouplingSpec spec{std::move(observable), epsilon, ScheduleKind::Impulsive, n, 0.0, 0.0, 0.0, std::move(label)};
  spec.validate();
  return spec;
}

CouplingSpec continuous_coupling(Operator observable, double strength, double t_on, double t_off,
                                 double ramp, std::string label) {
  CouplingSpec spec{std::move(observable), strength, ScheduleKind::Continuous, 0, t_on, t_off, ramp,
                    std::move(label)};
  spec.validate();
  return spec;
}

// ---------------------------------------------------------------------------
// Single couplings

StateVector couple_weak(const StateVector& composite, const CouplingSpec& spec, const Grid1D& pointer_grid,
                        double g, std::size_t factor) {
  if (composite.dims().size() < 2 || factor == 0 || factor >= composite.dims().size())
    throw StructuralError("couple_weak: composite needs a system factor and a pointer factor");
  if (spec.observable.dim() != composite.dims()[0])
    throw StructuralError("couple_weak: observable does not match system factor");
  const composite::CouplingKernel kernel(spec.observable, pointer_grid);
  CVector amps = composite.amplitudes();
  kernel.apply(amps, composite.dims(), factor, g);
  return StateVector(composite.dims(), std::move(amps));
}

DensityMatrix couple_weak(const DensityMatrix& composite, const CouplingSpec& spec, const Grid1D& pointer_grid,
                          double g, std::size_t factor) {
  const auto& dims = composite.dims();
  if (dims.size() < 2 || factor == 0 || factor >= dims.size())
    throw StructuralError("couple_weak: composite needs a system factor and a pointer factor");
  if (spec.observable.dim() != dims[0])
    throw StructuralError("couple_weak: observable does not match system factor");
  const composite::CouplingKernel kernel(spec.observable, pointer_grid);
  const Eigen::Index n = static_cast<Eigen::Index>(composite.dim());
  // U rho, then U (U rho)^dagger = U rho U^dagger.
  CMatrix m = composite.matrix();
  for (int pass = 0; pass < 2; ++pass) {
    for (Eigen::Index c = 0; c < n; ++c) {
      CVector col = m.col(c);
      kernel.apply(col, dims, factor, g);
      m.col(c) = col;
    }
    m = m.adjoint().eval();
  }
  m = 0.5 * (m + m.adjoint()).eval();
  return DensityMatrix(dims, std::move(m));
}

// ---------------------------------------------------------------------------
// Engine internals

namespace detail {

SystemPropagator::SystemPropagator(const Operator& h) : static_(spectrum(h)) {}

SystemPropagator::SystemPropagator(HamiltonianSource h) : source_(std::move(h)) {}

const CMatrix* SystemPropagator::get(double t_mid, double tau) {
  if (trivial()) return nullptr;
  if (static_) {
    if (!have_cache_ || cached_tau_ != tau) {
      cache_ = propagator(*static_, tau);
      cached_tau_ = tau;
      have_cache_ = true;
    }
    return &cache_;
  }
  if (!have_cache_ || cached_tau_ != tau || cached_t_ != t_mid) {
    const Operator h = source_(t_mid);
    if (!h.is_hermitian()) throw ContractViolation("SystemPropagator: H(t) must be Hermitian");
    cache_ = propagator(h, tau);
    cached_tau_ = tau;
    cached_t_ = t_mid;
    have_cache_ = true;
  }
  return &cache_;
}

CVector attach_pointers(const CVector& system, const PointerState& pointer, std::size_t k) {
  CVector pk = spectral::fft(pointer.amplitudes());
  pk /= std::sqrt(static_cast<double>(pk.size()));  // unitary, as in composite::to_momentum
  CVector amps = system;
  for (std::size_t i = 0; i < k; ++i) {
    CVector next(amps.size() * pk.size());
    for (Eigen::Index a = 0; a < amps.size(); ++a) next.segment(a * pk.size(), pk.size()) = amps[a] * pk;
    amps = std::move(next);
  }
  return amps;
}

void advance_continuous(CVector& amps, const std::vector<std::size_t>& dims,
                        const std::vector<const composite::CouplingKernel*>& kernels,
                        const std::vector<const CouplingSpec*>& specs, SystemPropagator& prop, double t0,
                        double t1, double dt) {
  if (!(t1 > t0)) return;
  const auto steps = static_cast<std::size_t>(std::ceil((t1 - t0) / dt - 1e-9));
  const double h = (t1 - t0) / static_cast<double>(std::max<std::size_t>(steps, 1));
  for (std::size_t s = 0; s < std::max<std::size_t>(steps, 1); ++s) {
    const double a = t0 + static_cast<double>(s) * h;
    const double b = (s + 1 == steps) ? t1 : a + h;
    const double mid = 0.5 * (a + b);
    const CMatrix* half = prop.get(mid, 0.5 * (b - a));
    if (half) composite::apply_system(amps, dims, *half);
    for (std::size_t k = 0; k < kernels.size(); ++k) {
      const double g = specs[k]->integrated(a, b);
      if (g != 0.0) kernels[k]->apply_momentum(amps, dims, k + 1, g);
    }
    if (half) composite::apply_system(amps, dims, *half);
    const double n = amps.norm();
    if (std::abs(n - 1.0) > kStepNormDrift)
      throw NumericalIntegrityError("advance_continuous: norm drift " + std::to_string(n - 1.0));
    amps /= n;
  }
}

PointerReadout readout_momentum_held(const CVector& amps, const std::vector<std::size_t>& dims,
                                     std::size_t factor, const Grid1D& grid, double time) {
  CVector pos = amps;
  composite::to_position(pos, dims, factor);
  return readout_distribution(composite::marginal(pos, dims, factor), grid, time);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Protective runs

namespace {

enum class Mode { Zeno, Hamiltonian, Free };

struct BatchResult {
  std::vector<ProtectiveRunRecord> records;
  CVector system_out;
};

std::vector<std::vector<double>> sample_times_continuous(const std::vector<const CouplingSpec*>& specs,
                                                         std::size_t samples) {
  std::vector<std::vector<double>> out;
  for (const auto* s : specs) {
    std::vector<double> ts;
    for (std::size_t i = 0; i < samples; ++i) {
      ts.push_back(i + 1 == samples ? s->t_off
                                    : s->t_on + (s->t_off - s->t_on) * static_cast<double>(i + 1) /
                                                    static_cast<double>(samples));
    }
    out.push_back(std::move(ts));
  }
  return out;
}

std::vector<std::vector<std::size_t>> sample_pulses(const std::vector<const CouplingSpec*>& specs,
                                                    std::size_t samples) {
  std::vector<std::vector<std::size_t>> out;
  for (const auto* s : specs) {
    std::set<std::size_t> ns;
    for (std::size_t i = 0; i < samples; ++i)
      ns.insert(std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(
                                             static_cast<double>(s->pulses) * static_cast<double>(i + 1) /
                                             static_cast<double>(samples)))));
    out.emplace_back(ns.begin(), ns.end());
  }
  return out;
}

double system_fidelity(const CVector& amps, const std::vector<std::size_t>& dims, const CVector& reference) {
  const CMatrix rho = composite::system_density(amps, dims);
  const double tr = rho.trace().real();
  return std::clamp((reference.adjoint() * rho * reference)(0, 0).real() / tr, 0.0, 1.0);
}

BatchResult run_batch(const CVector& system_in, Mode mode, const ZenoScheme* zeno,
                      const std::vector<const CouplingSpec*>& specs, const RunOptions& options,
                      detail::SystemPropagator& prop, const CVector& reference, Rng& rng) {
  const std::size_t k_count = specs.size();
  const PointerState pointer = make_pointer(options.pointer_grid, options.delta);
  std::vector<std::size_t> dims{static_cast<std::size_t>(system_in.size())};
  for (std::size_t k = 0; k < k_count; ++k) dims.push_back(options.pointer_grid.size());
  std::vector<composite::CouplingKernel> kernel_store;
  kernel_store.reserve(k_count);
  for (const auto* s : specs) kernel_store.emplace_back(s->observable, options.pointer_grid);
  std::vector<const composite::CouplingKernel*> kernels;
  for (const auto& k : kernel_store) kernels.push_back(&k);

  const CVector initial = detail::attach_pointers(system_in, pointer, k_count);
  std::vector<ProtectiveRunRecord> records(k_count);
  for (std::size_t k = 0; k < k_count; ++k) records[k].label = specs[k]->label;
  CVector amps;

  const bool impulsive = specs.front()->schedule == ScheduleKind::Impulsive;
  if (impulsive) {
    const auto pulse_samples = sample_pulses(specs, options.samples);
    std::size_t max_pulses = 0;
    for (const auto* s : specs) max_pulses = std::max(max_pulses, s->pulses);
    const double spacing = zeno ? zeno->period : options.pulse_interval;
    const CMatrix* free_u = (mode == Mode::Free) ? prop.get(0.0, spacing) : nullptr;

    for (std::size_t attempt = 0;; ++attempt) {
      amps = initial;
      for (auto& r : records) {
        r.pointer_trace.clear();
        r.attempts = attempt + 1;
        r.survived = true;
        if (zeno) r.zeno_log = ZenoOutcomeLog{};
      }
      bool alive = true;
      for (std::size_t n = 1; n <= max_pulses && alive; ++n) {
        const double t = static_cast<double>(n) * spacing;
        if (free_u) composite::apply_system(amps, dims, *free_u);
        for (std::size_t k = 0; k < k_count; ++k)
          if (n <= specs[k]->pulses) kernels[k]->apply_momentum(amps, dims, k + 1, specs[k]->strength);
        if (zeno) {
          const int outcome = zeno_project(amps, dims, *zeno, rng);
          for (auto& r : records) r.zeno_log->record(t, outcome, zeno->protected_outcome);
          alive = outcome == static_cast<int>(zeno->protected_outcome);
        }
        for (std::size_t k = 0; k < k_count; ++k) {
          const auto& ns = pulse_samples[k];
          const bool last = !alive && n <= specs[k]->pulses;
          if (std::binary_search(ns.begin(), ns.end(), n) || last)
            records[k].pointer_trace.push_back(
                detail::readout_momentum_held(amps, dims, k + 1, options.pointer_grid, t));
        }
      }
      if (alive || attempt >= options.max_retries) {
        for (auto& r : records) r.survived = alive;
        break;
      }
    }
  } else {
    amps = initial;
    const auto times = sample_times_continuous(specs, options.samples);
    std::set<double> stops;
    double t_start = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < k_count; ++k) {
      stops.insert(times[k].begin(), times[k].end());
      t_start = std::min(t_start, specs[k]->t_on);
    }
    double t = t_start;
    for (const double stop : stops) {
      detail::advance_continuous(amps, dims, kernels, specs, prop, t, stop, options.dt);
      t = stop;
      for (std::size_t k = 0; k < k_count; ++k)
        if (std::binary_search(times[k].begin(), times[k].end(), stop))
          records[k].pointer_trace.push_back(
              detail::readout_momentum_held(amps, dims, k + 1, options.pointer_grid, stop));
    }
  }

  const double fid = system_fidelity(amps, dims, reference);
  const composite::SchmidtSplit split = composite::leading_schmidt(amps, dims);
  for (std::size_t k = 0; k < k_count; ++k) {
    records[k].final_system_fidelity = fid;
    records[k].handoff_weight = split.weight;
    const double total = specs[k]->total_strength();
    records[k].estimate = records[k].pointer_trace.empty() ? 0.0 : records[k].pointer_trace.back().mean / total;
  }
  // Keep the phase convention of the incoming system state.
  CVector out = split.system;
  const cplx ov = system_in.dot(out);
  if (std::abs(ov) > 0.0) out *= std::conj(ov) / std::abs(ov);
  return BatchResult{std::move(records), std::move(out)};
}

}  // namespace

std::vector<ProtectiveRunRecord> run_protective_measurement(const StateVector& psi0,
                                                            const std::optional<ProtectionScheme>& scheme,
                                                            const std::vector<CouplingSpec>& targets,
                                                            const RunOptions& options, Rng& rng) {
  if (targets.empty()) return {};
  const std::size_t ns = psi0.dim();
  for (const auto& t : targets) {
    t.validate();
    if (t.observable.dim() != ns)
      throw StructuralError("run_protective_measurement: target '" + t.label + "' does not act on the system");
    if (t.schedule != targets.front().schedule)
      throw ConfigurationError("run_protective_measurement: targets mix impulsive and continuous schedules");
  }
  if (options.samples < 1) throw ConfigurationError("run_protective_measurement: samples must be >= 1");
  if (!(options.dt > 0.0)) throw ConfigurationError("run_protective_measurement: dt must be positive");

  Mode mode = Mode::Free;
  const ZenoScheme* zeno = nullptr;
  detail::SystemPropagator prop;
  CVector reference = psi0.normalized().amplitudes();
  if (scheme) {
    if (const auto* z = std::get_if<ZenoScheme>(&*scheme)) {
      mode = Mode::Zeno;
      zeno = z;
      if (z->mode != ZenoMode::Stochastic)
        throw ContractViolation("run_protective_measurement: single-system runs need stochastic Zeno mode");
      if (targets.front().schedule != ScheduleKind::Impulsive)
        throw ConfigurationError("run_protective_measurement: Zeno protection uses impulsive couplings");
      if (z->observable.dim() != ns) throw StructuralError("run_protective_measurement: Zeno observable size");
      const auto& b = z->spaces[z->protected_outcome].basis;
      if ((b.adjoint() * reference).squaredNorm() < 1.0 - 1e-6)
        throw ContractViolation("run_protective_measurement: psi0 is not the protected state");
    } else if (const auto* h = std::get_if<HamiltonianScheme>(&*scheme)) {
      mode = Mode::Hamiltonian;
      if (targets.front().schedule != ScheduleKind::Continuous)
        throw ConfigurationError("run_protective_measurement: Hamiltonian protection uses continuous couplings");
      if (h->hamiltonian.dim() != ns) throw StructuralError("run_protective_measurement: Hamiltonian size");
      if (options.hamiltonian_of_t) {
        prop = detail::SystemPropagator(options.hamiltonian_of_t);
        double t_first = targets.front().t_on;
        double t_last = targets.front().t_off;
        for (const auto& t : targets) {
          t_first = std::min(t_first, t.t_on);
          t_last = std::max(t_last, t.t_off);
        }
        const StateVector start = eigenstate(options.hamiltonian_of_t(t_first), h->protected_index);
        if (start.fidelity(psi0.normalized()) < 1.0 - 1e-6)
          throw ContractViolation("run_protective_measurement: psi0 is not the protected eigenstate of H(t_on)");
        // Fidelity is judged against the eigenstate the system should have followed.
        reference = eigenstate(options.hamiltonian_of_t(t_last), h->protected_index).amplitudes();
      } else {
        prop = detail::SystemPropagator(h->hamiltonian);
        const StateVector target = eigenstate(h->hamiltonian, h->protected_index);
        if (target.fidelity(psi0.normalized()) < 1.0 - 1e-6)
          throw ContractViolation("run_protective_measurement: psi0 is not the protected eigenstate");
      }
    } else {
      throw ContractViolation("run_protective_measurement: two-state-vector schemes are not single-system runs");
    }
  } else if (options.free_hamiltonian) {
    if (options.free_hamiltonian->dim() != ns)
      throw StructuralError("run_protective_measurement: free Hamiltonian size");
    prop = detail::SystemPropagator(*options.free_hamiltonian);
  }

  const std::size_t np = options.pointer_grid.size();
  std::size_t fit = 0;
  for (std::size_t dim = ns; dim * np <= kMaxCompositeDim; dim *= np) ++fit;
  if (fit == 0)
    throw StructuralError("run_protective_measurement: system x pointer exceeds the composite cap of 8192");
  if (options.max_targets_per_batch > 0) fit = std::min(fit, options.max_targets_per_batch);

  std::vector<ProtectiveRunRecord> all;
  CVector system = psi0.normalized().amplitudes();
  for (std::size_t first = 0; first < targets.size(); first += fit) {
    std::vector<const CouplingSpec*> batch;
    for (std::size_t k = first; k < std::min(targets.size(), first + fit); ++k) batch.push_back(&targets[k]);
    BatchResult r = run_batch(system, mode, zeno, batch, options, prop, reference, rng);
    system = std::move(r.system_out);
    for (auto& rec : r.records) all.push_back(std::move(rec));
  }
  return all;
}

// ---------------------------------------------------------------------------
// Local currents

RVector current_density(const Grid1D& grid, const StateVector& psi) {
  if (psi.dim() != grid.size()) throw StructuralError("current_density: state does not live on the grid");
  const CVector& a = psi.amplitudes();
  const CVector d = spectral::derivative(grid, a);
  RVector j(a.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) j[i] = (std::conj(a[i]) * d[i]).imag() / grid.dx();
  return j;
}

double local_current(const Grid1D& grid, const StateVector& psi, std::size_t index) {
  if (index >= grid.size()) throw StructuralError("local_current: grid index out of range");
  return current_density(grid, psi)[static_cast<Eigen::Index>(index)];
}

PhaseReconstruction reconstruct_phase(const Grid1D& grid, const StateVector& psi, double mask_fraction) {
  const RVector j = current_density(grid, psi);
  const RVector rho = spectral::density(grid, psi);
  const double cut = mask_fraction * rho.maxCoeff();
  const auto n = static_cast<Eigen::Index>(grid.size());
  const double h = grid.dx();

  PhaseReconstruction out;
  out.phase = RVector::Constant(n, std::numeric_limits<double>::quiet_NaN());
  out.defined.assign(static_cast<std::size_t>(n), false);
  out.region.assign(static_cast<std::size_t>(n), -1);

  int region = 0;
  Eigen::Index i = 0;
  while (i < n) {
    if (!(rho[i] > cut)) {
      ++i;
      continue;
    }
    Eigen::Index end = i;
    while (end < n && rho[end] > cut) ++end;
    const Eigen::Index len = end - i;
    RVector f(len);
    for (Eigen::Index q = 0; q < len; ++q) f[q] = j[i + q] / rho[i + q];
    // Cumulative integral with 4-point (cubic) panels, one-sided at the ends.
    RVector phi(len);
    phi[0] = 0.0;
    for (Eigen::Index q = 0; q + 1 < len; ++q) {
      double step;
      if (len < 4) {
        step = 0.5 * h * (f[q] + f[q + 1]);
      } else if (q == 0) {
        step = h / 24.0 * (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3]);
      } else if (q + 2 >= len) {
        step = h / 24.0 * (9.0 * f[q + 1] + 19.0 * f[q] - 5.0 * f[q - 1] + f[q - 2]);
      } else {
        step = h / 24.0 * (-f[q - 1] + 13.0 * f[q] + 13.0 * f[q + 1] - f[q + 2]);
      }
      phi[q + 1] = phi[q] + step;
    }
    for (Eigen::Index q = 0; q < len; ++q) {
      out.phase[i + q] = phi[q];
      out.defined[static_cast<std::size_t>(i + q)] = true;
      out.region[static_cast<std::size_t>(i + q)] = region;
    }
    ++region;
    i = end;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Nonstationary tracking

double adiabaticity(const HamiltonianSource& hamiltonian, std::size_t index, double t0, double t1,
                    std::size_t samples) {
  if (samples < 2 || !(t1 > t0)) throw ConfigurationError("adiabaticity: need t1 > t0 and >= 2 samples");
  const double h = 1e-4 * (t1 - t0);
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < samples; ++s) {
    const double t = t0 + (t1 - t0) * static_cast<double>(s) / static_cast<double>(samples - 1);
    const Operator ht = hamiltonian(t);
    const Spectrum spec = spectrum(ht);
    const double gap = compute_gap(ht, index);
    const CMatrix hdot = (hamiltonian(t + h).matrix() - hamiltonian(t - h).matrix()) / (2.0 * h);
    const CMatrix v = spec.vectors.adjoint() * hdot * spec.vectors;
    double coupling = 0.0;
    for (Eigen::Index nidx = 0; nidx < v.rows(); ++nidx)
      if (static_cast<std::size_t>(nidx) != index)
        coupling = std::max(coupling, std::abs(v(nidx, static_cast<Eigen::Index>(index))));
    if (coupling > 0.0) worst = std::min(worst, gap * gap / coupling);
  }
  return worst;
}

TrackingRecord track_nonstationary(const StateVector& psi0, const HamiltonianSource& hamiltonian,
                                   std::size_t protected_index, const std::vector<CouplingSpec>& targets,
                                   std::size_t windows, const RunOptions& options, Rng& rng) {
  if (targets.empty()) throw ConfigurationError("track_nonstationary: no targets");
  if (windows < 1) throw ConfigurationError("track_nonstationary: windows must be >= 1");
  const double t_on = targets.front().t_on;
  const double t_off = targets.front().t_off;
  for (const auto& t : targets)
    if (t.schedule != ScheduleKind::Continuous || t.t_on != t_on || t.t_off != t_off)
      throw ConfigurationError("track_nonstationary: targets must share one continuous window");

  TrackingRecord rec;
  rec.adiabaticity = adiabaticity(hamiltonian, protected_index, t_on, t_off);
  if (rec.adiabaticity < 10.0)
    rec.warnings.push_back("adiabaticity " + std::to_string(rec.adiabaticity) +
                           " below 10: H(t) changes too fast for the protected eigenstate to follow");

  const Operator h_start = hamiltonian(t_on);
  const ProtectionScheme scheme = make_hamiltonian_scheme(h_start, protected_index);
  RunOptions opts = options;
  opts.samples = windows;
  opts.hamiltonian_of_t = hamiltonian;
  opts.max_targets_per_batch = 0;
  const std::size_t np = options.pointer_grid.size();
  std::size_t dim = psi0.dim();
  for (std::size_t k = 0; k < targets.size(); ++k) dim *= np;
  if (dim > kMaxCompositeDim)
    throw StructuralError("track_nonstationary: all targets must fit in one composite (cap 8192)");
  rec.runs = run_protective_measurement(psi0, scheme, targets, opts, rng);

  double prev_t = t_on;
  std::vector<double> prev_mean(targets.size(), 0.0);
  for (std::size_t w = 0; w < windows; ++w) {
    TrackingWindow win;
    win.t_start = prev_t;
    win.t_end = rec.runs.front().pointer_trace[w].time;
    const StateVector ground = eigenstate(hamiltonian(0.5 * (win.t_start + win.t_end)), protected_index);
    win.error = 0.0;
    for (std::size_t k = 0; k < targets.size(); ++k) {
      const double mean = rec.runs[k].pointer_trace[w].mean;
      const double g = targets[k].integrated(win.t_start, win.t_end);
      win.estimate.push_back((mean - prev_mean[k]) / g);
      win.reference.push_back(expectation(ground, targets[k].observable));
      win.error = std::max(win.error, std::abs(win.estimate.back() - win.reference.back()));
      prev_mean[k] = mean;
    }
    rec.max_error = std::max(rec.max_error, win.error);
    prev_t = win.t_end;
    rec.windows.push_back(std::move(win));
  }
  return rec;
}

}  // namespace protmeas
