#include "cwsim/block_engine.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <map>
#include <stdexcept>
#include <thread>

namespace cwsim {

std::string BlockLabel::to_string() const {
  auto spins = [](const std::vector<SpinZ>& v) {
    std::string s;
    for (SpinZ z : v) s += z == SpinZ::up ? 'u' : 'd';
    return s;
  };
  auto region = [](int r) { return r == kOutside ? std::string("out") : "R" + std::to_string(r); };
  return spins(spin_bra) + "|" + spins(spin_ket) + "@" + region(region_bra) + "|" + region(region_ket);
}

cplx SectorDistribution::sum() const {
  cplx s{0.0, 0.0};
  for (const auto& a : amplitudes) s += a;
  return s;
}

void CouplingSchedule::validate(double t_final) const {
  if (!(g >= 0.0) || !std::isfinite(g)) throw std::invalid_argument("schedule: g must be >= 0");
  if (!(k > 0.0) || !std::isfinite(k)) throw std::invalid_argument("schedule: k must be > 0");
  if (!(t_on >= 0.0 && t_on < t_off && t_off <= t_final)) {
    throw std::invalid_argument("schedule: need 0 <= t_on < t_off <= t_final");
  }
}

const Snapshot& Trajectory::snapshot_at(double t) const {
  for (const auto& s : snapshots) {
    if (std::abs(s.t - t) <= 1e-9 * std::max(1.0, std::abs(t))) return s;
  }
  throw std::out_of_range("no snapshot at t=" + std::to_string(t));
}

EvolutionError::EvolutionError(const BlockLabel& label, std::size_t apparatus, const std::string& what)
    : std::runtime_error("block " + label.to_string() + ", apparatus " + std::to_string(apparatus) + ": " + what),
      label_(label) {}

SectorDistribution binomial_distribution(const MagnetSpec& magnet) {
  const auto grid = magnetization_grid(magnet);
  const double log_norm = magnet.N * std::log(2.0);
  SectorDistribution d;
  d.amplitudes.reserve(grid.size());
  for (const auto& p : grid) d.amplitudes.emplace_back(std::exp(p.log_multiplicity - log_norm), 0.0);
  return d;
}

namespace {

std::vector<SpinZ> spins_of(std::size_t index, std::size_t count) {
  std::vector<SpinZ> out(count);
  for (std::size_t j = 0; j < count; ++j) {
    const bool down = (index >> (count - 1 - j)) & 1u;
    out[j] = down ? SpinZ::down : SpinZ::up;
  }
  return out;
}

void check_weight_matrix(std::span<const cplx> w, std::size_t dim, const char* what) {
  if (w.size() != dim * dim) throw std::invalid_argument(std::string(what) + ": matrix has wrong size");
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t j = 0; j < dim; ++j) {
      const double lhs = std::norm(w[i * dim + j]);
      const double rhs = w[i * dim + i].real() * w[j * dim + j].real();
      if (lhs > rhs + 1e-12 * std::max(1.0, std::abs(rhs))) {
        throw std::invalid_argument(std::string(what) + ": inconsistent weights, |w_" + std::to_string(i) +
                                    std::to_string(j) + "|^2 > w_ii w_jj");
      }
    }
  }
}

}  // namespace

std::vector<BlockState> initialize_blocks(std::span<const cplx> spin_state, std::size_t spin_count,
                                          std::span<const cplx> region_weights, std::size_t region_dim,
                                          std::span<const MagnetSpec> magnets) {
  if (spin_count < 1 || spin_count > 2) throw std::invalid_argument("initialize_blocks: 1 or 2 spins supported");
  if (region_dim < 1) throw std::invalid_argument("initialize_blocks: empty region weights");
  const std::size_t spin_dim = std::size_t{1} << spin_count;
  check_weight_matrix(spin_state, spin_dim, "spin state");
  check_weight_matrix(region_weights, region_dim, "region weights");

  std::vector<SectorDistribution> initial;
  for (const auto& m : magnets) initial.push_back(binomial_distribution(m));

  const std::size_t detectors = region_dim - 1;
  auto region_label = [&](std::size_t r) { return r == detectors ? kOutside : static_cast<int>(r); };

  constexpr double kNegligible = 1e-14;
  std::vector<BlockState> blocks;
  for (std::size_t rb = 0; rb < region_dim; ++rb) {
    for (std::size_t rk = 0; rk < region_dim; ++rk) {
      const cplx w = region_weights[rb * region_dim + rk];
      for (std::size_t sb = 0; sb < spin_dim; ++sb) {
        for (std::size_t sk = 0; sk < spin_dim; ++sk) {
          const cplx weight = spin_state[sb * spin_dim + sk] * w;
          if (std::abs(weight) <= kNegligible) continue;
          BlockState b;
          b.label = {spins_of(sb, spin_count), spins_of(sk, spin_count), region_label(rb), region_label(rk)};
          b.weight = weight;
          b.per_apparatus = initial;
          blocks.push_back(std::move(b));
        }
      }
    }
  }
  return blocks;
}

cplx block_trace(const BlockState& block) {
  cplx t = block.weight;
  for (const auto& d : block.per_apparatus) t *= d.sum();
  return t;
}

double coherence_magnitude(const BlockState& block) {
  if (block.label.is_diagonal()) {
    throw std::invalid_argument("coherence_magnitude: block " + block.label.to_string() + " is diagonal");
  }
  return std::abs(block_trace(block));
}

SectorMoments sector_moments(const SectorDistribution& dist, const MagnetSpec& magnet) {
  double w = 0.0, s1 = 0.0, s2 = 0.0;
  for (std::size_t k = 0; k < dist.amplitudes.size(); ++k) {
    const double a = std::abs(dist.amplitudes[k]);
    const double m = magnet.m_at(k);
    w += a;
    s1 += a * m;
    s2 += a * m * m;
  }
  if (w == 0.0) return {};
  const double mean = s1 / w;
  return {mean, std::max(0.0, s2 / w - mean * mean)};
}

unsigned resolve_thread_count(unsigned requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("CWSIM_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

cplx mul(cplx a, cplx b) { return {a.real() * b.real() - a.imag() * b.imag(), a.real() * b.imag() + a.imag() * b.real()}; }

// The generator in a frame rotating with the affine part alpha + beta k of
// Im(diagonal), started at t0: y_k = exp(i (alpha + beta k)(t - t0)) z_k.
// The fast phase 2gNm of a spin-off-diagonal block is affine in k, so in this
// frame only the slow beta ~ 4g survives, on the neighbour couplings. The
// non-affine remainder stays on the diagonal, so the transform is exact.
class RotatingRhs {
 public:
  RotatingRhs(const BlockGenerator& gen, double t0) : gen_(&gen), t0_(t0), residual_(gen.diagonal()) {
    const std::size_t n = residual_.size();
    alpha_ = residual_.front().imag();
    beta_ = n > 1 ? (residual_.back().imag() - alpha_) / static_cast<double>(n - 1) : 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      residual_[k] -= cplx(0.0, alpha_ + beta_ * static_cast<double>(k));
    }
  }

  bool trivial() const { return alpha_ == 0.0 && beta_ == 0.0; }

  void operator()(double t, std::span<const cplx> z, std::span<cplx> out) const {
    const std::size_t n = residual_.size();
    const auto& below = gen_->from_below();
    const auto& above = gen_->from_above();
    const cplx c = beta_ == 0.0 ? cplx(1.0) : std::polar(1.0, beta_ * (t - t0_));
    const cplx cc = std::conj(c);
    if (n == 1) {
      out[0] = mul(residual_[0], z[0]);
      return;
    }
    out[0] = mul(residual_[0], z[0]) + above[0] * mul(c, z[1]);
    for (std::size_t k = 1; k + 1 < n; ++k) {
      out[k] = mul(residual_[k], z[k]) + below[k] * mul(cc, z[k - 1]) + above[k] * mul(c, z[k + 1]);
    }
    out[n - 1] = mul(residual_[n - 1], z[n - 1]) + below[n - 1] * mul(cc, z[n - 2]);
  }

  void to_lab(const std::vector<cplx>& z, double t, std::vector<cplx>& y) const {
    const double tau = t - t0_;
    y.resize(z.size());
    for (std::size_t k = 0; k < z.size(); ++k) {
      y[k] = mul(std::polar(1.0, alpha_ * tau + beta_ * static_cast<double>(k) * tau), z[k]);
    }
  }

 private:
  const BlockGenerator* gen_;
  double t0_;
  std::vector<cplx> residual_;
  double alpha_ = 0.0;
  double beta_ = 0.0;
};

struct Stop {
  double t = 0.0;
  int sample = -1;
  int snapshot = -1;
};

// One distinct ODE and everything recorded along it.
struct Evolution {
  const BlockGenerator* idle = nullptr;
  const BlockGenerator* active = nullptr;
  const std::vector<cplx>* initial = nullptr;
  std::size_t apparatus = 0;
  std::size_t first_block = 0;  // for error reporting
  std::vector<cplx> sums;
  std::vector<SectorMoments> moments;
  std::vector<std::vector<cplx>> snapshots;
};

struct Use {
  std::size_t evolution;
  bool conjugate;
};

bool conjugate_vectors(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] != std::conj(b[i])) return false;
  }
  return true;
}

bool same_generator(const BlockGenerator* a, const BlockGenerator* b) { return a == b || *a == *b; }

void run_evolution(Evolution& ev, const std::vector<Stop>& stops, const CouplingSchedule& schedule,
                   const MagnetSpec& magnet, const IntegratorConfig& config) {
  std::vector<cplx> y = *ev.initial;
  double initial_scale = 0.0;
  for (const auto& v : y) initial_scale = std::max(initial_scale, std::abs(v));
  const StepControl control{config.rtol, config.atol, config.max_step, config.negligible * initial_scale};
  const BlockGenerator* current = nullptr;
  std::optional<DormandPrince<RotatingRhs>> stepper;
  std::vector<cplx> lab;

  // y holds the state in the current rotating frame.
  auto record = [&](const Stop& s) {
    const std::vector<cplx>* state = &y;
    if (stepper && !stepper->rhs().trivial()) {
      stepper->rhs().to_lab(y, s.t, lab);
      state = &lab;
    }
    if (s.sample >= 0) {
      SectorDistribution d{*state};
      ev.sums[static_cast<std::size_t>(s.sample)] = d.sum();
      ev.moments[static_cast<std::size_t>(s.sample)] = sector_moments(d, magnet);
    }
    if (s.snapshot >= 0) ev.snapshots[static_cast<std::size_t>(s.snapshot)] = *state;
  };

  double t = 0.0;
  for (const auto& s : stops) {
    if (s.t > t) {
      const BlockGenerator* gen = schedule.active_at(t) ? ev.active : ev.idle;
      if (gen != current) {
        if (stepper && !stepper->rhs().trivial()) {
          stepper->rhs().to_lab(y, t, lab);
          y.swap(lab);
        }
        current = gen;
        stepper.emplace(RotatingRhs(*gen, t), y.size(), control);
      }
      stepper->advance(y, t, s.t);
    }
    record(s);
  }
}

}  // namespace

Trajectory evolve(const std::vector<BlockState>& blocks, const std::vector<std::vector<GeneratorPair>>& generators,
                  std::span<const MagnetSpec> magnets, const CouplingSchedule& schedule, double t_final,
                  const IntegratorConfig& config) {
  schedule.validate(t_final);
  if (generators.size() != blocks.size()) throw std::invalid_argument("evolve: one generator row per block");
  if (config.samples < 2) throw std::invalid_argument("evolve: need at least 2 samples");
  if (!(config.rtol > 0.0)) throw std::invalid_argument("evolve: rtol must be > 0");
  const std::size_t n_app = magnets.size();
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    if (blocks[b].per_apparatus.size() != n_app || generators[b].size() != n_app) {
      throw std::invalid_argument("evolve: block " + blocks[b].label.to_string() + " has wrong apparatus count");
    }
  }

  // Stop times: samples, snapshots, and the schedule switches.
  std::map<double, Stop> stop_map;
  Trajectory traj;
  const auto n_samples = static_cast<std::size_t>(config.samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    const double t = i + 1 == n_samples ? t_final : t_final * static_cast<double>(i) / (n_samples - 1);
    traj.times.push_back(t);
    auto& s = stop_map[t];
    s.t = t;
    s.sample = static_cast<int>(i);
  }
  std::vector<double> snap_times{0.0, schedule.t_off, t_final};
  for (double t : config.snapshot_times) {
    if (t < 0.0 || t > t_final) throw std::invalid_argument("evolve: snapshot time outside [0, t_final]");
    snap_times.push_back(t);
  }
  std::sort(snap_times.begin(), snap_times.end());
  snap_times.erase(std::unique(snap_times.begin(), snap_times.end()), snap_times.end());
  for (std::size_t i = 0; i < snap_times.size(); ++i) {
    auto& s = stop_map[snap_times[i]];
    s.t = snap_times[i];
    s.snapshot = static_cast<int>(i);
  }
  for (double t : {schedule.t_on, schedule.t_off}) stop_map[t].t = t;
  std::vector<Stop> stops;
  for (const auto& [t, s] : stop_map) stops.push_back(s);

  // Collapse identical and conjugate (block, apparatus) problems.
  std::vector<Evolution> evolutions;
  std::vector<std::vector<Use>> uses(blocks.size());
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    for (std::size_t a = 0; a < n_app; ++a) {
      const auto& gp = generators[b][a];
      if (!gp.idle || !gp.active) throw std::invalid_argument("evolve: missing generator");
      const auto& init = blocks[b].per_apparatus[a].amplitudes;
      if (init.size() != magnets[a].grid_size() || gp.idle->size() != init.size() ||
          gp.active->size() != init.size()) {
        throw std::invalid_argument("evolve: size mismatch in block " + blocks[b].label.to_string());
      }
      std::optional<Use> found;
      for (std::size_t e = 0; e < evolutions.size() && !found; ++e) {
        const auto& ev = evolutions[e];
        if (ev.apparatus != a) continue;
        if (same_generator(ev.idle, gp.idle.get()) && same_generator(ev.active, gp.active.get()) &&
            *ev.initial == init) {
          found = Use{e, false};
        } else if (gp.idle->is_conjugate_of(*ev.idle) && gp.active->is_conjugate_of(*ev.active) &&
                   conjugate_vectors(init, *ev.initial)) {
          found = Use{e, true};
        }
      }
      if (!found) {
        Evolution ev;
        ev.idle = gp.idle.get();
        ev.active = gp.active.get();
        ev.initial = &init;
        ev.apparatus = a;
        ev.first_block = b;
        ev.sums.resize(n_samples);
        ev.moments.resize(n_samples);
        ev.snapshots.resize(snap_times.size());
        evolutions.push_back(std::move(ev));
        found = Use{evolutions.size() - 1, false};
      }
      uses[b].push_back(*found);
    }
  }

  // Distinct evolutions are independent; any schedule gives identical bits.
  std::vector<std::exception_ptr> errors(evolutions.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t e = next++; e < evolutions.size(); e = next++) {
      try {
        run_evolution(evolutions[e], stops, schedule, magnets[evolutions[e].apparatus], config);
      } catch (...) {
        errors[e] = std::current_exception();
      }
    }
  };
  const unsigned n_threads = std::min<unsigned>(resolve_thread_count(config.threads),
                                                static_cast<unsigned>(std::max<std::size_t>(1, evolutions.size())));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < n_threads; ++i) pool.emplace_back(worker);
  }
  for (std::size_t e = 0; e < evolutions.size(); ++e) {
    if (!errors[e]) continue;
    try {
      std::rethrow_exception(errors[e]);
    } catch (const std::exception& ex) {
      throw EvolutionError(blocks[evolutions[e].first_block].label, evolutions[e].apparatus, ex.what());
    }
  }

  // Assemble per-block records.
  traj.apparatus_count = n_app;
  traj.unique_evolutions = evolutions.size();
  for (const auto& b : blocks) {
    traj.labels.push_back(b.label);
    traj.weights.push_back(b.weight);
  }
  traj.traces.assign(n_samples, std::vector<cplx>(blocks.size()));
  traj.moments.assign(n_samples, std::vector<std::vector<SectorMoments>>(blocks.size(), std::vector<SectorMoments>(n_app)));
  for (std::size_t i = 0; i < n_samples; ++i) {
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      cplx tr = blocks[b].weight;
      for (std::size_t a = 0; a < n_app; ++a) {
        const auto& u = uses[b][a];
        const cplx s = evolutions[u.evolution].sums[i];
        tr *= u.conjugate ? std::conj(s) : s;
        traj.moments[i][b][a] = evolutions[u.evolution].moments[i];
      }
      traj.traces[i][b] = tr;
    }
  }
  for (std::size_t s = 0; s < snap_times.size(); ++s) {
    Snapshot snap;
    snap.t = snap_times[s];
    snap.blocks.reserve(blocks.size());
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      BlockState st;
      st.label = blocks[b].label;
      st.weight = blocks[b].weight;
      for (std::size_t a = 0; a < n_app; ++a) {
        const auto& u = uses[b][a];
        SectorDistribution d{evolutions[u.evolution].snapshots[s]};
        if (u.conjugate) {
          for (auto& x : d.amplitudes) x = std::conj(x);
        }
        st.per_apparatus.push_back(std::move(d));
      }
      snap.blocks.push_back(std::move(st));
    }
    traj.snapshots.push_back(std::move(snap));
  }
  return traj;
}

}  // namespace cwsim
