#include "cwsim/scenarios.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <stdexcept>
#include <string>
#include <tuple>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace cwsim {

namespace {

constexpr std::array<std::pair<ScenarioKind, std::string_view>, 5> kKindNames{{
    {ScenarioKind::single, "single"},
    {ScenarioKind::epr_one_apparatus, "epr-one-apparatus"},
    {ScenarioKind::epr_two_apparatuses, "epr-two-apparatuses"},
    {ScenarioKind::spatial_one_detector, "spatial-one-detector"},
    {ScenarioKind::spatial_two_detectors, "spatial-two-detectors"},
}};

}  // namespace

std::string_view to_string(ScenarioKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "single";
}

ScenarioKind scenario_kind_from_string(std::string_view name) {
  for (const auto& [k, n] : kKindNames) {
    if (n == name) return k;
  }
  throw std::invalid_argument("unknown scenario kind '" + std::string(name) + "'");
}

std::size_t spin_count(ScenarioKind kind) {
  return kind == ScenarioKind::epr_one_apparatus || kind == ScenarioKind::epr_two_apparatuses ? 2 : 1;
}

std::size_t apparatus_count(ScenarioKind kind) {
  return kind == ScenarioKind::epr_two_apparatuses || kind == ScenarioKind::spatial_two_detectors ? 2 : 1;
}

std::size_t detector_count(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::spatial_one_detector: return 1;
    case ScenarioKind::spatial_two_detectors: return 2;
    default: return 0;
  }
}

bool is_spatial(ScenarioKind kind) { return detector_count(kind) > 0; }

void RegionSpec::validate() const {
  if (!(k > 0.0) || !std::isfinite(k)) throw std::invalid_argument("regions: k must be > 0");
  for (const auto& [a, b] : intervals) {
    if (!std::isfinite(a) || !std::isfinite(b) || !(a < b)) {
      throw std::invalid_argument("regions: each interval needs finite a < b");
    }
  }
  for (std::size_t i = 0; i < intervals.size(); ++i) {
    for (std::size_t j = i + 1; j < intervals.size(); ++j) {
      const auto& [a1, b1] = intervals[i];
      const auto& [a2, b2] = intervals[j];
      if (!(b1 <= a2 || b2 <= a1)) throw std::invalid_argument("intervals must be disjoint");
    }
  }
}

std::string_view to_string(PacketSpec::Kind kind) {
  switch (kind) {
    case PacketSpec::Kind::gaussian: return "gaussian";
    case PacketSpec::Kind::uniform: return "uniform";
    case PacketSpec::Kind::two_lobe_gaussian: return "two-lobe-gaussian";
  }
  return "gaussian";
}

PacketSpec::Kind packet_kind_from_string(std::string_view name) {
  if (name == "gaussian") return PacketSpec::Kind::gaussian;
  if (name == "uniform") return PacketSpec::Kind::uniform;
  if (name == "two-lobe-gaussian") return PacketSpec::Kind::two_lobe_gaussian;
  throw std::invalid_argument("unknown packet kind '" + std::string(name) + "'");
}

void PacketSpec::validate() const {
  const std::size_t lobes = kind == Kind::two_lobe_gaussian ? 2 : 1;
  if (means.size() != lobes || widths.size() != lobes) {
    throw std::invalid_argument("packet: " + std::string(to_string(kind)) + " needs " + std::to_string(lobes) +
                                " mean(s) and width(s)");
  }
  for (double w : widths) {
    if (!(w > 0.0) || !std::isfinite(w)) throw std::invalid_argument("packet: widths must be > 0");
  }
  for (double m : means) {
    if (!std::isfinite(m)) throw std::invalid_argument("packet: means must be finite");
  }
}

void ScenarioSpec::validate() const {
  const std::size_t dim = std::size_t{1} << spin_count(kind);
  if (static_cast<std::size_t>(spin_state.rows()) != dim || static_cast<std::size_t>(spin_state.cols()) != dim) {
    throw std::invalid_argument("spin_state must be " + std::to_string(dim) + "x" + std::to_string(dim) + " for " +
                                std::string(to_string(kind)));
  }
  if ((spin_state - spin_state.adjoint()).cwiseAbs().maxCoeff() > 1e-12) {
    throw std::invalid_argument("spin_state must be Hermitian");
  }
  if (std::abs(spin_state.trace() - cplx(1.0, 0.0)) > 1e-10) throw std::invalid_argument("spin_state must have unit trace");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(spin_state, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -1e-12) throw std::invalid_argument("spin_state must be positive semidefinite");

  const std::size_t n_app = apparatus_count(kind);
  if (magnets.size() != n_app || baths.size() != n_app) {
    throw std::invalid_argument("need one magnet and one bath per apparatus (" + std::to_string(n_app) + ")");
  }
  for (const auto& m : magnets) m.validate();
  for (const auto& b : baths) b.validate();
  schedule.validate(t_final);
  if (samples < 2) throw std::invalid_argument("samples must be >= 2");

  if (is_spatial(kind)) {
    if (!regions) throw std::invalid_argument(std::string(to_string(kind)) + " needs regions");
    regions->validate();
    if (regions->intervals.size() != detector_count(kind)) {
      throw std::invalid_argument("regions: expected " + std::to_string(detector_count(kind)) + " interval(s)");
    }
    if (!packet && !region_weights) throw std::invalid_argument(std::string(to_string(kind)) + " needs a packet or region_weights");
    if (packet && region_weights) throw std::invalid_argument("give either packet or region_weights, not both");
    if (packet) packet->validate();
    if (region_weights) {
      const auto n = static_cast<Eigen::Index>(detector_count(kind) + 1);
      if (region_weights->rows() != n || region_weights->cols() != n) {
        throw std::invalid_argument("region_weights must be " + std::to_string(n) + "x" + std::to_string(n));
      }
      if (std::abs(region_weights->trace() - cplx(1.0, 0.0)) > 1e-10) {
        throw std::invalid_argument("region_weights must have unit trace");
      }
    }
  } else if (regions || packet || region_weights) {
    throw std::invalid_argument("regions/packet only apply to spatial scenarios");
  }
}

bool ScenarioSpec::operator==(const ScenarioSpec& o) const {
  auto same_matrix = [](const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
  };
  const bool weights_equal = region_weights.has_value() == o.region_weights.has_value() &&
                             (!region_weights || same_matrix(*region_weights, *o.region_weights));
  return kind == o.kind && same_matrix(spin_state, o.spin_state) && magnets == o.magnets && baths == o.baths &&
         schedule == o.schedule && regions == o.regions && packet == o.packet && weights_equal &&
         t_final == o.t_final && samples == o.samples;
}

Eigen::MatrixXcd epr_state() {
  Eigen::MatrixXcd r = Eigen::MatrixXcd::Zero(4, 4);
  // basis |uu>, |ud>, |du>, |dd>
  r(1, 1) = r(1, 2) = r(2, 1) = r(2, 2) = 0.5;
  return r;
}

Eigen::MatrixXcd pure_spin_state(double p_up) {
  if (!(p_up >= 0.0 && p_up <= 1.0)) throw std::invalid_argument("pure_spin_state: p_up must be in [0, 1]");
  const double a = std::sqrt(p_up), b = std::sqrt(1.0 - p_up);
  Eigen::MatrixXcd r(2, 2);
  r << a * a, a * b, a * b, b * b;
  return r;
}

// --- spatial weights --------------------------------------------------------

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Packet {
  PacketSpec spec;
  double lobe_norm = 1.0;

  explicit Packet(PacketSpec s) : spec(std::move(s)) {
    if (spec.kind == PacketSpec::Kind::two_lobe_gaussian) {
      const double s1 = spec.widths[0], s2 = spec.widths[1];
      const double d = spec.means[0] - spec.means[1];
      const double overlap = std::sqrt(2.0 * s1 * s2 / (s1 * s1 + s2 * s2)) * std::exp(-d * d / (4.0 * (s1 * s1 + s2 * s2)));
      lobe_norm = 1.0 / std::sqrt(2.0 + 2.0 * overlap);
    }
  }

  static double gaussian(double x, double mu, double sigma) {
    const double z = x - mu;
    return std::pow(2.0 * std::numbers::pi * sigma * sigma, -0.25) * std::exp(-z * z / (4.0 * sigma * sigma));
  }

  double amplitude(double x) const {
    switch (spec.kind) {
      case PacketSpec::Kind::gaussian: return gaussian(x, spec.means[0], spec.widths[0]);
      case PacketSpec::Kind::uniform: {
        const double lo = spec.means[0] - 0.5 * spec.widths[0], hi = spec.means[0] + 0.5 * spec.widths[0];
        return x >= lo && x <= hi ? 1.0 / std::sqrt(spec.widths[0]) : 0.0;
      }
      case PacketSpec::Kind::two_lobe_gaussian:
        return lobe_norm * (gaussian(x, spec.means[0], spec.widths[0]) + gaussian(x, spec.means[1], spec.widths[1]));
    }
    return 0.0;
  }

  // Probability of [lo, hi]; splits at the uniform packet's edges so every
  // piece is smooth.
  double probability(double lo, double hi) const {
    if (spec.kind == PacketSpec::Kind::uniform) {
      lo = std::max(lo, spec.means[0] - 0.5 * spec.widths[0]);
      hi = std::min(hi, spec.means[0] + 0.5 * spec.widths[0]);
    }
    if (!(lo < hi)) return 0.0;
    auto density = [this](double x) {
      const double a = amplitude(x);
      return a * a;
    };
    double error = 0.0;
    const double value =
        boost::math::quadrature::gauss_kronrod<double, 61>::integrate(density, lo, hi, 20, 1e-13, &error);
    if (error > 1e-12) throw std::runtime_error("region_weights: quadrature did not reach 1e-12");
    return value;
  }
};

}  // namespace

Eigen::MatrixXcd region_weights(const PacketSpec& packet_spec, const RegionSpec& regions) {
  packet_spec.validate();
  regions.validate();
  const Packet packet(packet_spec);

  const double norm = packet.probability(-kInf, kInf);
  if (!std::isfinite(norm) || std::abs(norm - 1.0) > 1e-10) {
    throw std::invalid_argument("packet is not normalizable to 1 (integral " + std::to_string(norm) + ")");
  }

  const std::size_t d = regions.intervals.size();
  std::vector<double> p(d + 1, 0.0);
  for (std::size_t i = 0; i < d; ++i) p[i] = packet.probability(regions.intervals[i].first, regions.intervals[i].second);

  // Outside: the gaps between sorted intervals plus both tails.
  auto sorted = regions.intervals;
  std::sort(sorted.begin(), sorted.end());
  double cursor = -kInf;
  for (const auto& [a, b] : sorted) {
    p[d] += packet.probability(cursor, a);
    cursor = b;
  }
  p[d] += packet.probability(cursor, kInf);

  Eigen::MatrixXcd w(d + 1, d + 1);
  for (std::size_t i = 0; i <= d; ++i) {
    for (std::size_t j = 0; j <= d; ++j) w(i, j) = i == j ? p[i] : std::sqrt(p[i] * p[j]);
  }
  return w;
}

// --- plan construction ------------------------------------------------------

std::vector<MagnetSpec> ScenarioPlan::magnets() const {
  std::vector<MagnetSpec> out;
  for (const auto& a : apparatus) out.push_back(a.magnet);
  return out;
}

double ScenarioPlan::side_coupling(std::size_t a, int region) const {
  const auto& app = apparatus.at(a);
  if (!app.region) return schedule.g;
  return region == *app.region ? schedule.k * schedule.g : 0.0;
}

namespace {

std::vector<cplx> row_major(const Eigen::MatrixXcd& m) {
  std::vector<cplx> out;
  out.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out.push_back(m(i, j));
  }
  return out;
}

Eigen::MatrixXcd spatial_weights(const ScenarioSpec& spec) {
  if (!is_spatial(spec.kind)) return Eigen::MatrixXcd::Ones(1, 1);
  if (spec.region_weights) return *spec.region_weights;
  return region_weights(*spec.packet, *spec.regions);
}

std::vector<ApparatusModel> apparatus_for(const ScenarioSpec& spec) {
  std::vector<ApparatusModel> out;
  for (std::size_t a = 0; a < apparatus_count(spec.kind); ++a) {
    ApparatusModel m;
    m.magnet = spec.magnets[a];
    m.bath = spec.baths[a];
    switch (spec.kind) {
      case ScenarioKind::single:
      case ScenarioKind::epr_one_apparatus: break;
      case ScenarioKind::epr_two_apparatuses: m.spin_index = a; break;
      case ScenarioKind::spatial_one_detector:
      case ScenarioKind::spatial_two_detectors: m.region = static_cast<int>(a); break;
    }
    out.push_back(m);
  }
  return out;
}

}  // namespace

std::vector<BlockState> initialize_blocks(const ScenarioSpec& spec) {
  spec.validate();
  const auto spins = row_major(spec.spin_state);
  const auto w = spatial_weights(spec);
  const auto weights = row_major(w);
  std::vector<MagnetSpec> magnets = spec.magnets;
  return initialize_blocks(spins, spin_count(spec.kind), weights, static_cast<std::size_t>(w.rows()), magnets);
}

ScenarioPlan build_scenario(const ScenarioSpec& spec, OffdiagBath mode) {
  spec.validate();
  ScenarioPlan plan;
  plan.kind = spec.kind;
  plan.apparatus = apparatus_for(spec);
  plan.schedule = spec.schedule;
  if (spec.regions) plan.schedule.k = spec.regions->k;
  plan.region_weights = spatial_weights(spec);
  plan.t_final = spec.t_final;
  const auto magnets = plan.magnets();
  plan.blocks = initialize_blocks(row_major(spec.spin_state), spin_count(spec.kind), row_major(plan.region_weights),
                                  static_cast<std::size_t>(plan.region_weights.rows()), magnets);

  // Generators depend only on the apparatus and the two side fields.
  std::vector<std::shared_ptr<const BlockGenerator>> idle;
  for (const auto& app : plan.apparatus) {
    idle.push_back(std::make_shared<const BlockGenerator>(
        build_generator(app.magnet, app.bath, SpinZ::up, SpinZ::up, 0.0, 0.0, mode)));
  }
  std::map<std::tuple<std::size_t, double, double>, std::shared_ptr<const BlockGenerator>> active;

  for (const auto& block : plan.blocks) {
    std::vector<GeneratorPair> row;
    for (std::size_t a = 0; a < plan.apparatus.size(); ++a) {
      const auto& app = plan.apparatus[a];
      const SpinZ s_bra = block.label.spin_bra[app.spin_index];
      const SpinZ s_ket = block.label.spin_ket[app.spin_index];
      const double c_bra = plan.side_coupling(a, block.label.region_bra);
      const double c_ket = plan.side_coupling(a, block.label.region_ket);
      const auto key = std::make_tuple(a, c_bra * sign_of(s_bra), c_ket * sign_of(s_ket));
      auto it = active.find(key);
      if (it == active.end()) {
        auto gen = std::make_shared<const BlockGenerator>(
            build_generator(app.magnet, app.bath, s_bra, s_ket, c_bra, c_ket, mode));
        it = active.emplace(key, std::move(gen)).first;
      }
      row.push_back({idle[a], it->second});
    }
    plan.generators.push_back(std::move(row));
  }
  return plan;
}

// --- readout ----------------------------------------------------------------

double Readout::joint_at(std::span<const Pointer> outcomes) const {
  std::size_t idx = 0, stride = 1;
  for (Pointer o : outcomes) {
    idx += static_cast<std::size_t>(o) * stride;
    stride *= 3;
  }
  return joint.at(idx);
}

double Readout::all_click() const {
  std::size_t n_app = 0;
  for (std::size_t n = joint.size(); n > 1; n /= 3) ++n_app;
  double p = 0.0;
  for (std::size_t idx = 0; idx < joint.size(); ++idx) {
    bool clicked = true;
    std::size_t rest = idx;
    for (std::size_t a = 0; a < n_app; ++a, rest /= 3) {
      if (rest % 3 == static_cast<std::size_t>(Pointer::null)) clicked = false;
    }
    if (clicked) p += joint[idx];
  }
  return p;
}

double trace_distance(const SpinMatrix& a, const SpinMatrix& b) {
  const SpinMatrix d = a - b;
  Eigen::SelfAdjointEigenSolver<SpinMatrix> eig(0.5 * (d + d.adjoint()), Eigen::EigenvaluesOnly);
  return 0.5 * eig.eigenvalues().cwiseAbs().sum();
}

Readout readout(const ScenarioPlan& plan, const Trajectory& trajectory, double threshold_fraction, double at) {
  if (!(threshold_fraction > 0.0 && threshold_fraction < 1.0)) {
    throw std::invalid_argument("readout: threshold fraction must lie in (0, 1)");
  }
  const auto& snap = trajectory.snapshot_at(at);
  const std::size_t n_app = plan.apparatus.size();
  const std::size_t n_spin = spin_count(plan.kind);
  const std::size_t detectors = static_cast<std::size_t>(plan.region_weights.rows()) - 1;

  Readout r;
  r.at = snap.t;
  for (const auto& app : plan.apparatus) {
    const double mf = meanfield_fixed_point(app.magnet, SpinZ::up, 0.0, app.bath.T).m_f;
    if (!(mf > 1e-6)) throw std::invalid_argument("readout: threshold outside (0, m_F); the magnet has no ferromagnetic state");
    r.m_f.push_back(mf);
    r.threshold.push_back(threshold_fraction * mf);
  }

  std::size_t combos = 1;
  for (std::size_t a = 0; a < n_app; ++a) combos *= 3;
  r.joint.assign(combos, 0.0);
  r.pointer_spin.assign(n_app, std::vector<std::array<std::array<double, 2>, 3>>(n_spin));
  for (auto& per_spin : r.pointer_spin) {
    for (auto& t : per_spin) t = {};
  }
  r.conditional_spin.assign(n_app, std::vector<std::array<SpinMatrix, 2>>(n_spin, {SpinMatrix::Zero(), SpinMatrix::Zero()}));
  if (detectors > 0) r.region_probability.assign(detectors + 1, 0.0);

  for (std::size_t b = 0; b < snap.blocks.size(); ++b) {
    const auto& block = snap.blocks[b];
    const auto& label = block.label;

    // Complex pointer masses per apparatus: up, down, null, total.
    std::vector<std::array<cplx, 4>> mass(n_app);
    for (std::size_t a = 0; a < n_app; ++a) {
      const auto& amp = block.per_apparatus[a].amplitudes;
      const auto& magnet = plan.apparatus[a].magnet;
      std::array<cplx, 4> m{};
      for (std::size_t k = 0; k < amp.size(); ++k) {
        const double mk = magnet.m_at(k);
        const int o = mk > r.threshold[a] ? 0 : (mk < -r.threshold[a] ? 1 : 2);
        m[static_cast<std::size_t>(o)] += amp[k];
      }
      m[3] = m[0] + m[1] + m[2];
      mass[a] = m;
    }
    auto others = [&](std::size_t skip) {
      cplx p = block.weight;
      for (std::size_t a = 0; a < n_app; ++a) {
        if (a != skip) p *= mass[a][3];
      }
      return p;
    };

    if (!label.is_diagonal()) {
      r.residual_coherence.emplace_back(b, std::abs(block_trace(block)));
    } else {
      for (std::size_t idx = 0; idx < combos; ++idx) {
        cplx p = block.weight;
        std::size_t rest = idx;
        for (std::size_t a = 0; a < n_app; ++a, rest /= 3) p *= mass[a][rest % 3];
        r.joint[idx] += p.real();
      }
      const double total = others(n_app).real();
      r.total_trace += total;
      if (detectors > 0) {
        const std::size_t reg = label.region_bra == kOutside ? detectors : static_cast<std::size_t>(label.region_bra);
        r.region_probability[reg] += total;
      }
      for (std::size_t a = 0; a < n_app; ++a) {
        for (std::size_t j = 0; j < n_spin; ++j) {
          const std::size_t v = label.spin_bra[j] == SpinZ::up ? 0 : 1;
          for (std::size_t o = 0; o < 3; ++o) r.pointer_spin[a][j][o][v] += (others(a) * mass[a][o]).real();
        }
      }
    }

    // Conditional reduced states of each spin: trace out regions and the
    // other spins, which requires them to be diagonal in this block.
    if (!label.region_diagonal()) continue;
    for (std::size_t j = 0; j < n_spin; ++j) {
      bool rest_diagonal = true;
      for (std::size_t i = 0; i < n_spin; ++i) {
        if (i != j && label.spin_bra[i] != label.spin_ket[i]) rest_diagonal = false;
      }
      if (!rest_diagonal) continue;
      const Eigen::Index row = label.spin_bra[j] == SpinZ::up ? 0 : 1;
      const Eigen::Index col = label.spin_ket[j] == SpinZ::up ? 0 : 1;
      for (std::size_t a = 0; a < n_app; ++a) {
        for (std::size_t o = 0; o < 2; ++o) r.conditional_spin[a][j][o](row, col) += others(a) * mass[a][o];
      }
    }
  }

  for (std::size_t a = 0; a < n_app; ++a) {
    PointerStats s;
    std::size_t stride = 1;
    for (std::size_t i = 0; i < a; ++i) stride *= 3;
    for (std::size_t idx = 0; idx < combos; ++idx) {
      const auto o = static_cast<Pointer>((idx / stride) % 3);
      (o == Pointer::up ? s.up : o == Pointer::down ? s.down : s.null) += r.joint[idx];
    }
    r.pointers.push_back(s);
    r.correlators.emplace_back();
    for (std::size_t j = 0; j < n_spin; ++j) {
      const auto& t = r.pointer_spin[a][j];
      r.correlators[a].push_back((t[0][0] - t[0][1]) - (t[1][0] - t[1][1]));
      for (std::size_t o = 0; o < 2; ++o) {
        auto& rho = r.conditional_spin[a][j][o];
        const double tr = rho.trace().real();
        if (tr > 1e-300) rho /= tr;
      }
    }
  }
  return r;
}

}  // namespace cwsim
