#include "cwsim/run.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace cwsim {

using json = nlohmann::json;

RunResult simulate(const RunConfig& config) {
  RunResult r;
  r.plan = build_scenario(config.scenario, config.offdiag_bath);

  IntegratorConfig ic = config.integrator;
  ic.samples = config.scenario.samples;
  if (config.readout_at) ic.snapshot_times.push_back(*config.readout_at);
  r.trajectory = evolve(r.plan.blocks, r.plan.generators, r.plan.magnets(), r.plan.schedule, r.plan.t_final, ic);
  r.readout = readout(r.plan, r.trajectory, config.threshold_fraction, config.readout_time());

  for (const auto& app : r.plan.apparatus) {
    ApparatusDiagnostics d;
    d.m_f = meanfield_fixed_point(app.magnet, SpinZ::up, 0.0, app.bath.T).m_f;
    try {
      d.h_c = threshold_coupling(app.magnet, app.bath.T);
    } catch (const std::domain_error&) {
      d.h_c.reset();
    }
    r.diagnostics.push_back(d);
  }
  return r;
}

std::string format_number(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  if (res.ec != std::errc{}) throw std::runtime_error("format_number: conversion failed");
  return std::string(buf, res.ptr);
}

double normalized_trace(const Trajectory& trajectory, std::size_t sample, std::size_t block) {
  const double w = std::abs(trajectory.weights[block]);
  return std::abs(trajectory.traces[sample][block]) / w;
}

void write_timeseries(std::ostream& out, const Trajectory& tr) {
  const std::size_t nb = tr.labels.size();
  out << "t";
  for (std::size_t b = 0; b < nb; ++b) out << ",b" << b << "_trace_re,b" << b << "_trace_im,b" << b << "_coh_mag";
  for (std::size_t b = 0; b < nb; ++b) {
    for (std::size_t a = 0; a < tr.apparatus_count; ++a) {
      out << ",b" << b << "_a" << a << "_mean_m,b" << b << "_a" << a << "_var_m";
    }
  }
  out << '\n';
  for (std::size_t s = 0; s < tr.times.size(); ++s) {
    out << format_number(tr.times[s]);
    for (std::size_t b = 0; b < nb; ++b) {
      const cplx c = tr.traces[s][b];
      out << ',' << format_number(c.real()) << ',' << format_number(c.imag()) << ','
          << format_number(normalized_trace(tr, s, b));
    }
    for (std::size_t b = 0; b < nb; ++b) {
      for (std::size_t a = 0; a < tr.apparatus_count; ++a) {
        const auto& mo = tr.moments[s][b][a];
        out << ',' << format_number(mo.mean) << ',' << format_number(mo.var);
      }
    }
    out << '\n';
  }
}

void write_distributions(std::ostream& out, const RunResult& result) {
  out << "t,block_id,apparatus,m,re,im\n";
  const auto magnets = result.plan.magnets();
  for (const auto& snap : result.trajectory.snapshots) {
    const std::string t = format_number(snap.t);
    for (std::size_t b = 0; b < snap.blocks.size(); ++b) {
      const auto& block = snap.blocks[b];
      for (std::size_t a = 0; a < block.per_apparatus.size(); ++a) {
        const auto& amp = block.per_apparatus[a].amplitudes;
        for (std::size_t k = 0; k < amp.size(); ++k) {
          out << t << ',' << b << ',' << a << ',' << format_number(magnets[a].m_at(k)) << ','
              << format_number(amp[k].real()) << ',' << format_number(amp[k].imag()) << '\n';
        }
      }
    }
  }
}

namespace {

json complex_json(cplx c) { return json::array({c.real(), c.imag()}); }

json spin_matrix_json(const SpinMatrix& m) {
  json rows = json::array();
  for (int r = 0; r < 2; ++r) rows.push_back(json::array({complex_json(m(r, 0)), complex_json(m(r, 1))}));
  return rows;
}

std::string outcome_name(std::size_t o) {
  static const char* names[] = {"up", "down", "null"};
  return names[o];
}

}  // namespace

std::string readout_json_text(const RunConfig& config, const RunResult& result) {
  const Readout& ro = result.readout;
  const std::size_t n_app = ro.pointers.size();

  json pointers = json::array();
  for (std::size_t a = 0; a < n_app; ++a) {
    const auto& p = ro.pointers[a];
    pointers.push_back({{"up", p.up}, {"down", p.down}, {"null", p.null}, {"m_f", ro.m_f[a]}, {"threshold", ro.threshold[a]}});
  }

  json joint = json::array();
  for (std::size_t idx = 0; idx < ro.joint.size(); ++idx) {
    json outcomes = json::array();
    std::size_t rest = idx;
    for (std::size_t a = 0; a < n_app; ++a) {
      outcomes.push_back(outcome_name(rest % 3));
      rest /= 3;
    }
    joint.push_back({{"outcomes", outcomes}, {"p", ro.joint[idx]}});
  }

  json pointer_spin = json::array();
  json conditional = json::array();
  for (std::size_t a = 0; a < n_app; ++a) {
    json per_spin = json::array();
    json cond = json::array();
    for (std::size_t j = 0; j < ro.pointer_spin[a].size(); ++j) {
      json table = json::object();
      for (std::size_t o = 0; o < 3; ++o) {
        table[outcome_name(o)] = {{"up", ro.pointer_spin[a][j][o][0]}, {"down", ro.pointer_spin[a][j][o][1]}};
      }
      per_spin.push_back(table);
      cond.push_back({{"given_up", spin_matrix_json(ro.conditional_spin[a][j][0])},
                      {"given_down", spin_matrix_json(ro.conditional_spin[a][j][1])}});
    }
    pointer_spin.push_back(per_spin);
    conditional.push_back(cond);
  }

  json residual = json::array();
  for (const auto& [b, v] : ro.residual_coherence) residual.push_back({{"block", b}, {"magnitude", v}});

  json blocks = json::array();
  for (std::size_t b = 0; b < result.trajectory.labels.size(); ++b) {
    const auto& l = result.trajectory.labels[b];
    blocks.push_back({{"id", b},
                      {"label", l.to_string()},
                      {"diagonal", l.is_diagonal()},
                      {"weight", complex_json(result.trajectory.weights[b])}});
  }

  json diagnostics = json::array();
  for (const auto& d : result.diagnostics) {
    diagnostics.push_back({{"h_c", d.h_c ? json(*d.h_c) : json(nullptr)}, {"m_f", d.m_f}});
  }

  json doc = {
      {"readout",
       {{"t", ro.at},
        {"pointers", pointers},
        {"joint", joint},
        {"pointer_spin", pointer_spin},
        {"correlators", ro.correlators},
        {"conditional_spin", conditional},
        {"region_probability", ro.region_probability},
        {"residual_coherence", residual},
        {"total_trace", ro.total_trace},
        {"all_click", ro.all_click()}}},
      {"blocks", blocks},
      {"unique_evolutions", result.trajectory.unique_evolutions},
      {"diagnostics", diagnostics},
      {"config", json::parse(to_json_text(config))},
  };
  return doc.dump(2) + "\n";
}

RunResult run(const RunConfig& config, const std::filesystem::path& out_dir) {
  RunResult result = simulate(config);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw std::runtime_error("cannot create " + out_dir.string() + ": " + ec.message());

  auto write = [&](const char* name, auto&& body) {
    const auto path = out_dir / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    body(out);
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + path.string());
  };
  write("timeseries.csv", [&](std::ostream& o) { write_timeseries(o, result.trajectory); });
  write("distributions.csv", [&](std::ostream& o) { write_distributions(o, result); });
  write("readout.json", [&](std::ostream& o) { o << readout_json_text(config, result); });
  return result;
}

}  // namespace cwsim
