#include "cwsim/config.h"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace cwsim {

using json = nlohmann::json;

ConfigError::ConfigError(std::string key, const std::string& what)
    : std::runtime_error(key.empty() ? what : "config key '" + key + "': " + what), key_(std::move(key)) {}

namespace {

std::string join(const std::string& parent, const std::string& key) {
  return parent.empty() ? key : parent + "." + key;
}

std::string indexed(const std::string& parent, std::size_t i) { return parent + "[" + std::to_string(i) + "]"; }

void expect_object(const json& j, const std::string& path, const std::set<std::string>& allowed) {
  if (!j.is_object()) throw ConfigError(path, "expected object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.contains(key)) throw ConfigError(join(path, key), "unknown key");
  }
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path, "expected number");
  return j.get<double>();
}

int integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ConfigError(path, "expected integer");
  return j.get<int>();
}

std::string string(const json& j, const std::string& path) {
  if (!j.is_string()) throw ConfigError(path, "expected string");
  return j.get<std::string>();
}

const json* find(const json& obj, const char* key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

void read_number(const json& obj, const std::string& path, const char* key, double& out) {
  if (const json* v = find(obj, key)) out = number(*v, join(path, key));
}

std::vector<double> number_array(const json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path, "expected array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], indexed(path, i)));
  return out;
}

Eigen::MatrixXd real_matrix(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw ConfigError(path, "expected non-empty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  Eigen::Index cols = -1;
  Eigen::MatrixXd out;
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto row = number_array(j[static_cast<std::size_t>(r)], indexed(path, static_cast<std::size_t>(r)));
    if (cols < 0) {
      cols = static_cast<Eigen::Index>(row.size());
      out.resize(rows, cols);
    } else if (static_cast<Eigen::Index>(row.size()) != cols) {
      throw ConfigError(indexed(path, static_cast<std::size_t>(r)), "rows must have equal length");
    }
    for (Eigen::Index c = 0; c < cols; ++c) out(r, c) = row[static_cast<std::size_t>(c)];
  }
  return out;
}

// {"re": [[...]], "im": [[...]]}, im optional.
Eigen::MatrixXcd complex_matrix(const json& j, const std::string& path) {
  expect_object(j, path, {"re", "im"});
  const json* re = find(j, "re");
  if (!re) throw ConfigError(join(path, "re"), "required key missing (expected array of rows)");
  const Eigen::MatrixXd real = real_matrix(*re, join(path, "re"));
  Eigen::MatrixXd imag = Eigen::MatrixXd::Zero(real.rows(), real.cols());
  if (const json* im = find(j, "im")) {
    imag = real_matrix(*im, join(path, "im"));
    if (imag.rows() != real.rows() || imag.cols() != real.cols()) {
      throw ConfigError(join(path, "im"), "shape must match re");
    }
  }
  Eigen::MatrixXcd out(real.rows(), real.cols());
  out.real() = real;
  out.imag() = imag;
  return out;
}

json complex_matrix_json(const Eigen::MatrixXcd& m) {
  json re = json::array(), im = json::array();
  bool any_imag = false;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json rr = json::array(), ii = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      rr.push_back(m(r, c).real());
      ii.push_back(m(r, c).imag());
      any_imag = any_imag || m(r, c).imag() != 0.0;
    }
    re.push_back(rr);
    im.push_back(ii);
  }
  json out = {{"re", re}};
  if (any_imag) out["im"] = im;
  return out;
}

MagnetSpec read_magnet(const json& j, const std::string& path) {
  expect_object(j, path, {"N", "J2", "J4"});
  MagnetSpec m;
  if (const json* v = find(j, "N")) m.N = integer(*v, join(path, "N"));
  read_number(j, path, "J2", m.J2);
  read_number(j, path, "J4", m.J4);
  return m;
}

BathSpec read_bath(const json& j, const std::string& path) {
  expect_object(j, path, {"gamma", "T", "cutoff"});
  BathSpec b;
  read_number(j, path, "gamma", b.gamma);
  read_number(j, path, "T", b.T);
  read_number(j, path, "cutoff", b.cutoff);
  return b;
}

// A single object applies to every apparatus; an array gives one each.
template <class T, class Reader>
std::vector<T> per_apparatus(const json* j, const std::string& path, std::size_t count, Reader read) {
  if (!j) return std::vector<T>(count);
  if (j->is_array()) {
    if (j->size() != count) {
      throw ConfigError(path, "expected " + std::to_string(count) + " entries (one per apparatus)");
    }
    std::vector<T> out;
    for (std::size_t i = 0; i < count; ++i) out.push_back(read((*j)[i], indexed(path, i)));
    return out;
  }
  return std::vector<T>(count, read(*j, path));
}

ScenarioSpec read_scenario(const json& j, const std::string& path) {
  expect_object(j, path,
                {"kind", "spin_state", "magnet", "bath", "schedule", "regions", "packet", "region_weights", "t_final"});
  ScenarioSpec s;
  const json* kind = find(j, "kind");
  if (!kind) throw ConfigError(join(path, "kind"), "required key missing (expected string)");
  try {
    s.kind = scenario_kind_from_string(string(*kind, join(path, "kind")));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(join(path, "kind"), e.what());
  }
  read_number(j, path, "t_final", s.t_final);

  const std::string state_path = join(path, "spin_state");
  if (const json* st = find(j, "spin_state")) {
    if (st->is_string()) {
      if (st->get<std::string>() != "epr") throw ConfigError(state_path, "expected \"epr\" or {re, im}");
      s.spin_state = epr_state();
    } else {
      s.spin_state = complex_matrix(*st, state_path);
    }
  } else if (spin_count(s.kind) == 2) {
    s.spin_state = epr_state();
  } else {
    throw ConfigError(state_path, "required key missing (expected {re, im} object)");
  }

  const std::size_t n_app = apparatus_count(s.kind);
  s.magnets = per_apparatus<MagnetSpec>(find(j, "magnet"), join(path, "magnet"), n_app, read_magnet);
  s.baths = per_apparatus<BathSpec>(find(j, "bath"), join(path, "bath"), n_app, read_bath);

  s.schedule.t_off = s.t_final;
  if (const json* sch = find(j, "schedule")) {
    const std::string sp = join(path, "schedule");
    expect_object(*sch, sp, {"g", "t_on", "t_off"});
    read_number(*sch, sp, "g", s.schedule.g);
    read_number(*sch, sp, "t_on", s.schedule.t_on);
    read_number(*sch, sp, "t_off", s.schedule.t_off);
  }

  if (const json* reg = find(j, "regions")) {
    const std::string rp = join(path, "regions");
    expect_object(*reg, rp, {"intervals", "k"});
    RegionSpec r;
    const json* iv = find(*reg, "intervals");
    if (!iv || !iv->is_array()) throw ConfigError(join(rp, "intervals"), "expected array of [a, b] pairs");
    for (std::size_t i = 0; i < iv->size(); ++i) {
      const auto pair = number_array((*iv)[i], indexed(join(rp, "intervals"), i));
      if (pair.size() != 2) throw ConfigError(indexed(join(rp, "intervals"), i), "expected [a, b]");
      r.intervals.emplace_back(pair[0], pair[1]);
    }
    read_number(*reg, rp, "k", r.k);
    s.regions = r;
    s.schedule.k = r.k;
  }

  if (const json* pk = find(j, "packet")) {
    const std::string pp = join(path, "packet");
    expect_object(*pk, pp, {"kind", "means", "widths"});
    PacketSpec p;
    if (const json* k = find(*pk, "kind")) {
      try {
        p.kind = packet_kind_from_string(string(*k, join(pp, "kind")));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(join(pp, "kind"), e.what());
      }
    }
    if (const json* v = find(*pk, "means")) p.means = number_array(*v, join(pp, "means"));
    if (const json* v = find(*pk, "widths")) p.widths = number_array(*v, join(pp, "widths"));
    s.packet = p;
  }

  if (const json* w = find(j, "region_weights")) s.region_weights = complex_matrix(*w, join(path, "region_weights"));
  return s;
}

IntegratorConfig read_integrator(const json& j, const std::string& path) {
  expect_object(j, path, {"rtol", "atol", "max_step", "negligible", "samples", "snapshots", "threads"});
  IntegratorConfig c;
  read_number(j, path, "rtol", c.rtol);
  read_number(j, path, "atol", c.atol);
  read_number(j, path, "max_step", c.max_step);
  read_number(j, path, "negligible", c.negligible);
  if (const json* v = find(j, "samples")) c.samples = integer(*v, join(path, "samples"));
  if (const json* v = find(j, "snapshots")) c.snapshot_times = number_array(*v, join(path, "snapshots"));
  if (const json* v = find(j, "threads")) {
    const int t = integer(*v, join(path, "threads"));
    if (t < 0) throw ConfigError(join(path, "threads"), "expected non-negative integer");
    c.threads = static_cast<unsigned>(t);
  }
  if (!(c.rtol > 0.0)) throw ConfigError(join(path, "rtol"), "must be positive");
  if (c.atol < 0.0) throw ConfigError(join(path, "atol"), "must be non-negative");
  if (!(c.negligible >= 0.0 && c.negligible < 1.0)) throw ConfigError(join(path, "negligible"), "must lie in [0, 1)");
  if (!(c.max_step > 0.0)) throw ConfigError(join(path, "max_step"), "must be positive");
  return c;
}

}  // namespace

RunConfig parse_config_text(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("invalid JSON: ") + e.what());
  }
  expect_object(doc, "", {"schema", "scenario", "integrator", "offdiag_bath", "readout", "output"});
  const json* schema = find(doc, "schema");
  if (!schema) throw ConfigError("schema", "required key missing (expected integer 1)");
  if (integer(*schema, "schema") != kConfigSchema) throw ConfigError("schema", "unsupported version (expected 1)");

  RunConfig c;
  const json* scenario = find(doc, "scenario");
  if (!scenario) throw ConfigError("scenario", "required key missing (expected object)");
  c.scenario = read_scenario(*scenario, "scenario");
  if (const json* v = find(doc, "integrator")) c.integrator = read_integrator(*v, "integrator");
  c.scenario.samples = c.integrator.samples;

  if (const json* v = find(doc, "offdiag_bath")) {
    try {
      c.offdiag_bath = offdiag_bath_from_string(string(*v, "offdiag_bath"));
    } catch (const std::invalid_argument& e) {
      throw ConfigError("offdiag_bath", e.what());
    }
  }
  if (const json* r = find(doc, "readout")) {
    expect_object(*r, "readout", {"threshold_fraction", "at"});
    read_number(*r, "readout", "threshold_fraction", c.threshold_fraction);
    if (const json* at = find(*r, "at")) c.readout_at = number(*at, "readout.at");
  }
  if (!(c.threshold_fraction > 0.0 && c.threshold_fraction < 1.0)) {
    throw ConfigError("readout.threshold_fraction", "must lie in (0, 1)");
  }
  if (const json* o = find(doc, "output")) {
    expect_object(*o, "output", {"dir"});
    if (const json* d = find(*o, "dir")) c.output_dir = string(*d, "output.dir");
  }

  c.scenario.validate();
  if (c.readout_at && (*c.readout_at < 0.0 || *c.readout_at > c.scenario.t_final)) {
    throw ConfigError("readout.at", "must lie in [0, t_final]");
  }
  return c;
}

RunConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

std::string to_json_text(const RunConfig& c, int indent) {
  const ScenarioSpec& s = c.scenario;
  json magnets = json::array(), baths = json::array();
  for (const auto& m : s.magnets) magnets.push_back({{"N", m.N}, {"J2", m.J2}, {"J4", m.J4}});
  for (const auto& b : s.baths) baths.push_back({{"gamma", b.gamma}, {"T", b.T}, {"cutoff", b.cutoff}});

  json scenario = {
      {"kind", std::string(to_string(s.kind))},
      {"spin_state", complex_matrix_json(s.spin_state)},
      {"magnet", magnets},
      {"bath", baths},
      {"schedule", {{"g", s.schedule.g}, {"t_on", s.schedule.t_on}, {"t_off", s.schedule.t_off}}},
      {"t_final", s.t_final},
  };
  if (s.regions) {
    json iv = json::array();
    for (const auto& [a, b] : s.regions->intervals) iv.push_back({a, b});
    scenario["regions"] = {{"intervals", iv}, {"k", s.regions->k}};
  }
  if (s.packet) {
    scenario["packet"] = {
        {"kind", std::string(to_string(s.packet->kind))}, {"means", s.packet->means}, {"widths", s.packet->widths}};
  }
  if (s.region_weights) scenario["region_weights"] = complex_matrix_json(*s.region_weights);

  json integrator = {
      {"rtol", c.integrator.rtol},
      {"atol", c.integrator.atol},
      {"negligible", c.integrator.negligible},
      {"samples", c.integrator.samples},
      {"snapshots", c.integrator.snapshot_times},
      {"threads", c.integrator.threads},
  };
  if (std::isfinite(c.integrator.max_step)) integrator["max_step"] = c.integrator.max_step;

  json readout = {{"threshold_fraction", c.threshold_fraction}};
  if (c.readout_at) readout["at"] = *c.readout_at;

  json doc = {
      {"schema", kConfigSchema},
      {"scenario", scenario},
      {"integrator", integrator},
      {"offdiag_bath", std::string(to_string(c.offdiag_bath))},
      {"readout", readout},
      {"output", {{"dir", c.output_dir}}},
  };
  return doc.dump(indent);
}

}  // namespace cwsim
