#include "fsiopt/problems.hpp"

#include "fsiopt/errors.hpp"

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <numbers>
#include <numeric>
#include <sstream>

namespace fsiopt {

namespace {

double to_double(const std::string &key, const std::string &text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used == text.size() && std::isfinite(v))
      return v;
  } catch (const std::exception &) {
  }
  throw ConfigError(key + ": '" + text + "' is not a number");
}

int to_int(const std::string &key, const std::string &text) {
  try {
    std::size_t used = 0;
    const long v = std::stol(text, &used);
    if (used == text.size())
      return static_cast<int>(v);
  } catch (const std::exception &) {
  }
  throw ConfigError(key + ": '" + text + "' is not an integer");
}

bool to_bool(const std::string &key, const std::string &text) {
  const std::string t = boost::algorithm::to_lower_copy(text);
  if (t == "true" || t == "yes" || t == "on" || t == "1")
    return true;
  if (t == "false" || t == "no" || t == "off" || t == "0")
    return false;
  throw ConfigError(key + ": '" + text + "' is not a boolean");
}

std::vector<double> to_list(const std::string &key, const std::string &text) {
  std::vector<std::string> parts;
  boost::algorithm::split(parts, text, boost::is_any_of(","));
  std::vector<double> out;
  for (auto &p : parts) {
    boost::algorithm::trim(p);
    if (!p.empty())
      out.push_back(to_double(key, p));
  }
  if (out.empty())
    throw ConfigError(key + ": empty list");
  return out;
}

std::string format(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::vector<std::pair<double, double>> parse_inline_table(const std::string &key,
                                                          const std::string &text) {
  std::vector<std::string> parts;
  boost::algorithm::split(parts, text, boost::is_any_of(","));
  std::vector<std::pair<double, double>> table;
  for (auto &p : parts) {
    boost::algorithm::trim(p);
    const auto colon = p.find(':');
    if (colon == std::string::npos)
      throw ConfigError(key + ": table entries are t:v");
    table.emplace_back(to_double(key, p.substr(0, colon)), to_double(key, p.substr(colon + 1)));
  }
  return table;
}

void check_table(const std::string &key, const std::vector<std::pair<double, double>> &table) {
  for (std::size_t i = 1; i < table.size(); ++i)
    if (!(table[i].first > table[i - 1].first))
      throw ConfigError(key + ": table times must increase");
}

using Setter = std::function<void(ProblemConfig &, const std::string &key, const std::string &value)>;

template <class Get> Setter real(Get get) {
  return [get](ProblemConfig &c, const std::string &k, const std::string &v) { get(c) = to_double(k, v); };
}
template <class Get> Setter integer(Get get) {
  return [get](ProblemConfig &c, const std::string &k, const std::string &v) { get(c) = to_int(k, v); };
}
template <class Get> Setter boolean(Get get) {
  return [get](ProblemConfig &c, const std::string &k, const std::string &v) { get(c) = to_bool(k, v); };
}

const std::map<std::string, Setter> &setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> s;
    s["problem.name"] = [](ProblemConfig &c, const std::string &k, const std::string &v) {
      try {
        c.kind = parse_problem_kind(v);
      } catch (const std::invalid_argument &e) {
        throw ConfigError(k + ": " + e.what());
      }
    };
    s["problem.refinements"] = integer([](ProblemConfig &c) -> int & { return c.refinements; });
    s["problem.execution"] = [](ProblemConfig &c, const std::string &k, const std::string &v) {
      if (v == "parallel")
        c.execution = Execution::Parallel;
      else if (v == "serial")
        c.execution = Execution::Serial;
      else
        throw ConfigError(k + ": expected parallel or serial");
    };
    s["problem.mesh_file"] = [](ProblemConfig &c, const std::string &, const std::string &v) {
      c.mesh_file = v == "none" ? std::filesystem::path{} : std::filesystem::path(v);
    };
    s["problem.quadrature_points"] = integer([](ProblemConfig &c) -> int & { return c.quadrature_points; });
    s["problem.pin_pressure"] = boolean([](ProblemConfig &c) -> bool & { return c.pin_pressure; });
    s["problem.memory_budget_mb"] = [](ProblemConfig &c, const std::string &k, const std::string &v) {
      const double mb = to_double(k, v);
      if (mb < 0)
        throw ConfigError(k + ": must be non-negative");
      c.memory_budget = static_cast<std::size_t>(mb * 1024 * 1024);
    };

    s["material.rho_f"] = real([](ProblemConfig &c) -> double & { return c.material.rho_f; });
    s["material.nu_f"] = real([](ProblemConfig &c) -> double & { return c.material.nu_f; });
    s["material.rho_s"] = real([](ProblemConfig &c) -> double & { return c.material.rho_s; });
    s["material.mu"] = real([](ProblemConfig &c) -> double & { return c.material.mu; });
    s["material.nu_s"] = real([](ProblemConfig &c) -> double & { return c.material.nu_s; });
    s["material.lambda"] = real([](ProblemConfig &c) -> double & { return c.material.lambda; });
    s["material.alpha_mesh"] = real([](ProblemConfig &c) -> double & { return c.material.alpha_mesh; });
    s["material.control_mode"] = [](ProblemConfig &c, const std::string &k, const std::string &v) {
      if (v == "poisson-locked")
        c.material.control_mode = ControlMode::PoissonLocked;
      else if (v == "mu-only")
        c.material.control_mode = ControlMode::MuOnly;
      else
        throw ConfigError(k + ": expected poisson-locked or mu-only");
    };
    s["material.control_region"] = integer([](ProblemConfig &c) -> int & { return c.material.control_region; });

    s["control.q0"] = real([](ProblemConfig &c) -> double & { return c.q0; });

    s["inflow.mean"] = real([](ProblemConfig &c) -> double & { return c.inflow_mean; });
    s["inflow.ramp"] = real([](ProblemConfig &c) -> double & { return c.inflow_ramp; });
    s["inflow.peak_factor"] = real([](ProblemConfig &c) -> double & { return c.inflow_profile.peak_factor; });
    s["inflow.y_min"] = real([](ProblemConfig &c) -> double & { return c.inflow_profile.y_min; });
    s["inflow.y_max"] = real([](ProblemConfig &c) -> double & { return c.inflow_profile.y_max; });
    s["inflow.table"] = [](ProblemConfig &c, const std::string &k, const std::string &v) {
      if (v == "none" || v.empty())
        c.inflow_table.clear();
      else if (v == "default")
        c.inflow_table = default_flapping_pulse();
      else if (v.find(':') != std::string::npos)
        c.inflow_table = parse_inline_table(k, v);
      else
        c.inflow_table = read_inflow_table(v);
      check_table(k, c.inflow_table);
    };

    s["time.scheme"] = [](ProblemConfig &c, const std::string &k, const std::string &v) {
      try {
        c.scheme.variant = parse_theta_variant(v);
      } catch (const std::invalid_argument &e) {
        throw ConfigError(k + ": " + e.what());
      }
    };
    s["time.k"] = real([](ProblemConfig &c) -> double & { return c.scheme.k; });
    s["time.steps"] = integer([](ProblemConfig &c) -> int & { return c.scheme.steps; });

    s["functional.kind"] = [](ProblemConfig &c, const std::string &k, const std::string &v) {
      try {
        c.functional.kind = parse_functional_kind(v);
      } catch (const std::invalid_argument &e) {
        throw ConfigError(k + ": " + e.what());
      }
    };
    s["functional.target"] = [](ProblemConfig &c, const std::string &k, const std::string &v) {
      if (v == "auto") {
        c.auto_target = true;
      } else {
        c.auto_target = false;
        c.functional.target = to_double(k, v);
      }
    };
    s["functional.reference_mu"] = real([](ProblemConfig &c) -> double & { return c.reference_mu; });
    s["functional.alpha"] = real([](ProblemConfig &c) -> double & { return c.functional.alpha; });
    s["functional.q_ref"] = real([](ProblemConfig &c) -> double & { return c.functional.q_ref; });
    s["functional.point"] = [](ProblemConfig &c, const std::string &k, const std::string &v) {
      const auto p = to_list(k, v);
      if (p.size() != 2)
        throw ConfigError(k + ": expected x,y");
      c.functional.point = {p[0], p[1]};
    };
    s["functional.drag_markers"] = [](ProblemConfig &c, const std::string &k, const std::string &v) {
      try {
        c.functional.drag_markers = parse_marker_set(v);
      } catch (const std::invalid_argument &e) {
        throw ConfigError(k + ": " + e.what());
      }
    };

    s["newton.tolerance"] = real([](ProblemConfig &c) -> double & { return c.newton.tolerance; });
    s["newton.max_iterations"] = integer([](ProblemConfig &c) -> int & { return c.newton.max_iterations; });
    s["newton.backtrack"] = real([](ProblemConfig &c) -> double & { return c.newton.backtrack; });
    s["newton.max_backtracks"] = integer([](ProblemConfig &c) -> int & { return c.newton.max_backtracks; });
    s["newton.reuse_low"] = real([](ProblemConfig &c) -> double & { return c.newton.reuse_low; });
    s["newton.reuse_high"] = real([](ProblemConfig &c) -> double & { return c.newton.reuse_high; });
    s["newton.absolute_floor"] = real([](ProblemConfig &c) -> double & { return c.newton.absolute_floor; });
    s["newton.always_rebuild"] = boolean([](ProblemConfig &c) -> bool & { return c.newton.always_rebuild; });

    s["optimizer.gamma"] = real([](ProblemConfig &c) -> double & { return c.optimizer.gamma; });
    s["optimizer.beta"] = real([](ProblemConfig &c) -> double & { return c.optimizer.beta; });
    s["optimizer.tolerance"] = real([](ProblemConfig &c) -> double & { return c.optimizer.tolerance; });
    s["optimizer.relative_tolerance"] =
        real([](ProblemConfig &c) -> double & { return c.optimizer.relative_tolerance; });
    s["optimizer.max_iterations"] = integer([](ProblemConfig &c) -> int & { return c.optimizer.max_iterations; });
    s["optimizer.max_armijo_trials"] =
        integer([](ProblemConfig &c) -> int & { return c.optimizer.max_armijo_trials; });

    s["flapping.length"] = real([](ProblemConfig &c) -> double & { return c.flapping.length; });
    s["flapping.fluid_height"] = real([](ProblemConfig &c) -> double & { return c.flapping.fluid_height; });
    s["flapping.wall_thickness"] = real([](ProblemConfig &c) -> double & { return c.flapping.wall_thickness; });
    s["flapping.flap_x0"] = real([](ProblemConfig &c) -> double & { return c.flapping.flap_x0; });
    s["flapping.flap_x1"] = real([](ProblemConfig &c) -> double & { return c.flapping.flap_x1; });
    s["flapping.gap"] = real([](ProblemConfig &c) -> double & { return c.flapping.gap; });

    s["beam.length"] = real([](ProblemConfig &c) -> double & { return c.beam_length; });
    s["beam.thickness"] = real([](ProblemConfig &c) -> double & { return c.beam_thickness; });
    s["beam.nx"] = integer([](ProblemConfig &c) -> int & { return c.beam_nx; });
    s["beam.ny"] = integer([](ProblemConfig &c) -> int & { return c.beam_ny; });
    s["beam.initial_deflection"] = real([](ProblemConfig &c) -> double & { return c.beam_deflection; });

    s["beam.mode_iterations"] = integer([](ProblemConfig &c) -> int & { return c.beam_mode_iterations; });
    s["grad_check.fd_steps"] = [](ProblemConfig &c, const std::string &k, const std::string &v) {
      c.fd_steps = to_list(k, v);
    };
    s["grad_check.threshold"] = real([](ProblemConfig &c) -> double & { return c.grad_check_threshold; });
    return s;
  }();
  return table;
}

std::pair<std::string, std::string> split_override(const std::string &text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos)
    throw ConfigError("override '" + text + "' is not key=value");
  return {boost::algorithm::trim_copy(text.substr(0, eq)),
          boost::algorithm::trim_copy(text.substr(eq + 1))};
}

void validate(const ProblemConfig &c) {
  try {
    c.material.check();
    c.scheme.check();
    c.optimizer.check();
  } catch (const std::invalid_argument &e) {
    throw ConfigError(e.what());
  }
  if (c.refinements < 0)
    throw ConfigError("problem.refinements must be non-negative");
  if (c.quadrature_points < 2 || c.quadrature_points > 5)
    throw ConfigError("problem.quadrature_points must be between 2 and 5");
  if (!(c.q0 > 0.0))
    throw ConfigError("control.q0 must be positive");
  if (c.functional.alpha < 0.0)
    throw ConfigError("functional.alpha must be non-negative");
  if (!(c.newton.tolerance > 0.0 && c.newton.tolerance < 1.0))
    throw ConfigError("newton.tolerance must lie in (0, 1)");
  if (c.newton.max_backtracks < 1 || c.newton.max_iterations < 1)
    throw ConfigError("newton iteration limits must be positive");
  if (!(c.newton.backtrack > 0.0 && c.newton.backtrack < 1.0))
    throw ConfigError("newton.backtrack must lie in (0, 1)");
  if (c.beam_mode_iterations < 0)
    throw ConfigError("beam.mode_iterations must be non-negative");
  if (c.beam_nx < 1 || c.beam_ny < 1)
    throw ConfigError("beam cell counts must be positive");
  for (double h : c.fd_steps)
    if (!(h > 0.0))
      throw ConfigError("grad_check.fd_steps must be positive");
}

} // namespace

ProblemKind parse_problem_kind(const std::string &name) {
  const std::string n = boost::algorithm::to_lower_copy(name);
  if (n == "fsi1")
    return ProblemKind::FSI1;
  if (n == "fsi3")
    return ProblemKind::FSI3;
  if (n == "flapping")
    return ProblemKind::Flapping;
  if (n == "beam")
    return ProblemKind::Beam;
  throw std::invalid_argument("unknown problem '" + name + "'");
}

std::string problem_kind_name(ProblemKind k) {
  switch (k) {
  case ProblemKind::FSI1:
    return "FSI1";
  case ProblemKind::FSI3:
    return "FSI3";
  case ProblemKind::Flapping:
    return "Flapping";
  case ProblemKind::Beam:
    return "Beam";
  }
  return "?";
}

std::vector<std::pair<double, double>> default_flapping_pulse() {
  const double T = 0.579375;
  std::vector<std::pair<double, double>> table;
  for (int i = 0; i <= 40; ++i) {
    const double t = T * i / 40.0;
    table.emplace_back(t, 20.0 * std::sin(std::numbers::pi * t / T));
  }
  table.back().second = 0.0;
  return table;
}

ProblemConfig default_config(ProblemKind kind) {
  ProblemConfig c;
  c.kind = kind;
  c.functional.point = {0.6, 0.2};
  switch (kind) {
  case ProblemKind::FSI1:
    c.material.mu = 0.5e6;
    c.q0 = 5000.0;
    c.inflow_mean = 0.2;
    c.scheme = {ThetaVariant::BackwardEuler, 1.0, 25};
    c.functional.kind = FunctionalKind::TipDisplacementTracking;
    c.functional.alpha = 1.0;
    c.functional.q_ref = 5e5;
    c.auto_target = true;
    c.reference_mu = 0.5e6;
    c.newton.absolute_floor = 1e-10;
    c.optimizer.tolerance = 1e-3;
    c.optimizer.max_iterations = 10;
    break;
  case ProblemKind::FSI3:
    c.material.mu = 2e6;
    c.q0 = 2e6;
    c.inflow_mean = 2.0;
    c.inflow_ramp = 2.0;
    c.scheme = {ThetaVariant::ShiftedCrankNicolson, 1e-3, 200};
    c.functional.kind = FunctionalKind::TipDisplacementTracking;
    c.functional.alpha = 0.1;
    c.functional.q_ref = 5e5;
    c.functional.target = 2.27007e-5;
    c.newton.absolute_floor = 1e-10;
    c.optimizer.tolerance = 1e-3;
    c.optimizer.max_iterations = 30;
    break;
  case ProblemKind::Flapping:
    c.material.rho_f = 100.0;
    c.material.rho_s = 100.0;
    c.material.nu_f = 0.1;
    c.material.mu = 1e9;
    c.material.control_region = 1;
    c.q0 = 2e7;
    c.inflow_profile = {0.15, 0.0, c.flapping.fluid_height};
    c.inflow_mean = 0.0;
    c.inflow_table = default_flapping_pulse();
    c.scheme = {ThetaVariant::ShiftedCrankNicolson, 0.579375 / 618, 618};
    c.functional.kind = FunctionalKind::DragAtEndTime;
    c.functional.drag_markers = bit(Marker::DragBoundary);
    c.functional.point = {0.5 * (c.flapping.flap_x0 + c.flapping.flap_x1),
                          0.5 * (c.flapping.fluid_height - c.flapping.gap)};
    c.functional.alpha = 1.0;
    c.functional.q_ref = 5e6;
    c.newton.absolute_floor = 1e-8;
    c.optimizer.tolerance = 1e-3;
    c.optimizer.max_iterations = 10;
    break;
  case ProblemKind::Beam:
    c.material.mu = 0.5e6;
    c.q0 = 0.5e6;
    c.inflow_mean = 0.0;
    c.scheme = {ThetaVariant::BackwardEuler, 0.02, 25};
    c.functional.kind = FunctionalKind::TipDisplacementTracking;
    c.functional.point = {c.beam_length, 0.5 * c.beam_thickness};
    c.newton.absolute_floor = 1e-10;
    break;
  }
  if (kind == ProblemKind::FSI1 || kind == ProblemKind::FSI3)
    c.functional.drag_markers = bit(Marker::Cylinder) | bit(Marker::Interface);
  return c;
}

void set_config_value(ProblemConfig &config, const std::string &key, const std::string &value) {
  const auto &s = setters();
  const auto it = s.find(key);
  if (it == s.end())
    throw ConfigError("unknown config key '" + key + "'");
  try {
    it->second(config, key, boost::algorithm::trim_copy(value));
  } catch (const ConfigError &) {
    throw;
  } catch (const std::exception &e) {
    throw ConfigError(key + ": " + e.what());
  }
}

std::vector<std::pair<double, double>> read_inflow_table(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError("cannot open inflow table " + path.string());
  std::vector<std::pair<double, double>> table;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos)
      line.erase(hash);
    boost::algorithm::trim(line);
    if (line.empty())
      continue;
    std::vector<std::string> parts;
    boost::algorithm::split(parts, line, boost::is_any_of(",; \t"), boost::token_compress_on);
    const std::string where = path.string() + ":" + std::to_string(number);
    if (parts.size() != 2)
      throw ConfigError(where + ": expected t,v");
    if (table.empty() && !std::isdigit(static_cast<unsigned char>(parts[0][0])) && parts[0][0] != '-' &&
        parts[0][0] != '.')
      continue; // header
    table.emplace_back(to_double(where, parts[0]), to_double(where, parts[1]));
  }
  if (table.empty())
    throw ConfigError("inflow table " + path.string() + " is empty");
  check_table(path.string(), table);
  return table;
}

ProblemConfig load_config(const std::filesystem::path &path, const std::vector<std::string> &overrides) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  if (!path.empty()) {
    try {
      pt::read_ini(path.string(), tree);
    } catch (const pt::ini_parser_error &e) {
      throw ConfigError(e.what());
    }
  }
  std::vector<std::pair<std::string, std::string>> entries;
  for (const auto &[section, keys] : tree) {
    if (keys.empty())
      throw ConfigError("key '" + section + "' outside a section");
    for (const auto &[key, value] : keys)
      entries.emplace_back(section + "." + key, value.get_value<std::string>());
  }
  const std::size_t from_file = entries.size();
  for (const auto &o : overrides)
    entries.push_back(split_override(o));

  std::string name = "FSI1";
  for (const auto &[k, v] : entries)
    if (k == "problem.name")
      name = v;
  ProblemConfig config;
  try {
    config = default_config(parse_problem_kind(name));
  } catch (const std::invalid_argument &e) {
    throw ConfigError(std::string("problem.name: ") + e.what());
  }
  const auto base = path.empty() ? std::filesystem::path{} : path.parent_path();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    auto [k, v] = entries[i];
    const bool relative = i < from_file && !v.empty() && std::filesystem::path(v).is_relative();
    if (relative && k == "inflow.table" && v != "none" && v != "default" && v.find(':') == std::string::npos)
      v = (base / v).string();
    if (relative && k == "problem.mesh_file" && v != "none")
      v = (base / v).string();
    set_config_value(config, k, v);
  }
  validate(config);
  return config;
}

std::string config_to_ini(const ProblemConfig &c) {
  std::ostringstream o;
  const auto &m = c.material;
  o << "[problem]\n"
    << "name = " << problem_kind_name(c.kind) << "\n"
    << "refinements = " << c.refinements << "\n"
    << "execution = " << (c.execution == Execution::Parallel ? "parallel" : "serial") << "\n"
    << "mesh_file = " << (c.mesh_file.empty() ? std::string("none") : c.mesh_file.string()) << "\n"
    << "quadrature_points = " << c.quadrature_points << "\n"
    << "pin_pressure = " << (c.pin_pressure ? "true" : "false") << "\n"
    << "memory_budget_mb = " << format(double(c.memory_budget) / (1024.0 * 1024.0)) << "\n\n";
  o << "[material]\n"
    << "rho_f = " << format(m.rho_f) << "\n"
    << "nu_f = " << format(m.nu_f) << "\n"
    << "rho_s = " << format(m.rho_s) << "\n"
    << "mu = " << format(m.mu) << "\n"
    << "nu_s = " << format(m.nu_s) << "\n"
    << "lambda = " << format(m.lambda) << "\n"
    << "alpha_mesh = " << format(m.alpha_mesh) << "\n"
    << "control_mode = " << (m.control_mode == ControlMode::PoissonLocked ? "poisson-locked" : "mu-only") << "\n"
    << "control_region = " << m.control_region << "\n\n";
  o << "[control]\nq0 = " << format(c.q0) << "\n\n";
  o << "[inflow]\n"
    << "mean = " << format(c.inflow_mean) << "\n"
    << "ramp = " << format(c.inflow_ramp) << "\n"
    << "peak_factor = " << format(c.inflow_profile.peak_factor) << "\n"
    << "y_min = " << format(c.inflow_profile.y_min) << "\n"
    << "y_max = " << format(c.inflow_profile.y_max) << "\n"
    << "table = ";
  if (c.inflow_table.empty())
    o << "none";
  for (std::size_t i = 0; i < c.inflow_table.size(); ++i)
    o << (i ? ", " : "") << format(c.inflow_table[i].first) << ":" << format(c.inflow_table[i].second);
  o << "\n\n";
  o << "[time]\n"
    << "scheme = " << theta_variant_name(c.scheme.variant) << "\n"
    << "k = " << format(c.scheme.k) << "\n"
    << "steps = " << c.scheme.steps << "\n\n";
  const auto &f = c.functional;
  o << "[functional]\n"
    << "kind = " << functional_kind_name(f.kind) << "\n"
    << "target = " << (c.auto_target ? std::string("auto") : format(f.target)) << "\n"
    << "reference_mu = " << format(c.reference_mu) << "\n"
    << "alpha = " << format(f.alpha) << "\n"
    << "q_ref = " << format(f.q_ref) << "\n"
    << "point = " << format(f.point.x) << ", " << format(f.point.y) << "\n"
    << "drag_markers = " << marker_set_names(f.drag_markers) << "\n\n";
  const auto &n = c.newton;
  o << "[newton]\n"
    << "tolerance = " << format(n.tolerance) << "\n"
    << "max_iterations = " << n.max_iterations << "\n"
    << "backtrack = " << format(n.backtrack) << "\n"
    << "max_backtracks = " << n.max_backtracks << "\n"
    << "reuse_low = " << format(n.reuse_low) << "\n"
    << "reuse_high = " << format(n.reuse_high) << "\n"
    << "absolute_floor = " << format(n.absolute_floor) << "\n"
    << "always_rebuild = " << (n.always_rebuild ? "true" : "false") << "\n\n";
  const auto &op = c.optimizer;
  o << "[optimizer]\n"
    << "gamma = " << format(op.gamma) << "\n"
    << "beta = " << format(op.beta) << "\n"
    << "tolerance = " << format(op.tolerance) << "\n"
    << "relative_tolerance = " << format(op.relative_tolerance) << "\n"
    << "max_iterations = " << op.max_iterations << "\n"
    << "max_armijo_trials = " << op.max_armijo_trials << "\n\n";
  o << "[flapping]\n"
    << "length = " << format(c.flapping.length) << "\n"
    << "fluid_height = " << format(c.flapping.fluid_height) << "\n"
    << "wall_thickness = " << format(c.flapping.wall_thickness) << "\n"
    << "flap_x0 = " << format(c.flapping.flap_x0) << "\n"
    << "flap_x1 = " << format(c.flapping.flap_x1) << "\n"
    << "gap = " << format(c.flapping.gap) << "\n\n";
  o << "[beam]\n"
    << "length = " << format(c.beam_length) << "\n"
    << "thickness = " << format(c.beam_thickness) << "\n"
    << "nx = " << c.beam_nx << "\n"
    << "ny = " << c.beam_ny << "\n"
    << "initial_deflection = " << format(c.beam_deflection) << "\n"
    << "mode_iterations = " << c.beam_mode_iterations << "\n\n";
  o << "[grad_check]\nfd_steps = ";
  for (std::size_t i = 0; i < c.fd_steps.size(); ++i)
    o << (i ? ", " : "") << format(c.fd_steps[i]);
  o << "\nthreshold = " << format(c.grad_check_threshold) << "\n";
  return o.str();
}

BoundaryConditions boundary_conditions(const ProblemConfig &c) {
  std::vector<std::pair<std::string, BoundaryRule>> table;
  switch (c.kind) {
  case ProblemKind::FSI1:
  case ProblemKind::FSI3:
    table = {{"Inflow", {VelocityCondition::Inflow, true}},
             {"Outflow", {VelocityCondition::Free, true}},
             {"Wall", {VelocityCondition::Zero, true}},
             {"Cylinder", {VelocityCondition::Zero, true}}};
    break;
  case ProblemKind::Flapping:
    table = {{"Inflow", {VelocityCondition::Inflow, true}},
             {"Outflow", {VelocityCondition::Free, true}},
             {"Clamp", {VelocityCondition::Zero, true}},
             {"Wall", {VelocityCondition::Free, false}}};
    break;
  case ProblemKind::Beam:
    table = {{"Clamp", {VelocityCondition::Zero, true}}, {"Free", {VelocityCondition::Free, false}}};
    break;
  }
  return BoundaryConditions::from_names(table, c.inflow_profile);
}

Mesh build_mesh(const ProblemConfig &c) {
  if (!c.mesh_file.empty()) {
    std::ifstream in(c.mesh_file);
    if (!in)
      throw ConfigError("cannot open mesh file " + c.mesh_file.string());
    Mesh mesh;
    try {
      mesh = read_mesh(in);
    } catch (const std::runtime_error &e) {
      throw ConfigError(c.mesh_file.string() + ": " + e.what());
    }
    for (int r = 0; r < c.refinements; ++r)
      mesh = refine_uniform(mesh);
    if (const auto problems = validate(mesh); !problems.empty())
      throw ConfigError(c.mesh_file.string() + ": " + problems.front());
    return mesh;
  }
  switch (c.kind) {
  case ProblemKind::FSI1:
  case ProblemKind::FSI3:
    return build_fsi_benchmark_mesh(c.refinements);
  case ProblemKind::Flapping:
    return build_flapping_mesh(c.refinements, c.flapping);
  case ProblemKind::Beam:
    return build_beam_mesh(c.beam_nx, c.beam_ny, c.beam_length, c.beam_thickness, c.refinements);
  }
  throw std::logic_error("unknown problem kind");
}

std::vector<double> beam_mode_shape(const FsiOperator &op, const Point &tip, double deflection,
                                    int iterations) {
  const DofMap &dofs = op.dofs();
  const std::size_t n = dofs.n_dofs();
  const std::vector<double> zero(n, 0.0);
  // with k = 1: k dE/dU = J(theta = 1) - J(theta = 0); the velocity rows of
  // J(theta = 0) against velocity columns are rho_s times the mass matrix
  const SparseOperator j1 = op.jacobian(zero, zero, {1.0, 1.0, 0.5});
  const SparseOperator j0 = op.jacobian(zero, zero, {1.0, 0.0, 0.5});
  const auto offsets = j1.row_offsets();
  const auto cols = j1.column_indices();
  const auto v1 = j1.values();
  const auto v0 = j0.values();

  // momentum rows against displacement columns, stored in the displacement
  // rows of the same node
  std::vector<SparseOperator::Triplet> t;
  std::vector<char> has_row(n, 0);
  for (std::size_t r = 0; r < n; ++r) {
    const int row = static_cast<int>(r);
    if (dofs.field_of(row) != Field::Velocity || dofs.is_constrained(row + 2))
      continue;
    has_row[row + 2] = 1;
    for (std::size_t e = offsets[r]; e < offsets[r + 1]; ++e)
      if (dofs.field_of(cols[e]) == Field::Displacement && !dofs.is_constrained(cols[e]))
        t.push_back({row + 2, cols[e], v1[e] - v0[e]});
  }
  for (std::size_t r = 0; r < n; ++r)
    if (!has_row[r])
      t.push_back({static_cast<int>(r), static_cast<int>(r), 1.0});
  const LUFactorization stiffness(SparseOperator::from_triplets(n, t));

  const auto mass = [&](const std::vector<double> &u) {
    std::vector<double> f(n, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
      const int row = static_cast<int>(r);
      if (dofs.field_of(row) != Field::Velocity || !has_row[row + 2])
        continue;
      for (std::size_t e = offsets[r]; e < offsets[r + 1]; ++e)
        if (dofs.field_of(cols[e]) == Field::Velocity)
          f[row + 2] += v0[e] * u[cols[e] + 2];
    }
    return f;
  };

  // uniform load in y
  std::vector<double> u(n, 0.0);
  for (std::size_t i = 0; i < dofs.n_nodes(); ++i)
    u[dofs.node_dof(static_cast<int>(i), Field::Displacement, 1)] = 1.0;
  for (int it = 0; it <= iterations; ++it) {
    u = stiffness.solve(mass(u));
    const double scale = std::sqrt(std::inner_product(u.begin(), u.end(), u.begin(), 0.0));
    for (auto &x : u)
      x /= scale;
  }
  const double at_tip = evaluate_at_point(dofs, u, Field::Displacement, tip).y;
  if (!(std::abs(at_tip) > 0.0))
    throw std::runtime_error("mode shape vanishes at the evaluation point");
  for (auto &x : u)
    x *= deflection / at_tip;
  return u;
}

Problem::Problem(ProblemConfig config) : config_(std::move(config)) {
  validate(config_);
  mesh_ = std::make_unique<Mesh>(build_mesh(config_));
  dofs_ = std::make_unique<DofMap>(*mesh_, boundary_conditions(config_));
  if (config_.pin_pressure && dofs_->n_pressure_dofs() > 0)
    dofs_->add_constraint(static_cast<int>(dofs_->n_dofs() - dofs_->n_pressure_dofs()), 0.0);
  AssemblyOptions opts;
  opts.execution = config_.execution;
  opts.cell_points = opts.facet_points = config_.quadrature_points;
  op_ = std::make_unique<FsiOperator>(*dofs_, config_.material, opts);
  op_->set_control(config_.q0);
  inflow_ = InflowSchedule{config_.inflow_mean, config_.inflow_ramp, config_.inflow_table};

  u0_.assign(dofs_->n_dofs(), 0.0);
  if (config_.kind == ProblemKind::Beam)
    u0_ = beam_mode_shape(*op_, config_.functional.point, config_.beam_deflection,
                          config_.beam_mode_iterations);
  dofs_->apply_constraints(u0_, inflow_(0.0));
}

ForwardOptions Problem::forward_options() const {
  ForwardOptions o;
  o.newton = config_.newton;
  o.memory_budget = config_.memory_budget;
  return o;
}

ForwardResult Problem::forward(double q, const ForwardOptions &options) {
  op_->set_control(q);
  return run_forward(*op_, config_.scheme, inflow_, u0_, options);
}

const CostFunctional &Problem::functional() {
  if (config_.auto_target && !target_resolved_) {
    const double q = op_->control();
    const auto ref = forward(config_.reference_mu);
    config_.functional.target =
        evaluate_at_point(*dofs_, ref.trajectory.back(), Field::Displacement, config_.functional.point).x;
    op_->set_control(q);
    target_resolved_ = true;
  }
  return config_.functional;
}

FsiReducedFunctional Problem::reduced_functional() {
  const CostFunctional &f = functional();
  return FsiReducedFunctional(*op_, config_.scheme, inflow_, u0_, f, forward_options());
}

} // namespace fsiopt
