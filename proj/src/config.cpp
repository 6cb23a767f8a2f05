#include "xifrac/config.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace xifrac {

ConfigError::ConfigError(std::string key, int line, const std::string& what)
    : std::runtime_error(what), key_(std::move(key)), line_(line) {}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double to_double(const std::string& s) {
  if (s.empty()) throw std::invalid_argument("expected a number");
  char* end = nullptr;
  errno = 0;
  const double x = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || errno == ERANGE) throw std::invalid_argument("expected a number, got '" + s + "'");
  return x;
}

int to_int(const std::string& s) {
  char* end = nullptr;
  errno = 0;
  const long x = std::strtol(s.c_str(), &end, 10);
  if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE || x < INT32_MIN || x > INT32_MAX) {
    throw std::invalid_argument("expected an integer, got '" + s + "'");
  }
  return static_cast<int>(x);
}

bool to_bool(const std::string& s) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw std::invalid_argument("expected true/false, got '" + s + "'");
}

std::vector<double> to_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double(trim(item)));
  return out;
}

struct Field {
  std::string key;
  std::function<void(SimConfig&, const std::string&)> set;
  std::function<std::string(const SimConfig&)> get;
};

Field real(std::string key, double SimConfig::*member) {
  return {key, [member](SimConfig& c, const std::string& v) { c.*member = to_double(v); },
          [member](const SimConfig& c) { return format_double(c.*member); }};
}

template <class Sub>
Field real(std::string key, Sub SimConfig::*sub, double Sub::*member) {
  return {key, [sub, member](SimConfig& c, const std::string& v) { (c.*sub).*member = to_double(v); },
          [sub, member](const SimConfig& c) { return format_double((c.*sub).*member); }};
}

Field integer(std::string key, int SimConfig::*member) {
  return {key, [member](SimConfig& c, const std::string& v) { c.*member = to_int(v); },
          [member](const SimConfig& c) { return std::to_string(c.*member); }};
}

Field flag(std::string key, bool SimConfig::*member) {
  return {key, [member](SimConfig& c, const std::string& v) { c.*member = to_bool(v); },
          [member](const SimConfig& c) { return std::string(c.*member ? "true" : "false"); }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    using C = SimConfig;
    std::vector<Field> f;
    f.push_back(real("material.mu", &C::material, &MaterialParams::mu));
    f.push_back(real("material.G_c", &C::material, &MaterialParams::G_c));
    f.push_back(real("material.c_v", &C::material, &MaterialParams::c_v));
    f.push_back(real("material.eta", &C::material, &MaterialParams::eta));
    f.push_back({"regularization.mode",
                 [](C& c, const std::string& v) { c.regularization.mode = parse_xi_mode(v); },
                 [](const C& c) { return std::string(to_string(c.regularization.mode)); }});
    f.push_back({"regularization.update", [](C& c, const std::string& v) { c.xi_update = parse_xi_update(v); },
                 [](const C& c) { return std::string(to_string(c.xi_update)); }});
    f.push_back(real("regularization.zeta", &C::regularization, &RegularizationParams::zeta));
    f.push_back(real("regularization.alpha", &C::regularization, &RegularizationParams::alpha));
    f.push_back(real("regularization.xi_fixed", &C::regularization, &RegularizationParams::xi_fixed));
    f.push_back(real("regularization.xi_min", &C::regularization, &RegularizationParams::xi_min));
    f.push_back(real("regularization.xi_max", &C::regularization, &RegularizationParams::xi_max));
    f.push_back(real("regularization.xi_refine", &C::regularization, &RegularizationParams::xi_refine));
    f.push_back(integer("mesh.level_start", &C::level_start));
    f.push_back(integer("mesh.level_max", &C::level_max));
    f.push_back({"crack.model", [](C& c, const std::string& v) { c.crack_model = parse_crack_model(v); },
                 [](const C& c) { return std::string(to_string(c.crack_model)); }});
    f.push_back(real("crack.tip_y", &C::crack_tip_y));
    f.push_back(real("loading.rate", &C::load_rate));
    f.push_back(real("loading.dt", &C::dt));
    f.push_back(integer("loading.steps", &C::steps));
    f.push_back(flag("loading.stop_when_broken", &C::stop_when_broken));
    f.push_back(real("solver.staggered_tol", &C::staggered_tol));
    f.push_back(integer("solver.staggered_max_iterations", &C::staggered_max_iterations));
    f.push_back(real("solver.crack_tol", &C::crack_tol));
    f.push_back({"solver.linear", [](C& c, const std::string& v) { c.linear.kind = parse_linear_solver(v); },
                 [](const C& c) { return std::string(to_string(c.linear.kind)); }});
    f.push_back(real("solver.linear_tol", &C::linear, &SolverOptions::tolerance));
    f.push_back({"solver.linear_max_iterations",
                 [](C& c, const std::string& v) { c.linear.max_iterations = to_int(v); },
                 [](const C& c) { return std::to_string(c.linear.max_iterations); }});
    f.push_back(flag("amr.enabled", &C::amr_enabled));
    f.push_back(flag("amr.fixed_point", &C::amr_fixed_point));
    f.push_back(real("amr.coarsen_v_tol", &C::coarsen_v_tol));
    f.push_back({"output.dir", [](C& c, const std::string& v) { c.output_dir = v; },
                 [](const C& c) { return c.output_dir; }});
    f.push_back(integer("output.every", &C::output_every));
    f.push_back({"output.profile_ys", [](C& c, const std::string& v) { c.profile_ys = to_list(v); },
                 [](const C& c) {
                   std::string s;
                   for (std::size_t i = 0; i < c.profile_ys.size(); ++i) {
                     if (i) s += ", ";
                     s += format_double(c.profile_ys[i]);
                   }
                   return s;
                 }});
    f.push_back(integer("output.profile_samples", &C::profile_samples));
    return f;
  }();
  return table;
}

const Field* find_field(std::string_view key) {
  for (const auto& f : fields()) {
    if (f.key == key) return &f;
  }
  return nullptr;
}

void assign(SimConfig& config, const std::string& key, const std::string& value, int line) {
  const Field* f = find_field(key);
  const std::string where = line > 0 ? "line " + std::to_string(line) + ": " : "";
  if (!f) throw ConfigError(key, line, where + "unknown key '" + key + "'");
  try {
    f->set(config, value);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(key, line, where + key + ": " + e.what());
  }
}

// Constraint violations name their key in the message; attach the line that set it.
void validate_with_lines(const SimConfig& config, const std::map<std::string, int>& lines) {
  try {
    config.validate();
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    for (const auto& f : fields()) {
      if (msg.find(f.key) == std::string::npos) continue;
      const auto it = lines.find(f.key);
      const int line = it == lines.end() ? 0 : it->second;
      throw ConfigError(f.key, line, (line > 0 ? "line " + std::to_string(line) + ": " : "") + msg);
    }
    throw ConfigError("", 0, msg);
  }
}

}  // namespace

std::string format_double(double x) {
  char buf[40];
  for (int digits = 15; digits <= 17; ++digits) {
    std::snprintf(buf, sizeof buf, "%.*g", digits, x);
    if (std::strtod(buf, nullptr) == x) break;
  }
  return buf;
}

SimConfig parse_config(std::string_view text, const SimConfig& base) {
  SimConfig config = base;
  std::map<std::string, int> lines;
  std::string section;
  std::istringstream in{std::string(text)};
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = raw;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("", lineno, "line " + std::to_string(lineno) + ": malformed section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("", lineno, "line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (!section.empty() && key.find('.') == std::string::npos) key = section + "." + key;
    if (lines.count(key)) {
      throw ConfigError(key, lineno, "line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
    assign(config, key, value, lineno);
    lines[key] = lineno;
  }
  validate_with_lines(config, lines);
  return config;
}

SimConfig load_config(const std::filesystem::path& path, const SimConfig& base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", 0, "cannot open config file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str(), base);
  } catch (const ConfigError& e) {
    throw ConfigError(e.key(), e.line(), path.string() + ": " + e.what());
  }
}

void apply_override(SimConfig& config, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) throw ConfigError("", 0, "override must be key=value, got '" + std::string(assignment) + "'");
  SimConfig next = config;
  assign(next, trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)), 0);
  validate_with_lines(next, {});
  config = std::move(next);
}

std::string serialize(const SimConfig& config) {
  std::string out;
  for (const auto& f : fields()) out += f.key + " = " + f.get(config) + "\n";
  return out;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& f : fields()) keys.push_back(f.key);
  return keys;
}

}  // namespace xifrac
