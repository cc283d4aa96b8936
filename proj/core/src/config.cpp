#include "sqmle/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "sqmle/errors.hpp"

namespace sqmle {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

const std::vector<std::string> kSections = {"run", "model", "noise", "simulate", "kernel", "fit", "mc", "llt"};

}  // namespace

const std::vector<KeySpec>& config_keys() {
  static const std::vector<KeySpec> keys = {
      {"run.seed", "1", "base seed for every random stream"},
      {"run.workers", "1", "worker threads (mc replicates, llt h values)"},

      {"model.name", "trig-1d", "built-in model (trig-1d, trig-2d, ou-const, ou-exp) or expr"},
      {"model.drift", "", "drift expression a(x, alpha) when name = expr"},
      {"model.scale", "", "scale expression c(x, gamma) when name = expr"},
      {"model.p_alpha", "0", "drift parameter count for expr models (0: infer)"},
      {"model.p_gamma", "0", "scale parameter count for expr models (0: infer)"},
      {"model.theta_true", "", "true parameter (alpha..., gamma...) used to simulate"},
      {"model.lower", "-10", "lower bounds (one value broadcasts)"},
      {"model.upper", "10", "upper bounds (one value broadcasts)"},

      {"noise.kind", "nig", "driving noise: stable or nig"},
      {"noise.beta", "1.5", "stable index of the stable noise"},
      {"noise.eta", "5", "NIG tail parameter eta"},

      {"simulate.T", "1", "terminal time"},
      {"simulate.n", "1000", "number of observations"},
      {"simulate.fine_factor", "50", "Euler steps per observation"},
      {"simulate.x0", "0", "initial state"},

      {"kernel.grid_step", "0.001", "stable density table spacing"},
      {"kernel.tail_cutoff", "15", "switch to the tail series beyond this |y|"},
      {"kernel.abs_tol", "1e-10", "inversion quadrature tolerance"},
      {"kernel.direct", "false", "integrate on every evaluation instead of tabulating"},

      {"fit.beta", "1", "stable index of the quasi-likelihood"},
      {"fit.method", "simplex", "simplex or bfgs"},
      {"fit.restarts", "10", "number of random starts"},
      {"fit.max_iter", "2000", "iterations per start"},
      {"fit.xtol", "1e-8", "simplex diameter tolerance relative to 1 + |theta|"},
      {"fit.init", "box", "start distribution: box (uniform in bounds) or around (uniform near init_center)"},
      {"fit.init_halfwidth", "10", "half-width of the around window"},
      {"fit.init_center", "", "center of the around window (default theta_true)"},
      {"fit.level", "0.95", "confidence level of the intervals"},
      {"fit.theta_ref", "", "reference value for Studentization (default theta_true)"},

      {"mc.replicates", "200", "Monte Carlo replicates L"},
      {"mc.designs", "1:1000:50", "designs T:n:fine_factor, comma separated"},
      {"mc.record_timing", "false", "write wall-clock seconds (breaks byte-identical reruns)"},
      {"mc.failure_threshold", "0.1", "fraction of failed replicates that fails the run"},

      {"llt.kind", "tempered_stable", "stable, tempered_stable or gh_nig"},
      {"llt.beta", "1.5", "stable index (stable and tempered kinds)"},
      {"llt.lambda", "1", "tempering rate"},
      {"llt.gh_lambda", "-0.5", "GH index lambda (-0.5 is NIG)"},
      {"llt.eta", "5", "GH parameter eta"},
      {"llt.h_max", "0.1", "largest h"},
      {"llt.h_min", "0.001", "smallest h"},
      {"llt.h_count", "6", "number of log-spaced h values"},
      {"llt.half_width", "60", "density grid half-width"},
      {"llt.spacing", "0.01", "density grid spacing"},
      {"llt.noise_floor", "1e-8", "distances at or below this are excluded from the fit"},
      {"llt.curvature_limit", "0.1", "drop the largest h while the log-log curvature exceeds this"},
  };
  return keys;
}

Config::Config() {
  for (const auto& k : config_keys()) values_[k.key] = k.default_value;
}

void Config::set(const std::string& key, const std::string& value) {
  auto it = values_.find(key);
  if (it == values_.end()) throw UsageError("unknown config key '" + key + "'");
  it->second = trim(value);
}

void Config::merge_ini(std::istream& is, const std::string& source) {
  boost::property_tree::ptree pt;
  try {
    boost::property_tree::ini_parser::read_ini(is, pt);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw UsageError(source + ": " + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  for (const auto& [section, body] : pt) {
    if (body.empty()) throw UsageError(source + ": key '" + section + "' outside a section");
    if (std::find(kSections.begin(), kSections.end(), section) == kSections.end()) {
      throw UsageError(source + ": unknown config section '" + section + "'");
    }
    for (const auto& [name, node] : body) {
      const std::string key = section + "." + name;
      if (!values_.count(key)) throw UsageError(source + ": unknown config key '" + key + "'");
      values_[key] = trim(node.get_value<std::string>());
    }
  }
}

void Config::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file '" + path + "'");
  merge_ini(in, path);
}

void Config::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw UsageError("override '" + assignment + "' is not of the form section.key=value");
  set(trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

const std::string& Config::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw UsageError("unknown config key '" + key + "'");
  return it->second;
}

double Config::get_double(const std::string& key) const {
  const std::string& v = get(key);
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos == v.size() && std::isfinite(d)) return d;
  } catch (const std::exception&) {
  }
  throw UsageError("config key '" + key + "': expected a number, got '" + v + "'");
}

long Config::get_int(const std::string& key) const {
  const std::string& v = get(key);
  try {
    std::size_t pos = 0;
    const long d = std::stol(v, &pos);
    if (pos == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw UsageError("config key '" + key + "': expected an integer, got '" + v + "'");
}

std::uint64_t Config::get_u64(const std::string& key) const {
  const std::string& v = get(key);
  try {
    std::size_t pos = 0;
    if (!v.empty() && v[0] != '-') {
      const unsigned long long d = std::stoull(v, &pos);
      if (pos == v.size()) return d;
    }
  } catch (const std::exception&) {
  }
  throw UsageError("config key '" + key + "': expected a non-negative integer, got '" + v + "'");
}

bool Config::get_bool(const std::string& key) const {
  const std::string& v = get(key);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw UsageError("config key '" + key + "': expected true or false, got '" + v + "'");
}

std::vector<double> Config::get_list(const std::string& key) const {
  const std::string& v = get(key);
  std::vector<double> out;
  if (trim(v).empty()) return out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const std::string t = trim(item);
    try {
      std::size_t pos = 0;
      const double d = std::stod(t, &pos);
      if (pos != t.size() || !std::isfinite(d)) throw std::invalid_argument(t);
      out.push_back(d);
    } catch (const std::exception&) {
      throw UsageError("config key '" + key + "': bad list entry '" + t + "'");
    }
  }
  return out;
}

std::string Config::to_ini() const {
  std::ostringstream os;
  std::string section;
  for (const auto& k : config_keys()) {
    const auto dot = k.key.find('.');
    const std::string s = k.key.substr(0, dot);
    if (s != section) {
      if (!section.empty()) os << "\n";
      os << "[" << s << "]\n";
      section = s;
    }
    os << k.key.substr(dot + 1) << " = " << values_.at(k.key) << "\n";
  }
  return os.str();
}

std::vector<std::string> preset_names() { return {"nig-1d", "nig-2d", "stable15-1d", "stable15-2d"}; }

std::string preset_description(const std::string& name) {
  if (name == "nig-1d") return "NIG(eta=5) noise, T=1, n in {500,1000,3000}, one drift and one scale parameter";
  if (name == "nig-2d") return "NIG(eta=5) noise, T=1, n in {500,1000,3000}, two drift and two scale parameters";
  if (name == "stable15-1d") return "1.5-stable noise, T in {5,10}, n in {100,200,500}, one drift and one scale parameter";
  if (name == "stable15-2d") return "1.5-stable noise, T in {5,10}, n in {100,200,500}, two drift and two scale parameters";
  throw UsageError("unknown preset '" + name + "'");
}

std::string preset_text(const std::string& name) {
  // Bounds and start windows are theta_true +/- 10.
  if (name == "nig-1d") {
    return "[model]\nname = trig-1d\ntheta_true = -1, 1.5\nlower = -11, -8.5\nupper = 9, 11.5\n"
           "[noise]\nkind = nig\neta = 5\n"
           "[fit]\nbeta = 1\ninit = around\ninit_halfwidth = 10\n"
           "[mc]\ndesigns = 1:500:300, 1:1000:150, 1:3000:50\n";
  }
  if (name == "nig-2d") {
    return "[model]\nname = trig-2d\ntheta_true = -1, 1, 1.5, 0.5\nlower = -11, -9, -8.5, -9.5\nupper = 9, 11, 11.5, 10.5\n"
           "[noise]\nkind = nig\neta = 5\n"
           "[fit]\nbeta = 1\ninit = around\ninit_halfwidth = 10\n"
           "[mc]\ndesigns = 1:500:300, 1:1000:150, 1:3000:50\n";
  }
  if (name == "stable15-1d") {
    return "[model]\nname = trig-1d\ntheta_true = -1, 1.5\nlower = -11, -8.5\nupper = 9, 11.5\n"
           "[noise]\nkind = stable\nbeta = 1.5\n"
           "[fit]\nbeta = 1.5\ninit = around\ninit_halfwidth = 10\n"
           "[mc]\ndesigns = 5:100:250, 5:200:125, 5:500:50, 10:100:250, 10:200:125, 10:500:50\n";
  }
  if (name == "stable15-2d") {
    return "[model]\nname = trig-2d\ntheta_true = -1, 1, 1.5, 0.5\nlower = -11, -9, -8.5, -9.5\nupper = 9, 11, 11.5, 10.5\n"
           "[noise]\nkind = stable\nbeta = 1.5\n"
           "[fit]\nbeta = 1.5\ninit = around\ninit_halfwidth = 10\n"
           "[mc]\ndesigns = 5:100:250, 5:200:125, 5:500:50, 10:100:250, 10:200:125, 10:500:50\n";
  }
  throw UsageError("unknown preset '" + name + "'");
}

Config preset_config(const std::string& name) {
  Config cfg;
  std::istringstream is(preset_text(name));
  cfg.merge_ini(is, "preset " + name);
  return cfg;
}

namespace {

std::vector<double> broadcast(const Config& cfg, const std::string& key, std::size_t p) {
  std::vector<double> v = cfg.get_list(key);
  if (v.size() == 1) v.assign(p, v[0]);
  if (v.size() != p) {
    throw UsageError("config key '" + key + "': expected 1 or " + std::to_string(p) + " values, got " +
                     std::to_string(v.size()));
  }
  return v;
}

}  // namespace

ModelSpec model_from_config(const Config& cfg) {
  const std::string name = cfg.get("model.name");
  ModelSpec m;
  if (name == "expr") {
    if (cfg.get("model.drift").empty() || cfg.get("model.scale").empty()) {
      throw UsageError("config keys 'model.drift' and 'model.scale' are required when model.name = expr");
    }
    m = make_expression_model(cfg.get("model.drift"), cfg.get("model.scale"),
                              static_cast<int>(cfg.get_int("model.p_alpha")),
                              static_cast<int>(cfg.get_int("model.p_gamma")));
  } else {
    m = make_builtin_model(name);
  }
  const auto pa = static_cast<std::size_t>(m.p_alpha());
  const std::size_t p = pa + static_cast<std::size_t>(m.p_gamma());
  m.bounds.lower = broadcast(cfg, "model.lower", p);
  m.bounds.upper = broadcast(cfg, "model.upper", p);
  const auto tt = cfg.get_list("model.theta_true");
  if (!tt.empty()) {
    if (tt.size() != p) {
      throw UsageError("config key 'model.theta_true': expected " + std::to_string(p) + " values");
    }
    m.theta_true = Theta::from_flat(tt, pa);
  }
  m.validate();
  return m;
}

NoiseSpec noise_from_config(const Config& cfg) {
  NoiseSpec n;
  n.kind = parse_noise_kind(cfg.get("noise.kind"));
  n.beta = n.kind == NoiseKind::stable ? cfg.get_double("noise.beta") : 1.0;
  n.eta = cfg.get_double("noise.eta");
  n.validate();
  return n;
}

KernelOptions kernel_options_from_config(const Config& cfg) {
  KernelOptions o;
  o.grid_step = cfg.get_double("kernel.grid_step");
  o.tail_cutoff = cfg.get_double("kernel.tail_cutoff");
  o.abs_tol = cfg.get_double("kernel.abs_tol");
  o.direct = cfg.get_bool("kernel.direct");
  if (!(o.grid_step > 0.0)) throw UsageError("config key 'kernel.grid_step' must be positive");
  if (!(o.tail_cutoff > 1.0)) throw UsageError("config key 'kernel.tail_cutoff' must exceed 1");
  if (!(o.abs_tol > 0.0)) throw UsageError("config key 'kernel.abs_tol' must be positive");
  return o;
}

OptimizerConfig optimizer_from_config(const Config& cfg, const ModelSpec& model) {
  OptimizerConfig o;
  o.method = parse_optimizer_method(cfg.get("fit.method"));
  o.restarts = static_cast<int>(cfg.get_int("fit.restarts"));
  o.max_iter = static_cast<int>(cfg.get_int("fit.max_iter"));
  o.xtol = cfg.get_double("fit.xtol");
  o.init = parse_init_mode(cfg.get("fit.init"));
  o.init_halfwidth = cfg.get_double("fit.init_halfwidth");
  if (o.restarts < 1) throw UsageError("config key 'fit.restarts' must be >= 1");
  if (o.max_iter < 1) throw UsageError("config key 'fit.max_iter' must be >= 1");
  if (!(o.xtol > 0.0)) throw UsageError("config key 'fit.xtol' must be positive");
  const auto c = cfg.get_list("fit.init_center");
  if (!c.empty()) {
    if (c.size() != model.bounds.size()) throw UsageError("config key 'fit.init_center' has the wrong length");
    o.init_center = Theta::from_flat(c, static_cast<std::size_t>(model.p_alpha()));
  }
  if (o.init == InitMode::around && !o.init_center && !model.theta_true) {
    throw UsageError("config key 'fit.init' = around needs 'fit.init_center' or 'model.theta_true'");
  }
  return o;
}

CfModel cf_from_config(const Config& cfg) {
  const CfKind kind = parse_cf_kind(cfg.get("llt.kind"));
  CfModel m;
  switch (kind) {
    case CfKind::stable: m = CfModel::stable(cfg.get_double("llt.beta")); break;
    case CfKind::tempered_stable:
      m = CfModel::tempered_stable(cfg.get_double("llt.beta"), cfg.get_double("llt.lambda"));
      break;
    case CfKind::gh_nig: m = CfModel::gh(cfg.get_double("llt.gh_lambda"), cfg.get_double("llt.eta")); break;
  }
  m.validate();
  return m;
}

RateFitOptions rate_options_from_config(const Config& cfg) {
  RateFitOptions o;
  o.half_width = cfg.get_double("llt.half_width");
  o.spacing = cfg.get_double("llt.spacing");
  o.noise_floor = cfg.get_double("llt.noise_floor");
  o.curvature_limit = cfg.get_double("llt.curvature_limit");
  o.workers = static_cast<int>(cfg.get_int("run.workers"));
  if (o.workers < 1) throw UsageError("config key 'run.workers' must be >= 1");
  return o;
}

std::vector<Design> parse_designs(const std::string& text) {
  std::vector<Design> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const std::string t = trim(item);
    if (t.empty()) continue;
    const auto c1 = t.find(':');
    const auto c2 = c1 == std::string::npos ? std::string::npos : t.find(':', c1 + 1);
    if (c2 == std::string::npos) throw UsageError("design '" + t + "' is not of the form T:n:fine_factor");
    Design d;
    try {
      auto whole = [](const std::string& part, auto conv) {
        std::size_t pos = 0;
        const auto v = conv(part, &pos);
        if (pos != part.size()) throw std::invalid_argument(part);
        return v;
      };
      d.T = whole(t.substr(0, c1), [](const std::string& x, std::size_t* p) { return std::stod(x, p); });
      const long n = whole(t.substr(c1 + 1, c2 - c1 - 1), [](const std::string& x, std::size_t* p) { return std::stol(x, p); });
      const long f = whole(t.substr(c2 + 1), [](const std::string& x, std::size_t* p) { return std::stol(x, p); });
      if (n < 1 || f < 1) throw std::invalid_argument("nonpositive");
      d.n = static_cast<std::size_t>(n);
      d.fine_factor = static_cast<std::size_t>(f);
    } catch (const std::exception&) {
      throw UsageError("design '" + t + "' is not of the form T:n:fine_factor with positive entries");
    }
    if (!(d.T > 0.0) || !std::isfinite(d.T)) throw UsageError("design '" + t + "': T must be positive");
    out.push_back(d);
  }
  if (out.empty()) throw UsageError("no designs given");
  return out;
}

std::string format_designs(const std::vector<Design>& designs) {
  std::string s;
  for (std::size_t i = 0; i < designs.size(); ++i) {
    if (i) s += ", ";
    s += format_double(designs[i].T) + ":" + std::to_string(designs[i].n) + ":" + std::to_string(designs[i].fine_factor);
  }
  return s;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace sqmle
