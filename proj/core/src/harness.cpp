#include "sqmle/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "sqmle/errors.hpp"
#include "sqmle/inference.hpp"
#include "sqmle/sde_sim.hpp"

namespace sqmle {

using json = nlohmann::json;

ExperimentConfig ExperimentConfig::from_config(const Config& cfg) {
  ExperimentConfig e;
  e.model = model_from_config(cfg);
  e.noise = noise_from_config(cfg);
  e.designs = parse_designs(cfg.get("mc.designs"));
  const long L = cfg.get_int("mc.replicates");
  if (L < 1) throw UsageError("config key 'mc.replicates' must be >= 1");
  e.replicates = static_cast<std::size_t>(L);
  e.base_seed = cfg.get_u64("run.seed");
  e.beta_fit = cfg.get_double("fit.beta");
  e.kernel = kernel_options_from_config(cfg);
  e.optimizer = optimizer_from_config(cfg, e.model);
  e.level = cfg.get_double("fit.level");
  e.x0 = cfg.get_double("simulate.x0");
  e.workers = static_cast<int>(cfg.get_int("run.workers"));
  e.record_timing = cfg.get_bool("mc.record_timing");
  e.failure_threshold = cfg.get_double("mc.failure_threshold");
  e.validate();
  return e;
}

void ExperimentConfig::validate() const {
  model.validate();
  if (!model.theta_true) throw UsageError("experiment needs 'model.theta_true'");
  noise.validate();
  if (designs.empty()) throw UsageError("experiment needs at least one design");
  if (replicates < 1) throw UsageError("experiment needs at least one replicate");
  if (!(beta_fit >= 1.0 && beta_fit < 2.0)) throw DomainError("fit.beta must lie in [1, 2)");
  if (workers < 1) throw UsageError("run.workers must be >= 1");
  if (!(level > 0.0 && level < 1.0)) throw UsageError("fit.level must lie in (0, 1)");
  if (!(failure_threshold >= 0.0 && failure_threshold <= 1.0)) throw UsageError("mc.failure_threshold must lie in [0, 1]");
}

namespace {

std::vector<std::string> coord_names(int pa, int pg) {
  std::vector<std::string> v;
  for (int i = 1; i <= pa; ++i) v.push_back("alpha" + std::to_string(i));
  for (int i = 1; i <= pg; ++i) v.push_back("gamma" + std::to_string(i));
  return v;
}

struct Group {
  double T;
  std::size_t n_fine;
  std::vector<std::size_t> designs;
};

std::vector<Group> group_designs(const std::vector<Design>& designs) {
  std::vector<Group> groups;
  for (std::size_t d = 0; d < designs.size(); ++d) {
    auto it = std::find_if(groups.begin(), groups.end(), [&](const Group& g) {
      return g.T == designs[d].T && g.n_fine == designs[d].n_fine();
    });
    if (it == groups.end()) {
      groups.push_back({designs[d].T, designs[d].n_fine(), {d}});
    } else {
      it->designs.push_back(d);
    }
  }
  return groups;
}

std::vector<ReplicateRecord> run_one(const ExperimentConfig& cfg, const StableKernel& kernel,
                                     const InfoConstants& constants, const std::vector<Group>& groups,
                                     std::size_t rep) {
  std::vector<ReplicateRecord> out;
  const RngStream base(cfg.base_seed, cfg.base_seed ^ static_cast<std::uint64_t>(rep));
  const Theta& theta0 = cfg.theta0();
  const std::vector<double> flat0 = theta0.flat();
  const std::size_t p = flat0.size();
  for (std::size_t g = 0; g < groups.size(); ++g) {
    RngStream path_rng = base.fork(g);
    std::optional<FinePath> path;
    std::string sim_error;
    try {
      path = simulate_fine(cfg.model, cfg.noise, groups[g].T, groups[g].n_fine, cfg.x0, path_rng);
    } catch (const std::exception& e) {
      sim_error = e.what();
    }
    for (std::size_t d : groups[g].designs) {
      const auto t0 = std::chrono::steady_clock::now();
      ReplicateRecord rec;
      rec.rep = rep;
      rec.design = d;
      rec.theta_hat = Theta::from_flat(std::vector<double>(p, std::numeric_limits<double>::quiet_NaN()),
                                       static_cast<std::size_t>(cfg.model.p_alpha()));
      rec.z.assign(p, std::numeric_limits<double>::quiet_NaN());
      rec.cover.assign(p, 0);
      if (!path) {
        rec.error = sim_error;
      } else {
        try {
          const ObservationSeries obs = thin(*path, cfg.designs[d].fine_factor);
          RngStream fit_rng = base.fork(1000 + d);
          const FitResult fr = fit(obs, cfg.model, kernel, cfg.optimizer, fit_rng);
          rec.theta_hat = fr.theta_hat;
          const StudentizedReport rp = studentize(obs, cfg.model, fr.theta_hat, theta0, cfg.beta_fit, constants, cfg.level);
          for (std::size_t i = 0; i < p; ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            const auto pa = static_cast<Eigen::Index>(cfg.model.p_alpha());
            rec.z[i] = ii < pa ? rp.z_alpha(ii) : rp.z_gamma(ii - pa);
            rec.cover[i] = rp.ci[i].contains(flat0[i]) ? 1 : 0;
          }
          const bool finite_z = std::all_of(rec.z.begin(), rec.z.end(), [](double v) { return std::isfinite(v); });
          rec.converged = fr.converged && rp.available() && finite_z;
          if (!fr.converged) rec.error = "optimizer did not converge";
          else if (!rp.available()) rec.error = "information matrix singular";
        } catch (const std::exception& e) {
          rec.error = e.what();
        }
      }
      if (cfg.record_timing) {
        rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      }
      out.push_back(std::move(rec));
    }
  }
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return quantile_sorted(v, 0.5);
}

}  // namespace

double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw UsageError("quantile of an empty sample");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

ExperimentResult run_replicates(const ExperimentConfig& cfg, const std::optional<std::vector<std::size_t>>& order) {
  cfg.validate();
  std::vector<std::size_t> ids(cfg.replicates);
  std::iota(ids.begin(), ids.end(), 0);
  if (order) {
    std::vector<std::size_t> sorted = *order;
    std::sort(sorted.begin(), sorted.end());
    if (sorted != ids) throw UsageError("run_replicates: order must be a permutation of the replicate ids");
    ids = *order;
  }
  const StableKernel kernel(cfg.beta_fit, cfg.kernel);
  const InfoConstants constants = info_constants(kernel);
  const std::vector<Group> groups = group_designs(cfg.designs);

  std::vector<std::vector<ReplicateRecord>> per_rep(cfg.replicates);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= ids.size()) return;
      per_rep[ids[k]] = run_one(cfg, kernel, constants, groups, ids[k]);
    }
  };
  const auto nw = static_cast<std::size_t>(std::max(1, cfg.workers));
  if (nw == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < std::min(nw, ids.size()); ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  ExperimentResult res;
  for (auto& v : per_rep) {
    for (auto& r : v) res.records.push_back(std::move(r));
  }
  std::stable_sort(res.records.begin(), res.records.end(), [](const ReplicateRecord& a, const ReplicateRecord& b) {
    return a.design != b.design ? a.design < b.design : a.rep < b.rep;
  });
  res.failures = static_cast<std::size_t>(
      std::count_if(res.records.begin(), res.records.end(), [](const ReplicateRecord& r) { return !r.converged; }));
  res.failure_fraction = res.records.empty() ? 0.0 : static_cast<double>(res.failures) / static_cast<double>(res.records.size());
  return res;
}

std::vector<std::string> replicate_columns(int p_alpha, int p_gamma) {
  const auto names = coord_names(p_alpha, p_gamma);
  std::vector<std::string> cols{"rep", "design"};
  for (const auto& n : names) cols.push_back(n + "_hat");
  for (const auto& n : names) cols.push_back("z_" + n);
  for (const auto& n : names) cols.push_back("cover_" + n);
  cols.push_back("converged");
  cols.push_back("seconds");
  return cols;
}

void write_replicates_csv(const ExperimentResult& res, int p_alpha, int p_gamma, std::ostream& os) {
  const auto cols = replicate_columns(p_alpha, p_gamma);
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << csv_field(cols[i]);
  os << "\n";
  for (const auto& r : res.records) {
    os << r.rep << "," << r.design;
    for (double v : r.theta_hat.flat()) os << "," << format_double(v);
    for (double v : r.z) os << "," << format_double(v);
    for (int c : r.cover) os << "," << c;
    os << "," << (r.converged ? 1 : 0) << "," << format_double(r.seconds) << "\n";
  }
}

std::string summarize(std::istream& is, const std::optional<std::vector<double>>& theta_ref) {
  std::string line;
  if (!std::getline(is, line)) throw UsageError("summarize: empty replicate file");
  const auto header = split_csv_line(line);
  if (header.size() < 6 || header[0] != "rep" || header[1] != "design" || header[header.size() - 2] != "converged" ||
      header.back() != "seconds" || (header.size() - 4) % 3 != 0) {
    throw UsageError("summarize: unexpected replicate header '" + line + "'");
  }
  const std::size_t p = (header.size() - 4) / 3;
  std::vector<std::string> names;
  for (std::size_t i = 0; i < p; ++i) {
    const std::string& h = header[2 + i];
    if (h.size() < 5 || h.substr(h.size() - 4) != "_hat") throw UsageError("summarize: bad column '" + h + "'");
    names.push_back(h.substr(0, h.size() - 4));
  }
  if (theta_ref && theta_ref->size() != p) throw UsageError("summarize: reference parameter has the wrong length");

  struct Acc {
    std::size_t rows = 0;
    std::size_t converged = 0;
    std::vector<std::vector<double>> hat, z, cover;
  };
  std::map<long, Acc> acc;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    if (f.size() != header.size()) {
      throw UsageError("summarize: line " + std::to_string(lineno) + " has " + std::to_string(f.size()) + " fields");
    }
    std::vector<double> v(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
      try {
        std::size_t pos = 0;
        v[i] = std::stod(f[i], &pos);
        if (pos != f[i].size()) throw std::invalid_argument(f[i]);
      } catch (const std::exception&) {
        throw UsageError("summarize: line " + std::to_string(lineno) + ": bad value '" + f[i] + "'");
      }
    }
    Acc& a = acc[static_cast<long>(v[1])];
    if (a.hat.empty()) {
      a.hat.resize(p);
      a.z.resize(p);
      a.cover.resize(p);
    }
    ++a.rows;
    if (v[header.size() - 2] == 0.0) continue;
    ++a.converged;
    for (std::size_t i = 0; i < p; ++i) {
      a.hat[i].push_back(v[2 + i]);
      a.z[i].push_back(v[2 + p + i]);
      a.cover[i].push_back(v[2 + 2 * p + i]);
    }
  }
  if (acc.empty()) throw UsageError("summarize: replicate file has no rows");

  json out;
  out["designs"] = json::array();
  for (const auto& [design, a] : acc) {
    json d;
    d["design"] = design;
    d["rows"] = a.rows;
    d["converged"] = a.converged;
    d["failures"] = a.rows - a.converged;
    json coords = json::object();
    for (std::size_t i = 0; i < p; ++i) {
      json c;
      if (a.converged == 0) {
        c = nullptr;
      } else {
        std::vector<double> h = a.hat[i];
        std::sort(h.begin(), h.end());
        const double med = quantile_sorted(h, 0.5);
        std::vector<double> dev;
        for (double x : h) dev.push_back(std::abs(x - med));
        c["median"] = med;
        c["iqr"] = quantile_sorted(h, 0.75) - quantile_sorted(h, 0.25);
        c["mean"] = mean_of(h);
        c["sd"] = sd_of(h);
        c["mad"] = median_of(dev);
        c["min"] = h.front();
        c["max"] = h.back();
        if (theta_ref) {
          std::vector<double> err;
          for (double x : h) err.push_back(std::abs(x - (*theta_ref)[i]));
          c["median_abs_error"] = median_of(err);
        }
        c["z_mean"] = mean_of(a.z[i]);
        c["z_sd"] = sd_of(a.z[i]);
        c["z_median"] = median_of(a.z[i]);
        c["coverage"] = mean_of(a.cover[i]);
      }
      coords[names[i]] = c;
    }
    d["coordinates"] = coords;
    out["designs"].push_back(d);
  }
  return out.dump(2) + "\n";
}

void write_histograms_csv(const ExperimentResult& res, int p_alpha, int p_gamma, std::ostream& os) {
  const auto names = coord_names(p_alpha, p_gamma);
  constexpr int kBins = 50;
  constexpr double kLo = -4.0, kHi = 4.0;
  const double width = (kHi - kLo) / kBins;
  os << "design,coordinate,bin,lower,upper,count\n";
  std::map<std::size_t, std::vector<std::vector<long>>> counts;
  for (const auto& r : res.records) {
    auto& c = counts[r.design];
    if (c.empty()) c.assign(names.size(), std::vector<long>(kBins, 0));
    if (!r.converged) continue;
    for (std::size_t i = 0; i < names.size(); ++i) {
      const double z = r.z[i];
      if (!(z >= kLo && z <= kHi)) continue;
      int b = static_cast<int>(std::floor((z - kLo) / width));
      b = std::clamp(b, 0, kBins - 1);
      ++c[i][static_cast<std::size_t>(b)];
    }
  }
  for (const auto& [design, c] : counts) {
    for (std::size_t i = 0; i < names.size(); ++i) {
      for (int b = 0; b < kBins; ++b) {
        os << design << "," << names[i] << "," << b << "," << format_double(kLo + b * width) << ","
           << format_double(kLo + (b + 1) * width) << "," << c[i][static_cast<std::size_t>(b)] << "\n";
      }
    }
  }
}

void write_boxplot_csv(const ExperimentResult& res, int p_alpha, int p_gamma, std::ostream& os) {
  const auto names = coord_names(p_alpha, p_gamma);
  os << "design,coordinate,quantity,min,q1,median,q3,max\n";
  std::map<std::size_t, std::vector<std::vector<double>>> hat, zs;
  for (const auto& r : res.records) {
    auto& h = hat[r.design];
    auto& z = zs[r.design];
    if (h.empty()) {
      h.resize(names.size());
      z.resize(names.size());
    }
    if (!r.converged) continue;
    const auto flat = r.theta_hat.flat();
    for (std::size_t i = 0; i < names.size(); ++i) {
      h[i].push_back(flat[i]);
      z[i].push_back(r.z[i]);
    }
  }
  auto row = [&](std::size_t design, const std::string& name, const char* what, std::vector<double> v) {
    os << design << "," << name << "," << what;
    if (v.empty()) {
      os << ",nan,nan,nan,nan,nan\n";
      return;
    }
    std::sort(v.begin(), v.end());
    for (double q : {0.0, 0.25, 0.5, 0.75, 1.0}) os << "," << format_double(quantile_sorted(v, q));
    os << "\n";
  };
  for (const auto& [design, h] : hat) {
    for (std::size_t i = 0; i < names.size(); ++i) {
      row(design, names[i], "theta_hat", h[i]);
      row(design, names[i], "z", zs[design][i]);
    }
  }
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir) {
  ExperimentResult res = run_replicates(cfg);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw UsageError("cannot create output directory '" + out_dir.string() + "': " + ec.message());
  const int pa = cfg.model.p_alpha();
  const int pg = cfg.model.p_gamma();
  auto open = [&](const char* name) {
    std::ofstream f(out_dir / name, std::ios::binary);
    if (!f) throw UsageError("cannot write '" + (out_dir / name).string() + "'");
    return f;
  };
  std::ostringstream csv;
  write_replicates_csv(res, pa, pg, csv);
  {
    auto f = open("replicates.csv");
    f << csv.str();
  }
  {
    std::istringstream in(csv.str());
    auto f = open("summary.json");
    f << summarize(in, cfg.theta0().flat());
  }
  {
    auto f = open("histograms.csv");
    write_histograms_csv(res, pa, pg, f);
  }
  {
    auto f = open("boxplot.csv");
    write_boxplot_csv(res, pa, pg, f);
  }
  if (res.failure_fraction > cfg.failure_threshold) {
    std::ostringstream os;
    os << res.failures << " of " << res.records.size() << " replicate fits failed (threshold "
       << cfg.failure_threshold * 100.0 << "%)";
    throw McFailure(os.str());
  }
  return res;
}

}  // namespace sqmle
