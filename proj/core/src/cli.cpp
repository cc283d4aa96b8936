#include "sqmle/cli.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "sqmle/config.hpp"
#include "sqmle/errors.hpp"
#include "sqmle/harness.hpp"
#include "sqmle/inference.hpp"
#include "sqmle/llt_lab.hpp"
#include "sqmle/sde_sim.hpp"
#include "sqmle/sqlik.hpp"
#include "sqmle/stable_core.hpp"

namespace sqmle {

using json = nlohmann::json;

namespace {

struct Options {
  CliInvocation inv;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string data;
  std::optional<long> replicates;
  std::optional<int> workers;
  double beta = 0.0;
};

Config build_config(const Options& o) {
  Config cfg = o.inv.preset.empty() ? Config() : preset_config(o.inv.preset);
  if (!o.inv.config_path.empty()) cfg.load_file(o.inv.config_path);
  for (const auto& s : o.inv.overrides) cfg.apply_override(s);
  if (o.seed) cfg.set("run.seed", std::to_string(*o.seed));
  if (o.replicates) cfg.set("mc.replicates", std::to_string(*o.replicates));
  if (o.workers) cfg.set("run.workers", std::to_string(*o.workers));
  return cfg;
}

json theta_json(const Theta& t) { return json{{"alpha", t.alpha}, {"gamma", t.gamma}}; }

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(r);
  }
  return rows;
}

json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw UsageError("cannot write '" + path + "'");
  f << text;
}

int cmd_simulate(const Options& o, std::ostream& out, std::ostream& err) {
  const Config cfg = build_config(o);
  const ModelSpec model = model_from_config(cfg);
  if (!model.theta_true) throw UsageError("simulate needs 'model.theta_true'");
  const NoiseSpec noise = noise_from_config(cfg);
  const double T = cfg.get_double("simulate.T");
  const long n = cfg.get_int("simulate.n");
  const long factor = cfg.get_int("simulate.fine_factor");
  if (!(T > 0.0) || n < 1 || factor < 1) throw UsageError("simulate: T, n and fine_factor must be positive");
  const std::uint64_t seed = cfg.get_u64("run.seed");
  RngStream rng(seed, 0);
  const auto n_fine = static_cast<std::size_t>(n * factor);
  const FinePath path = simulate_fine(model, noise, T, n_fine, cfg.get_double("simulate.x0"), rng);
  const ObservationSeries obs = thin(path, static_cast<std::size_t>(factor));
  std::ostringstream csv;
  write_observations_csv(obs, csv);
  json side{{"model", model.name},
            {"drift", model.drift->describe()},
            {"scale", model.scale->describe()},
            {"theta_true", theta_json(*model.theta_true)},
            {"noise", noise.describe()},
            {"seed", seed},
            {"T", T},
            {"n", n},
            {"fine_factor", factor},
            {"n_fine", n_fine},
            {"x0", cfg.get_double("simulate.x0")}};
  if (o.out.empty()) {
    out << csv.str();
  } else {
    write_text(o.out, csv.str());
    write_text(o.out + ".json", side.dump(2) + "\n");
    if (o.inv.verbosity > 0) err << "wrote " << o.out << " (" << n << " increments)\n";
  }
  return 0;
}

int cmd_fit(const Options& o, std::ostream& out, std::ostream& err) {
  const Config cfg = build_config(o);
  if (o.data.empty()) throw UsageError("fit needs --data <observations.csv>");
  std::ifstream in(o.data);
  if (!in) throw UsageError("cannot open data file '" + o.data + "'");
  const ObservationSeries obs = read_observations_csv(in);
  const ModelSpec model = model_from_config(cfg);
  const double beta = cfg.get_double("fit.beta");
  const StableKernel kernel(beta, kernel_options_from_config(cfg));
  const OptimizerConfig opt = optimizer_from_config(cfg, model);
  RngStream rng(cfg.get_u64("run.seed"), 0);
  const auto t0 = std::chrono::steady_clock::now();
  const FitResult fr = fit(obs, model, kernel, opt, rng);
  if (o.inv.verbosity > 0) {
    err << "fit: " << fr.n_evals << " evaluations in "
        << std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() << " s\n";
  }
  json j{{"model", model.name},
         {"beta", beta},
         {"n", obs.n()},
         {"h", obs.h},
         {"T", obs.T},
         {"theta_hat", theta_json(fr.theta_hat)},
         {"loglik", fr.loglik},
         {"n_evals", fr.n_evals},
         {"converged", fr.converged},
         {"restarts_used", fr.restarts_used},
         {"best_restart", fr.best_restart},
         {"score_norm", fr.score_norm},
         {"optimizer", to_string(opt.method)}};

  std::optional<Theta> ref;
  const auto ref_list = cfg.get_list("fit.theta_ref");
  if (!ref_list.empty()) {
    if (ref_list.size() != fr.theta_hat.size()) throw UsageError("config key 'fit.theta_ref' has the wrong length");
    ref = Theta::from_flat(ref_list, static_cast<std::size_t>(model.p_alpha()));
  } else if (model.theta_true) {
    ref = model.theta_true;
  }
  const StudentizedReport rp = studentize(obs, model, fr.theta_hat, ref ? *ref : fr.theta_hat, kernel,
                                          cfg.get_double("fit.level"));
  json st{{"rate_alpha", rp.rate_alpha},
          {"rate_gamma", rp.rate_gamma},
          {"c_alpha", rp.c_alpha},
          {"c_gamma", rp.c_gamma},
          {"sigma_hat_alpha", matrix_json(rp.sigma_hat_alpha)},
          {"sigma_hat_gamma", matrix_json(rp.sigma_hat_gamma)},
          {"clipped_alpha", rp.clipped_alpha},
          {"clipped_gamma", rp.clipped_gamma},
          {"singular_alpha", rp.singular_alpha},
          {"singular_gamma", rp.singular_gamma},
          {"level", rp.level}};
  json ci = json::array();
  for (const auto& iv : rp.ci) ci.push_back({iv.lower, iv.upper});
  st["ci"] = ci;
  if (ref) {
    st["theta_ref"] = theta_json(*ref);
    st["z_alpha"] = vector_json(rp.z_alpha);
    st["z_gamma"] = vector_json(rp.z_gamma);
  }
  j["studentized"] = st;
  j["observed_information"] = matrix_json(observed_information(obs, model, fr.theta_hat, kernel));
  const std::string text = j.dump(2) + "\n";
  if (o.out.empty()) out << text;
  else write_text(o.out, text);
  return 0;
}

int cmd_mc(const Options& o, std::ostream& out, std::ostream& err) {
  const Config cfg = build_config(o);
  if (o.out.empty()) throw UsageError("mc needs --out <directory>");
  const ExperimentConfig ec = ExperimentConfig::from_config(cfg);
  const std::filesystem::path dir(o.out);
  std::filesystem::create_directories(dir);
  write_text((dir / "config.ini").string(), cfg.to_ini());
  if (o.inv.verbosity > 0) {
    err << "mc: " << ec.replicates << " replicates x " << ec.designs.size() << " designs, " << ec.workers
        << " workers\n";
  }
  try {
    const ExperimentResult res = run_experiment(ec, dir);
    out << "mc: " << res.records.size() << " fits, " << res.failures << " failed; results in " << dir.string() << "\n";
  } catch (const McFailure&) {
    out << "mc: results in " << dir.string() << "\n";
    throw;
  }
  return 0;
}

int cmd_llt(const Options& o, std::ostream& out, std::ostream& err) {
  const Config cfg = build_config(o);
  const CfModel cf = cf_from_config(cfg);
  const StableKernel kernel(cf.beta, kernel_options_from_config(cfg));
  const auto hs = log_spaced(cfg.get_double("llt.h_max"), cfg.get_double("llt.h_min"),
                             static_cast<int>(cfg.get_int("llt.h_count")));
  const RateFit rf = rate_fit(cf, kernel, hs, rate_options_from_config(cfg));
  std::ostringstream csv;
  csv << "h,l1\n";
  for (std::size_t i = 0; i < rf.h_values.size(); ++i) {
    csv << format_double(rf.h_values[i]) << "," << format_double(rf.l1_values[i]) << "\n";
  }
  json used = json::array();
  for (bool u : rf.used) used.push_back(u);
  json j{{"driver", cf.describe()},
         {"kind", to_string(cf.kind)},
         {"beta", cf.beta},
         {"h", rf.h_values},
         {"l1", rf.l1_values},
         {"used", used},
         {"slope", std::isfinite(rf.slope) ? json(rf.slope) : json(nullptr)},
         {"intercept", std::isfinite(rf.intercept) ? json(rf.intercept) : json(nullptr)},
         {"quadratic", std::isfinite(rf.quadratic) ? json(rf.quadratic) : json(nullptr)},
         {"warnings", rf.warnings}};
  for (const auto& w : rf.warnings) err << "warning: " << w << "\n";
  if (o.out.empty()) {
    out << csv.str() << j.dump(2) << "\n";
  } else {
    const std::filesystem::path dir(o.out);
    std::filesystem::create_directories(dir);
    write_text((dir / "rates.csv").string(), csv.str());
    write_text((dir / "rates.json").string(), j.dump(2) + "\n");
    out << "llt: slope " << (std::isfinite(rf.slope) ? format_double(rf.slope) : std::string("undefined")) << "\n";
  }
  return 0;
}

int cmd_constants(const Options& o, std::ostream& out, std::ostream&) {
  const Config cfg = build_config(o);
  const StableKernel kernel(o.beta, kernel_options_from_config(cfg));
  const InfoConstants c = info_constants(kernel);
  char buf[128];
  std::snprintf(buf, sizeof buf, "%g,%.10f,%.10f\n", o.beta, c.c_alpha, c.c_gamma);
  out << buf;
  return 0;
}

}  // namespace

std::string config_reference() {
  std::ostringstream os;
  os << "Presets (--preset NAME):\n";
  for (const auto& p : preset_names()) os << "  " << p << "  " << preset_description(p) << "\n";
  os << "\nConfig keys (INI sections; override with --set section.key=value):\n";
  for (const auto& k : config_keys()) {
    os << "  " << k.key << " = " << (k.default_value.empty() ? "\"\"" : k.default_value) << "\n      " << k.help
       << "\n";
  }
  return os.str();
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Stable quasi-likelihood estimation for Levy-driven SDEs", "sqmle"};
  app.require_subcommand(1);
  app.footer(config_reference());
  Options o;

  auto common = [&](CLI::App* sub, bool with_config) {
    if (with_config) {
      sub->add_option("--config", o.inv.config_path, "INI config file");
      sub->add_option("--preset", o.inv.preset, "start from a named preset");
      sub->add_option("--set", o.inv.overrides, "override section.key=value (repeatable)");
    }
    sub->add_option("--seed", o.seed, "base seed (run.seed)");
    sub->add_flag("-v,--verbose", o.inv.verbosity, "progress messages on stderr");
  };

  auto* sim = app.add_subcommand("simulate", "simulate an observation series to CSV");
  common(sim, true);
  sim->add_option("--out", o.out, "output CSV (a .json sidecar is written next to it); stdout if omitted");

  auto* fitc = app.add_subcommand("fit", "fit the quasi-likelihood to an observation CSV");
  common(fitc, true);
  fitc->add_option("--data", o.data, "observations CSV with header t,x")->required();
  fitc->add_option("--out", o.out, "output JSON; stdout if omitted");

  auto* mc = app.add_subcommand("mc", "Monte Carlo experiment");
  common(mc, true);
  mc->add_option("--out", o.out, "output directory")->required();
  mc->add_option("--replicates", o.replicates, "replicates L (mc.replicates)");
  mc->add_option("--workers", o.workers, "worker threads (run.workers)");

  auto* llt = app.add_subcommand("llt", "L1 local-limit distances and rate fit");
  common(llt, true);
  llt->add_option("--out", o.out, "output directory for rates.csv and rates.json; stdout if omitted");
  llt->add_option("--workers", o.workers, "worker threads (run.workers)");

  auto* cons = app.add_subcommand("constants", "print beta,C_alpha,C_gamma");
  common(cons, true);
  cons->add_option("--beta", o.beta, "stable index in [1, 2)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 1;
  }

  try {
    if (*sim) return cmd_simulate(o, out, err);
    if (*fitc) return cmd_fit(o, out, err);
    if (*mc) return cmd_mc(o, out, err);
    if (*llt) return cmd_llt(o, out, err);
    if (*cons) return cmd_constants(o, out, err);
    err << "error: no subcommand\n";
    return 1;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const McFailure& e) {
    err << "error: Monte Carlo failure: " << e.what() << "\n";
    return 3;
  } catch (const ModelViolation& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const OptimizationError& e) {
    err << "error: optimization failed: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    err << "error: numeric failure: " << e.what() << " (residual " << e.residual() << ")\n";
    return 2;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace sqmle
