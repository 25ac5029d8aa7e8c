#include "commands.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "nearq/cancer.hpp"
#include "nearq/dataset_io.hpp"
#include "nearq/evalkit.hpp"
#include "nearq/itr.hpp"
#include "nearq/qlearn.hpp"
#include "nearq/rng.hpp"
#include "nearq/tabular.hpp"

#ifndef NEARQ_VERSION
#define NEARQ_VERSION "unknown"
#endif

namespace fs = std::filesystem;

namespace nearq::cli {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Collects a command's outputs; nothing reaches out_dir unless commit() runs.
class Staging {
 public:
  explicit Staging(fs::path out) : out_(std::move(out)), dir_(out_ / ".nearq-staging") {
    created_out_ = !fs::exists(out_);
    fs::create_directories(out_);
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  Staging(const Staging&) = delete;
  Staging& operator=(const Staging&) = delete;
  ~Staging() {
    if (!committed_) {
      std::error_code ec;
      fs::remove_all(dir_, ec);
      if (created_out_) fs::remove(out_, ec);
    }
  }

  fs::path path(const std::string& name) const { return dir_ / name; }

  std::ofstream open(const std::string& name) const {
    std::ofstream out(path(name));
    if (!out) throw std::runtime_error("cannot write " + path(name).string());
    return out;
  }

  void commit() {
    for (const auto& entry : fs::directory_iterator(dir_)) {
      fs::rename(entry.path(), out_ / entry.path().filename());
    }
    fs::remove_all(dir_);
    committed_ = true;
  }

 private:
  fs::path out_;
  fs::path dir_;
  bool created_out_ = false;
  bool committed_ = false;
};

std::string join(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    out += format_double(xs[i]);
  }
  return out;
}

void require_file(const fs::path& p) {
  if (!fs::exists(p) || fs::file_size(p) == 0) throw std::runtime_error("artifact missing or empty: " + p.string());
}

void require_header(const fs::path& p, const std::string& header) {
  require_file(p);
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  if (line != header) throw std::runtime_error("artifact " + p.filename().string() + " has unexpected header");
}

template <typename Fn>
int guarded(const RunConfig& cfg, std::ostream& log, Fn&& body) {
  try {
    cfg.check();
  } catch (const std::exception& e) {
    log << "invalid configuration: " << e.what() << '\n';
    return kExitUsage;
  }
  if (cfg.dry_run) {
    log << "dry run: configuration is valid\n";
    for (const auto& [k, v] : cfg.to_key_values()) log << "  " << k << '=' << v << '\n';
    return kExitOk;
  }
  try {
    return body();
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace

std::string_view to_string(Experiment e) {
  switch (e) {
    case Experiment::Itr: return "itr";
    case Experiment::Cancer: return "cancer";
    case Experiment::Oracle: return "oracle";
  }
  return "?";
}

std::string epsilon_tag(double epsilon) { return "eps" + format_double(epsilon); }

RunConfig RunConfig::defaults(Experiment e) {
  RunConfig cfg;
  cfg.experiment = e;
  switch (e) {
    case Experiment::Itr:
      cfg.n_train = 1000;
      cfg.n_test = 2000;
      cfg.epsilons = {0.1, 0.3, 0.5};
      cfg.mode = nearequiv::AdmissibilityMode::Absolute;
      cfg.design = regression::DesignSpec::interaction_linear(0.0);
      break;
    case Experiment::Cancer:
      cfg.n_train = 500;
      cfg.n_test = 1000;
      cfg.epsilons = {0.1, 0.3, 0.5, 0.9};
      cfg.mode = nearequiv::AdmissibilityMode::Relative;
      cfg.design = regression::DesignSpec::per_action_kernel(std::nullopt, 1.0);
      break;
    case Experiment::Oracle:
      cfg.n_train = 1;
      cfg.n_test = 1;
      cfg.design = tabular::saturated_design();
      break;
  }
  return cfg;
}

void RunConfig::check() const {
  if (n_train < 1) throw std::invalid_argument("n_train must be >= 1");
  if (n_test < 1) throw std::invalid_argument("n_test must be >= 1");
  for (double e : epsilons) nearequiv::EpsilonConfig(e, mode);
  design.check();
  if (grid_resolution < 1) throw std::invalid_argument("grid resolution must be >= 1");
  if (oracle_horizon < 0) throw std::invalid_argument("oracle horizon must be >= 0");
}

KeyValues RunConfig::to_key_values() const {
  KeyValues kv;
  kv["command"] = std::string(to_string(experiment));
  kv["seed"] = std::to_string(seed);
  kv["n_train"] = std::to_string(n_train);
  kv["n_test"] = std::to_string(n_test);
  kv["epsilons"] = join(epsilons);
  kv["mode"] = std::string(nearequiv::to_string(mode));
  kv["regression"] = std::string(regression::to_string(design.mode));
  kv["ridge"] = format_double(design.ridge);
  kv["gamma"] = design.kernel_bandwidth ? format_double(*design.kernel_bandwidth) : "auto";
  if (experiment == Experiment::Itr) kv["grid_resolution"] = std::to_string(grid_resolution);
  if (experiment == Experiment::Oracle) {
    kv["oracle_horizon"] = std::to_string(oracle_horizon);
    kv["oracle_corrupt"] = oracle_corrupt ? "1" : "0";
  }
  kv["version"] = NEARQ_VERSION;
  kv["rng"] = std::string(kGeneratorFamily);
  return kv;
}

int cmd_itr(const RunConfig& cfg, std::ostream& log) {
  return guarded(cfg, log, [&] {
    Staging stage(cfg.out_dir);
    auto meta = cfg.to_key_values();

    envs::ItrConfig train_cfg{cfg.n_train, stream_key(cfg.seed, "itr/train", 0), 1.0};
    envs::ItrConfig test_cfg{cfg.n_test, stream_key(cfg.seed, "itr/test", 0), 1.0};
    const auto train = envs::simulate_itr(train_cfg);
    const auto test = envs::simulate_itr(test_cfg);
    save_csv(train, stage.path("train.csv"));
    save_csv(test, stage.path("test.csv"));

    const auto start = Clock::now();
    const auto stack = qlearn::backward_fit(train, cfg.design);
    meta["fit_seconds"] = format_double(seconds_since(start));
    const auto& model = stack.model(0);
    {
      auto out = stage.open("model.txt");
      model.save(out);
    }
    {
      auto out = stage.open("blip_surface.csv");
      evalkit::write_blip_csv(evalkit::blip_surface(model, cfg.grid_resolution), out);
    }
    for (double eps : cfg.epsilons) {
      const nearequiv::EpsilonConfig ecfg(eps, cfg.mode);
      const auto stats = evalkit::band_stats(model, test, eps);
      {
        auto out = stage.open("band_stats_" + epsilon_tag(eps) + ".csv");
        evalkit::write_band_stats_csv(std::span(&stats, 1), out);
      }
      const auto near = nearequiv::backward_fit_near_equiv(train, cfg.design, ecfg);
      auto out = stage.open("admissible_" + epsilon_tag(eps) + ".csv");
      near.write_admissible_csv(out);
      log << "eps=" << eps << " accuracy=" << stats.accuracy << " band_fraction=" << stats.band_fraction
          << " misclassified_in_band=" << stats.misclassified_in_band << "/" << stats.misclassified_total << '\n';
    }
    write_key_values(stage.path("run.meta"), meta);

    (void)load_csv(stage.path("train.csv"));
    (void)load_csv(stage.path("test.csv"));
    {
      std::ifstream in(stage.path("model.txt"));
      if (!(regression::FittedQ::load(in) == model)) throw std::runtime_error("model blob does not round-trip");
    }
    require_header(stage.path("blip_surface.csv"), "x0,x1,blip");
    for (double eps : cfg.epsilons) {
      require_file(stage.path("band_stats_" + epsilon_tag(eps) + ".csv"));
      require_header(stage.path("admissible_" + epsilon_tag(eps) + ".csv"), "patient_id,rank,action_index,q_value");
    }
    stage.commit();
    log << "itr: artifacts written to " << cfg.out_dir.string() << '\n';
    return kExitOk;
  });
}

int cmd_cancer(const RunConfig& cfg, std::ostream& log) {
  return guarded(cfg, log, [&] {
    Staging stage(cfg.out_dir);
    auto meta = cfg.to_key_values();
    const envs::CancerParams params;
    const std::uint64_t eval_seed = stream_key(cfg.seed, "cancer/test", 0);

    const auto cohort = envs::simulate_cancer_cohort(params, envs::UniformRandomPolicy{}, cfg.n_train, cfg.seed, "train/");
    save_csv(cohort.dataset, stage.path("train_cohort.csv"));
    {
      auto out = stage.open("train_trajectories.csv");
      envs::write_trajectory_csv(cohort, params, out);
    }

    auto start = Clock::now();
    const auto classical = qlearn::backward_fit(cohort.dataset, cfg.design);
    const double classical_seconds = seconds_since(start);
    meta["classical_fit_seconds"] = format_double(classical_seconds);
    {
      auto out = stage.open("classical_qstack.txt");
      classical.save(out);
    }

    const auto baselines = evalkit::constant_dose_baselines(params, cfg.n_test, eval_seed);
    const qlearn::GreedyPolicy greedy(classical);
    const auto optimal = evalkit::evaluate_policy(
        params, [&](int t, std::span<const double> h) { return greedy.decide(t, h); }, "opt", cfg.n_test, eval_seed);

    std::ostringstream timing;
    timing << "epsilon,classical_seconds,near_equiv_seconds,ratio\n";
    for (double eps : cfg.epsilons) {
      const nearequiv::EpsilonConfig ecfg(eps, cfg.mode);
      start = Clock::now();
      const auto near = nearequiv::backward_fit_near_equiv(cohort.dataset, cfg.design, ecfg);
      const double near_seconds = seconds_since(start);
      timing << format_double(eps) << ',' << format_double(classical_seconds) << ',' << format_double(near_seconds)
             << ',' << format_double(near_seconds / classical_seconds) << '\n';

      const auto tag = epsilon_tag(eps);
      {
        auto out = stage.open("nearequiv_" + tag + ".txt");
        near.save(out);
      }
      {
        auto out = stage.open("admissible_" + tag + ".csv");
        near.write_admissible_csv(out);
      }

      const auto policies = nearequiv::policy_set(near);
      std::vector<evalkit::EvalResult> near_results;
      for (std::size_t j = 0; j < policies.size(); ++j) {
        near_results.push_back(evalkit::evaluate_policy(
            params, [&](int t, std::span<const double> h) { return policies.decide(j, t, h); },
            "near_eq_" + std::to_string(j + 1), cfg.n_test, eval_seed));
      }
      std::vector<evalkit::EvalResult> curves = baselines;
      curves.push_back(optimal);
      curves.insert(curves.end(), near_results.begin(), near_results.end());
      {
        auto out = stage.open("curves_" + tag + ".csv");
        evalkit::write_results_csv(curves, out);
      }
      {
        auto out = stage.open("band_" + tag + ".csv");
        evalkit::write_band_csv(evalkit::epsilon_band_curve(optimal, near_results, eps), out);
      }
      log << "eps=" << eps << " m=" << near.m() << " classical=" << classical_seconds << "s near_equiv=" << near_seconds
          << "s\n";
    }
    {
      auto out = stage.open("timing.csv");
      out << timing.str();
    }
    write_key_values(stage.path("run.meta"), meta);

    (void)load_csv(stage.path("train_cohort.csv"));
    require_header(stage.path("train_trajectories.csv"), "patient_id,stage,tumor,toxicity,dose,reward,alive");
    {
      std::ifstream in(stage.path("classical_qstack.txt"));
      (void)qlearn::QStack::load(in);
    }
    for (double eps : cfg.epsilons) {
      const auto tag = epsilon_tag(eps);
      require_header(stage.path("curves_" + tag + ".csv"), "policy_label,month,mean_combined,stderr_combined,mean_cum_reward");
      require_header(stage.path("band_" + tag + ".csv"), "month,band_lo,band_hi");
      require_header(stage.path("admissible_" + tag + ".csv"), "patient_id,rank,action_index,q_value");
      require_file(stage.path("nearequiv_" + tag + ".txt"));
    }
    stage.commit();
    log << "cancer: artifacts written to " << cfg.out_dir.string() << '\n';
    return kExitOk;
  });
}

int cmd_oracle(const RunConfig& cfg, std::ostream& log) {
  return guarded(cfg, log, [&] {
    const auto mdp = tabular::default_tabular_mdp(cfg.oracle_horizon);
    auto data = tabular::enumerate_dataset(mdp);
    if (cfg.oracle_corrupt) data.patients.front().stages.back().reward += 1.0;
    const auto stack = qlearn::backward_fit(data, cfg.design);
    const double discrepancy = tabular::max_discrepancy(stack, mdp, tabular::dp_backup(mdp));
    const bool pass = discrepancy < kOracleTolerance;
    log << "oracle: T=" << cfg.oracle_horizon << " states=" << mdp.n_states << " trajectories=" << data.size()
        << " max|Q_fit - Q_dp|=" << discrepancy << (pass ? " PASS" : " FAIL") << '\n';
    if (!cfg.out_dir.empty()) {
      Staging stage(cfg.out_dir);
      auto meta = cfg.to_key_values();
      meta["max_discrepancy"] = format_double(discrepancy);
      meta["tolerance"] = format_double(kOracleTolerance);
      meta["result"] = pass ? "pass" : "fail";
      write_key_values(stage.path("run.meta"), meta);
      stage.commit();
    }
    return pass ? kExitOk : kExitFailure;
  });
}

int run(int argc, const char* const* argv, std::ostream& log) {
  CLI::App app{"Near-equivalent offline Q-learning: experiments and checks", "nearq"};
  app.set_config("--config", "", "key = value config file (TOML/INI); command-line flags take precedence");
  app.require_subcommand(1);
  app.fallthrough();

  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> n_train, n_test;
  std::vector<double> epsilons;
  std::optional<std::string> mode, regression_mode;
  std::optional<double> gamma, ridge;
  std::optional<std::string> out;
  bool dry_run = false;

  app.add_option("--seed", seed, "Run seed");
  app.add_option("--n-train", n_train, "Training patients");
  app.add_option("--n-test", n_test, "Test patients");
  app.add_option("--epsilon", epsilons, "Admissibility tolerance in [0,1); repeatable")->take_all();
  app.add_option("--mode", mode, "Admissibility mode")->check(CLI::IsMember({"relative", "absolute"}));
  app.add_option("--regression", regression_mode, "Regression backend")
      ->check(CLI::IsMember({"interaction-linear", "per-action-kernel"}));
  app.add_option("--gamma", gamma, "RBF kernel bandwidth (default 1/(d+1))");
  app.add_option("--ridge", ridge, "Ridge weight");
  app.add_option("--out", out, "Output directory");
  app.add_flag("--dry-run", dry_run, "Validate the configuration and exit");

  auto* itr = app.add_subcommand("itr", "Single-stage binary treatment experiment");
  std::size_t grid = 41;
  itr->add_option("--grid", grid, "Blip surface grid resolution")->capture_default_str();

  auto* cancer = app.add_subcommand("cancer", "Six-stage oncology dosing experiment");

  auto* oracle = app.add_subcommand("oracle", "Tabular dynamic-programming equivalence check");
  int horizon = 1;
  bool corrupt = false;
  oracle->add_option("--horizon", horizon, "Final stage T of the tabular model")->capture_default_str();
  oracle->add_flag("--corrupt", corrupt, "Perturb one reward after enumeration (negative check)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    log << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    log << e.what() << '\n';
    return kExitUsage;
  }

  Experiment experiment = Experiment::Itr;
  if (cancer->parsed()) experiment = Experiment::Cancer;
  if (oracle->parsed()) experiment = Experiment::Oracle;

  RunConfig cfg = RunConfig::defaults(experiment);
  if (seed) cfg.seed = *seed;
  if (n_train) cfg.n_train = *n_train;
  if (n_test) cfg.n_test = *n_test;
  if (!epsilons.empty()) cfg.epsilons = epsilons;
  if (mode) cfg.mode = nearequiv::admissibility_mode_from_string(*mode);
  if (regression_mode) cfg.design.mode = regression::mode_from_string(*regression_mode);
  if (gamma) cfg.design.kernel_bandwidth = *gamma;
  if (ridge) cfg.design.ridge = *ridge;
  cfg.out_dir = out ? fs::path(*out) : (experiment == Experiment::Oracle ? fs::path() : fs::path("out") / std::string(to_string(experiment)));
  cfg.dry_run = dry_run;
  cfg.grid_resolution = grid;
  cfg.oracle_horizon = horizon;
  cfg.oracle_corrupt = corrupt;

  switch (experiment) {
    case Experiment::Itr: return cmd_itr(cfg, log);
    case Experiment::Cancer: return cmd_cancer(cfg, log);
    case Experiment::Oracle: return cmd_oracle(cfg, log);
  }
  return kExitUsage;
}

}  // namespace nearq::cli
