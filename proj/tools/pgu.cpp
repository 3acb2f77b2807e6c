// pgu: prior simulation, synthetic case generation, sequential updating,
// evaluation and raster export.
//
// Exit codes: 0 success, 1 unexpected failure, 2 configuration or usage
// error, 3 data or file-format error.

#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "pgu/config.hpp"
#include "pgu/ensemble_io.hpp"
#include "pgu/error.hpp"
#include "pgu/log.hpp"
#include "pgu/metrics.hpp"
#include "pgu/parallel.hpp"
#include "pgu/pipeline.hpp"
#include "pgu/synthetic.hpp"

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::string output = ".";
  std::string ensemble;
  std::string observations;
  std::string truth;
  bool resume = false;
  std::optional<int> stop_after;
  bool verbose = false;
};

pgu::Config load(const Options& o) {
  pgu::Config cfg = pgu::load_config(o.config);
  if (o.seed) cfg.pipeline.rng_seed = *o.seed;
  if (o.threads) cfg.pipeline.threads = *o.threads;
  pgu::set_default_threads(cfg.pipeline.threads);
  return cfg;
}

fs::path out_dir(const Options& o) {
  const fs::path dir(o.output);
  fs::create_directories(dir);
  return dir;
}

pgu::ObservationSet load_obs(const pgu::Config& cfg, const fs::path& path) {
  pgu::ObservationLoadOptions lo;
  lo.grid = &cfg.grid;
  lo.domains = cfg.domains();
  lo.variables = cfg.grade_variables();
  return pgu::load_observations(path, lo);
}

void write_domain_maps(const fs::path& dir, const pgu::Ensemble& ens, std::size_t n_domains,
                       const std::vector<int>* truth = nullptr) {
  const auto maps = pgu::probability_and_accuracy_maps(ens, ens.var(pgu::kDomain), n_domains, truth);
  const std::vector<double> mp(maps.most_probable.begin(), maps.most_probable.end());
  pgu::write_raster_csv(dir / "most_probable.csv", ens.grid(), mp);
  pgu::write_raster_pgm(dir / "most_probable.pgm", ens.grid(), mp, 0.0, static_cast<double>(n_domains - 1));
  pgu::write_raster_csv(dir / "probability.csv", ens.grid(), maps.probability);
  pgu::write_raster_pgm(dir / "probability.pgm", ens.grid(), maps.probability, 0.0, 1.0);
  if (maps.accuracy) {
    pgu::write_raster_csv(dir / "accuracy.csv", ens.grid(), *maps.accuracy);
    pgu::write_raster_pgm(dir / "accuracy.pgm", ens.grid(), *maps.accuracy, 0.0, 1.0);
  }
}

void write_etype(const fs::path& dir, const pgu::Ensemble& ens, const std::vector<std::string>& vars) {
  for (const auto& name : vars) {
    if (!ens.has_var(name)) continue;
    const std::size_t v = ens.var(name);
    std::vector<double> mean(ens.n_blocks(), 0.0);
    for (std::size_t r = 0; r < ens.n_real(); ++r) {
      const auto f = ens.field(r, v);
      for (std::size_t b = 0; b < mean.size(); ++b) mean[b] += f[b];
    }
    for (double& m : mean) m /= static_cast<double>(ens.n_real());
    pgu::write_raster_csv(dir / ("etype_" + name + ".csv"), ens.grid(), mean);
    pgu::write_raster_pgm(dir / ("etype_" + name + ".pgm"), ens.grid(), mean);
  }
}

int cmd_prior(const Options& o) {
  const pgu::Config cfg = load(o);
  std::optional<fs::path> cond = cfg.prior.conditioning;
  if (!o.observations.empty()) cond = fs::path(o.observations);
  pgu::ObservationSet data;
  data.domains = cfg.domains();
  data.variables = cfg.grade_variables();
  if (cond) data = load_obs(cfg, *cond);
  if (cfg.grades && data.empty()) throw pgu::DataError("prior: grade modelling needs conditioning data");
  const pgu::Ensemble ens = pgu::build_prior(cfg, data);
  const fs::path dir = out_dir(o);
  pgu::write_ensemble(dir / "prior.pgue", ens);
  write_domain_maps(dir, ens, cfg.domains().size());
  write_etype(dir, ens, cfg.grade_variables());
  std::cout << "realizations " << ens.n_real() << "\nblocks " << ens.n_blocks() << "\nconditioning "
            << data.size() << "\n";
  return 0;
}

int cmd_synth(const Options& o) {
  pgu::Config cfg = load(o);
  if (!cfg.synthetic) throw pgu::ConfigError("config: missing key 'synthetic'");
  if (o.seed) cfg.synthetic->seed = *o.seed;
  const auto& sc = *cfg.synthetic;
  const pgu::SyntheticTruth truth = pgu::generate_truth(cfg);
  const auto obs = pgu::sample_observations(truth, cfg.domains(), sc.sampling_fraction, sc.n_periods, sc.seed);
  const auto drill = pgu::sample_drill(truth, cfg.domains(), sc.drill_fraction, sc.seed);
  const fs::path dir = out_dir(o);
  pgu::write_observations(dir / "observations.csv", obs);
  pgu::write_observations(dir / "drill.csv", drill);
  const std::vector<double> dom(truth.domains.begin(), truth.domains.end());
  pgu::write_raster_csv(dir / "truth_domain.csv", truth.grid, dom);
  pgu::write_raster_pgm(dir / "truth_domain.pgm", truth.grid, dom, 0.0, static_cast<double>(cfg.domains().size() - 1));
  for (std::size_t v = 0; v < truth.variables.size(); ++v)
    pgu::write_raster_csv(dir / ("truth_" + truth.variables[v] + ".csv"), truth.grid, truth.grades[v]);
  pgu::write_thresholds_csv(dir / "truth_thresholds.csv", truth.rule);
  std::cout << "observations " << obs.size() << "\nperiods " << obs.n_periods() << "\ndrill " << drill.size() << "\n";
  return 0;
}

int cmd_update(const Options& o) {
  const pgu::Config cfg = load(o);
  if (o.ensemble.empty()) throw pgu::ConfigError("update: --ensemble is required");
  if (o.observations.empty()) throw pgu::ConfigError("update: --observations is required");
  pgu::Ensemble ens = pgu::read_ensemble(o.ensemble, cfg.grid);
  const pgu::ObservationSet obs = load_obs(cfg, o.observations);
  const fs::path dir = out_dir(o);
  pgu::SequenceOptions so;
  so.checkpoint_dir = dir / "checkpoints";
  so.resume = o.resume;
  so.audit_dir = dir / "threshold_trials";
  so.stop_after = o.stop_after;
  const auto rep = pgu::run_sequence(ens, obs, cfg.rule(), cfg.variograms, cfg.pipeline, so);
  if (!rep.complete) {
    std::cout << "stopped after period " << rep.periods.back().period << "; continue with --resume\n";
    return 0;
  }
  pgu::write_ensemble(dir / "updated.pgue", ens);
  pgu::write_period_csv(dir / "periods.csv", rep.periods, obs.variables);
  pgu::write_thresholds_csv(dir / "thresholds.csv", rep.rule);
  write_domain_maps(dir, ens, cfg.domains().size());
  write_etype(dir, ens, cfg.grade_variables());
  std::cout << std::fixed << std::setprecision(4);
  std::cout << "period  n_obs  mse_red_g1  mse_red_g2  acc_prior  acc  score\n";
  for (const auto& p : rep.periods)
    std::cout << p.period << "  " << p.n_observations << "  " << p.grf_mse_reduction[0] << "  "
              << p.grf_mse_reduction[1] << "  " << p.domain_accuracy_prior << "  " << p.domain_accuracy << "  "
              << p.score << "\n";
  std::cout << "final_score " << rep.final_score << "\n";
  return 0;
}

int cmd_evaluate(const Options& o) {
  const pgu::Config cfg = load(o);
  if (o.ensemble.empty()) throw pgu::ConfigError("evaluate: --ensemble is required");
  if (o.truth.empty()) throw pgu::ConfigError("evaluate: --truth is required");
  const pgu::Ensemble ens = pgu::read_ensemble(o.ensemble, cfg.grid);
  const auto raw = pgu::read_raster_csv(o.truth, cfg.grid);
  std::vector<int> truth(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) truth[i] = static_cast<int>(std::lround(raw[i]));
  const std::size_t nd = cfg.domains().size();
  const auto maps = pgu::probability_and_accuracy_maps(ens, ens.var(pgu::kDomain), nd, &truth);
  const auto cm = pgu::confusion(truth, maps.most_probable, nd);
  const fs::path dir = out_dir(o);
  write_domain_maps(dir, ens, nd, &truth);
  {
    std::ofstream out(dir / "confusion.csv");
    out << "truth\\predicted";
    for (const auto& d : cfg.domains()) out << ',' << d;
    out << '\n';
    for (std::size_t t = 0; t < nd; ++t) {
      out << cfg.domains()[t];
      for (std::size_t p = 0; p < nd; ++p) out << ',' << cm.at(t, p);
      out << '\n';
    }
  }
  std::cout << std::fixed << std::setprecision(4) << "accuracy " << cm.accuracy() << "\n";
  for (std::size_t d = 0; d < nd; ++d) {
    const double rec = cm.recall(d);
    std::cout << "accuracy_" << cfg.domains()[d] << ' ' << (std::isnan(rec) ? 0.0 : rec) << "\n";
  }
  return 0;
}

int cmd_export(const Options& o) {
  const pgu::Config cfg = load(o);
  if (o.ensemble.empty()) throw pgu::ConfigError("export: --ensemble is required");
  const pgu::Ensemble ens = pgu::read_ensemble(o.ensemble, cfg.grid);
  const fs::path dir = out_dir(o);
  write_domain_maps(dir, ens, cfg.domains().size());
  write_etype(dir, ens, cfg.grade_variables());
  std::cout << "exported " << dir.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pluri-Gaussian rapid updating of geological domains and grades"};
  app.require_subcommand(1);
  Options o;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "JSON configuration file")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "master seed (overrides the config)");
    sub->add_option("--threads", o.threads, "worker thread cap (0 = all cores)");
    sub->add_option("--output", o.output, "output directory (created if absent)");
    sub->add_flag("-v,--verbose", o.verbose, "progress messages on stderr");
  };
  auto* prior = app.add_subcommand("prior", "simulate the prior domain and grade ensemble");
  add_common(prior);
  prior->add_option("--observations", o.observations, "conditioning data CSV (overrides prior.conditioning)");
  auto* synth = app.add_subcommand("synth", "generate a synthetic truth, observations and drill data");
  add_common(synth);
  auto* update = app.add_subcommand("update", "sequentially update an ensemble period by period");
  add_common(update);
  update->add_option("--ensemble", o.ensemble, "input ensemble file");
  update->add_option("--observations", o.observations, "observations CSV");
  update->add_flag("--resume", o.resume, "continue from the last checkpoint in <output>/checkpoints");
  update->add_option("--stop-after", o.stop_after, "stop after this many periods, as if interrupted")
      ->check(CLI::PositiveNumber);
  auto* evaluate = app.add_subcommand("evaluate", "compare an ensemble with a truth domain raster");
  add_common(evaluate);
  evaluate->add_option("--ensemble", o.ensemble, "ensemble file");
  evaluate->add_option("--truth", o.truth, "truth domain raster CSV");
  auto* exp = app.add_subcommand("export", "write most-probable domain, probability and E-type rasters");
  add_common(exp);
  exp->add_option("--ensemble", o.ensemble, "ensemble file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  if (o.verbose) pgu::log::set_level(pgu::log::Level::info);
  try {
    if (*prior) return cmd_prior(o);
    if (*synth) return cmd_synth(o);
    if (*update) return cmd_update(o);
    if (*evaluate) return cmd_evaluate(o);
    if (*exp) return cmd_export(o);
  } catch (const pgu::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const pgu::DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
