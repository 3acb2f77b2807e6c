#include "pgu/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "pgu/ensemble_io.hpp"
#include "pgu/error.hpp"
#include "pgu/esmda.hpp"
#include "pgu/gibbs.hpp"
#include "pgu/gsim.hpp"
#include "pgu/log.hpp"
#include "pgu/metrics.hpp"
#include "pgu/parallel.hpp"
#include "pgu/random.hpp"
#include "pgu/rbig.hpp"

namespace pgu {
namespace {

double to_f32(double v) { return static_cast<double>(static_cast<float>(v)); }

std::size_t position(const std::vector<std::size_t>& sorted, std::size_t block) {
  const auto it = std::lower_bound(sorted.begin(), sorted.end(), block);
  if (it == sorted.end() || *it != block) throw DataError("block missing from the update subset");
  return static_cast<std::size_t>(it - sorted.begin());
}

Eigen::MatrixXd gather(const Ensemble& ens, std::size_t var, const std::vector<std::size_t>& blocks) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(ens.n_real()), static_cast<Eigen::Index>(blocks.size()));
  for (std::size_t r = 0; r < ens.n_real(); ++r) {
    const auto f = ens.field(r, var);
    for (std::size_t i = 0; i < blocks.size(); ++i)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i)) = f[blocks[i]];
  }
  return m;
}

// Writes values rounded to binary32, optionally clamped below at zero.
void scatter(Ensemble& ens, std::size_t var, const std::vector<std::size_t>& blocks, const Eigen::MatrixXd& m,
             bool non_negative = false) {
  for (std::size_t r = 0; r < ens.n_real(); ++r) {
    auto f = ens.field(r, var);
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      double v = m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i));
      if (!std::isfinite(v)) throw NumericError("update produced a non-finite value");
      if (non_negative) v = std::max(v, 0.0);
      f[blocks[i]] = to_f32(v);
    }
  }
}

std::vector<Vec3> centroids(const GridSpec& grid, const std::vector<std::size_t>& blocks) {
  std::vector<Vec3> out(blocks.size());
  for (std::size_t i = 0; i < blocks.size(); ++i) out[i] = grid.centroid(blocks[i]);
  return out;
}

double mean_sq(const Eigen::MatrixXd& pred, const Eigen::VectorXd& obs) {
  return (pred.rowwise() - obs.transpose()).squaredNorm() / static_cast<double>(pred.size());
}

void check_domains(const ObservationSet& obs, const std::vector<std::string>& domains) {
  if (!obs.domains.empty() && obs.domains != domains)
    throw DataError("observation domain list differs from the rule's domains");
}

// Type-7 empirical quantile.
double quantile7(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

struct LabelledSet {
  std::vector<std::size_t> blocks;
  std::vector<int> labels;
};

LabelledSet labelled(const ObservationSet& obs) {
  LabelledSet s;
  for (const auto& r : obs.records)
    if (r.domain) {
      s.blocks.push_back(r.block);
      s.labels.push_back(*r.domain);
    }
  return s;
}

void store_transform(Ensemble& ens, std::size_t domain, const RbigTransform& t) {
  AuxSection sec{"RBIG", {}};
  for (int i = 0; i < 8; ++i) sec.bytes.push_back(static_cast<std::uint8_t>(static_cast<std::uint64_t>(domain) >> (8 * i)));
  const auto body = t.serialize();
  sec.bytes.insert(sec.bytes.end(), body.begin(), body.end());
  auto same_domain = [&](const AuxSection& a) {
    return a.tag == "RBIG" && a.bytes.size() >= 8 && std::equal(a.bytes.begin(), a.bytes.begin() + 8, sec.bytes.begin());
  };
  const auto it = std::find_if(ens.aux.begin(), ens.aux.end(), same_domain);
  if (it != ens.aux.end()) *it = std::move(sec);
  else ens.aux.push_back(std::move(sec));
}

// Per-variable E-type at the listed blocks.
std::vector<std::vector<double>> etype_at(const Ensemble& ens, const std::vector<std::size_t>& vars,
                                          const std::vector<std::size_t>& blocks) {
  std::vector<std::vector<double>> out(vars.size(), std::vector<double>(blocks.size(), 0.0));
  for (std::size_t v = 0; v < vars.size(); ++v)
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      double s = 0.0;
      for (std::size_t r = 0; r < ens.n_real(); ++r) s += ens.at(r, vars[v], blocks[i]);
      out[v][i] = s / static_cast<double>(ens.n_real());
    }
  return out;
}

}  // namespace

bool PeriodResult::same_metrics(const PeriodResult& o) const {
  return period == o.period && n_observations == o.n_observations && n_updated_blocks == o.n_updated_blocks &&
         grf_mse_prior == o.grf_mse_prior && grf_mse_updated == o.grf_mse_updated &&
         grf_mse_reduction == o.grf_mse_reduction && domain_accuracy_prior == o.domain_accuracy_prior &&
         domain_accuracy == o.domain_accuracy && seen_accuracy == o.seen_accuracy &&
         score_prior == o.score_prior && score == o.score && thresholds == o.thresholds &&
         grade_mse_prior == o.grade_mse_prior && grade_mse_updated == o.grade_mse_updated &&
         grade_mse_reduction == o.grade_mse_reduction && grade_r2 == o.grade_r2;
}

std::vector<std::size_t> grade_var_indices(const Ensemble& ens, const std::vector<std::string>& names) {
  std::vector<std::size_t> out;
  for (const auto& n : names) out.push_back(ens.var(n));
  return out;
}

void retruncate(Ensemble& ens, const TruncationRule& rule, std::span<const std::size_t> blocks) {
  const std::size_t g1 = ens.var(kG1), g2 = ens.var(kG2), dv = ens.var(kDomain);
  std::vector<std::size_t> all;
  if (blocks.empty()) {
    all.resize(ens.n_blocks());
    std::iota(all.begin(), all.end(), std::size_t{0});
    blocks = all;
  }
  std::vector<double> a(blocks.size()), b(blocks.size());
  std::vector<std::int32_t> out(blocks.size());
  for (std::size_t r = 0; r < ens.n_real(); ++r) {
    const auto f1 = ens.field(r, g1);
    const auto f2 = ens.field(r, g2);
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      a[i] = f1[blocks[i]];
      b[i] = f2[blocks[i]];
    }
    rule.truncate(a, b, out);
    auto d = ens.field(r, dv);
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      if (out[i] < 0) throw NumericError("GRF value outside the truncation rule");
      d[blocks[i]] = out[i];
    }
  }
}

ThresholdSearchResult search_thresholds(const Ensemble& ens, const ObservationSet& seen, const TruncationRule& rule,
                                        const PipelineConfig& cfg, std::uint64_t seed) {
  const LabelledSet s = labelled(seen);
  const std::size_t n = s.blocks.size(), nr = ens.n_real();
  const std::size_t g1 = ens.var(kG1), g2 = ens.var(kG2);
  std::vector<double> a(nr * n), b(nr * n);
  for (std::size_t r = 0; r < nr; ++r)
    for (std::size_t i = 0; i < n; ++i) {
      a[r * n + i] = ens.at(r, g1, s.blocks[i]);
      b[r * n + i] = ens.at(r, g2, s.blocks[i]);
    }
  const auto space =
      ThresholdSearchSpace::around(rule, cfg.threshold_search_halfwidth, cfg.threshold_search_budget, seed);
  return optimise_thresholds(a, b, nr, s.labels, rule, space, cfg.score_weights, cfg.threads);
}

TruncationRule update_domains_period(Ensemble& ens, const ObservationSet& obs_t, const ObservationSet& obs_seen,
                                     const TruncationRule& rule, const std::array<VariogramModel, 2>& variograms,
                                     const PipelineConfig& cfg, int period, PeriodResult& result) {
  check_domains(obs_t, rule.domains());
  const GridSpec& grid = ens.grid();
  const std::size_t gv[2] = {ens.var(kG1), ens.var(kG2)};
  const std::size_t dv = ens.var(kDomain);
  const std::size_t nd = rule.n_domains();
  result.period = period;
  result.n_observations = obs_t.size();
  result.thresholds = rule.thresholds();
  if (obs_t.empty()) return rule;
  if (!obs_t.bound) throw DataError("observations must be bound to the grid");

  const BlockSubset nb = extract_neighbourhood(grid, obs_t.blocks(), cfg.neighbourhood_k);
  result.updated_blocks = nb.indices;
  result.n_updated_blocks = nb.size();
  const LabelledSet lab = labelled(obs_t);
  if (lab.blocks.empty()) return rule;

  result.domain_accuracy_prior = accuracy(lab.labels, modal_labels(ens, dv, nd, lab.blocks));
  const std::uint64_t pseed = derive_seed(cfg.rng_seed, Stream::period, static_cast<std::uint64_t>(period));
  const std::vector<Vec3> obs_locs = centroids(grid, lab.blocks);
  const GibbsState gs = gibbs_run(obs_locs, lab.labels, rule, variograms, cfg.gibbs_iterations,
                                  derive_seed(pseed, Stream::gibbs_init, 0), cfg.max_neighbors);

  std::vector<std::size_t> pos(lab.blocks.size());
  for (std::size_t i = 0; i < pos.size(); ++i) pos[i] = position(nb.indices, lab.blocks[i]);
  const ForwardModel forward = select_columns(pos);
  const MdaSchedule schedule = MdaSchedule::constant(cfg.n_assimilations);
  const std::size_t n_obs = lab.blocks.size();
  for (std::size_t g = 0; g < 2; ++g) {
    AssimilationProblem p;
    p.state = gather(ens, gv[g], nb.indices);
    p.observations = Eigen::Map<const Eigen::VectorXd>((g == 0 ? gs.g1 : gs.g2).data(), static_cast<Eigen::Index>(n_obs));
    p.error_sd = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n_obs), cfg.grf_obs_noise_sd);
    p.state_locations = centroids(grid, nb.indices);
    p.obs_locations = obs_locs;
    p.localization_radius = cfg.localization_radius;
    p.predictions = forward(p.state);
    const double before = mean_sq(p.predictions, p.observations);
    Eigen::MatrixXd updated = mda_update(p, schedule, forward, derive_seed(pseed, Stream::perturbation, g));
    updated = updated.unaryExpr([](double v) { return to_f32(v); });
    const double after = mean_sq(forward(updated), p.observations);
    result.grf_mse_prior[g] = before;
    result.grf_mse_updated[g] = after;
    result.grf_mse_reduction[g] = before > 0.0 ? 100.0 * (1.0 - after / before) : 0.0;
    scatter(ens, gv[g], nb.indices, updated);
  }

  TruncationRule out = rule;
  if (cfg.threshold_optimisation == ThresholdSchedule::every_period) {
    auto search = search_thresholds(ens, obs_seen, rule, cfg, derive_seed(pseed, Stream::threshold_trial, 0));
    result.score_prior = search.prior_score;
    result.score = search.best_score;
    out = search.rule;
    result.search = std::move(search);
  } else {
    const LabelledSet seen = labelled(obs_seen);
    std::vector<double> a, b;
    for (std::size_t r = 0; r < ens.n_real(); ++r)
      for (const std::size_t blk : seen.blocks) a.push_back(ens.at(r, gv[0], blk));
    for (std::size_t r = 0; r < ens.n_real(); ++r)
      for (const std::size_t blk : seen.blocks) b.push_back(ens.at(r, gv[1], blk));
    result.score_prior = result.score = score_rule(rule, a, b, ens.n_real(), seen.labels, cfg.score_weights);
  }
  retruncate(ens, out, nb.indices);

  result.domain_accuracy = accuracy(lab.labels, modal_labels(ens, dv, nd, lab.blocks));
  const LabelledSet seen = labelled(obs_seen);
  result.seen_accuracy = accuracy(seen.labels, modal_labels(ens, dv, nd, seen.blocks));
  result.thresholds = out.thresholds();
  return out;
}

namespace {

struct GradeRecord {
  std::size_t block;
  int domain;
  std::vector<double> grades;
  std::vector<double> error_sd;
};

std::vector<GradeRecord> grade_records(const ObservationSet& obs) {
  std::vector<GradeRecord> out;
  for (const auto& r : obs.records)
    if (r.domain && r.grades) out.push_back({r.block, *r.domain, *r.grades, r.error_sd});
  return out;
}

void bulk_pass(Ensemble& ens, const std::vector<std::size_t>& vars, const std::vector<std::size_t>& blocks,
               const std::vector<GradeRecord>& recs, std::size_t domain, const PipelineConfig& cfg,
               std::uint64_t seed) {
  const std::size_t nr = ens.n_real(), ns = blocks.size(), m = vars.size(), no = recs.size();
  const auto rows = static_cast<Eigen::Index>(nr * ns + no);
  Eigen::MatrixXd combined(rows, static_cast<Eigen::Index>(m));
  for (std::size_t v = 0; v < m; ++v) {
    for (std::size_t r = 0; r < nr; ++r)
      for (std::size_t i = 0; i < ns; ++i)
        combined(static_cast<Eigen::Index>(r * ns + i), static_cast<Eigen::Index>(v)) = ens.at(r, vars[v], blocks[i]);
    for (std::size_t j = 0; j < no; ++j)
      combined(static_cast<Eigen::Index>(nr * ns + j), static_cast<Eigen::Index>(v)) = recs[j].grades[v];
  }
  RbigFit fit = rbig_fit(combined, cfg.rbig_max_iterations);

  Eigen::VectorXd sd(static_cast<Eigen::Index>(no));
  for (std::size_t j = 0; j < no; ++j) {
    double s = cfg.grade_obs_noise_sd;
    if (!recs[j].error_sd.empty()) {
      s = 0.01;
      for (std::size_t v = 0; v < m; ++v) {
        const auto col = combined.col(static_cast<Eigen::Index>(v));
        const double pooled = std::sqrt((col.array() - col.mean()).square().mean());
        if (pooled > 0.0) s = std::max(s, recs[j].error_sd[v] / pooled);
      }
    }
    sd(static_cast<Eigen::Index>(j)) = s;
  }
  std::vector<std::size_t> pos(no);
  std::vector<Vec3> obs_locs(no);
  for (std::size_t j = 0; j < no; ++j) {
    pos[j] = position(blocks, recs[j].block);
    obs_locs[j] = ens.grid().centroid(recs[j].block);
  }
  const ForwardModel forward = select_columns(pos);
  const MdaSchedule schedule = MdaSchedule::constant(cfg.n_assimilations);
  const std::vector<Vec3> state_locs = centroids(ens.grid(), blocks);
  for (std::size_t f = 0; f < m; ++f) {
    AssimilationProblem p;
    p.state.resize(static_cast<Eigen::Index>(nr), static_cast<Eigen::Index>(ns));
    for (std::size_t r = 0; r < nr; ++r)
      for (std::size_t i = 0; i < ns; ++i)
        p.state(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i)) =
            fit.factors(static_cast<Eigen::Index>(r * ns + i), static_cast<Eigen::Index>(f));
    p.observations = fit.factors.col(static_cast<Eigen::Index>(f)).tail(static_cast<Eigen::Index>(no));
    p.error_sd = sd;
    p.state_locations = state_locs;
    p.obs_locations = obs_locs;
    p.localization_radius = cfg.localization_radius;
    const Eigen::MatrixXd updated = mda_update(p, schedule, forward, derive_seed(seed, Stream::perturbation, f));
    for (std::size_t r = 0; r < nr; ++r)
      for (std::size_t i = 0; i < ns; ++i)
        fit.factors(static_cast<Eigen::Index>(r * ns + i), static_cast<Eigen::Index>(f)) =
            updated(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i));
  }
  const Eigen::MatrixXd grades = fit.transform.inverse(fit.factors.topRows(static_cast<Eigen::Index>(nr * ns)));
  for (std::size_t v = 0; v < m; ++v) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(nr), static_cast<Eigen::Index>(ns));
    for (std::size_t r = 0; r < nr; ++r)
      for (std::size_t i = 0; i < ns; ++i)
        out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i)) =
            grades(static_cast<Eigen::Index>(r * ns + i), static_cast<Eigen::Index>(v));
    scatter(ens, vars[v], blocks, out, true);
  }
  store_transform(ens, domain, fit.transform);
}

void tail_pass(Ensemble& ens, std::size_t var, std::size_t v, const std::vector<std::size_t>& blocks,
               const std::vector<GradeRecord>& recs, double threshold, const PipelineConfig& cfg,
               std::uint64_t seed) {
  std::vector<const GradeRecord*> tail;
  for (const auto& r : recs)
    if (r.grades[v] > threshold) tail.push_back(&r);
  if (tail.empty()) return;
  const std::size_t nr = ens.n_real();
  std::vector<std::size_t> tb;
  for (const std::size_t b : blocks) {
    double s = 0.0;
    for (std::size_t r = 0; r < nr; ++r) s += ens.at(r, var, b);
    if (s / static_cast<double>(nr) > threshold) tb.push_back(b);
  }
  for (const auto* r : tail) tb.push_back(r->block);
  std::sort(tb.begin(), tb.end());
  tb.erase(std::unique(tb.begin(), tb.end()), tb.end());

  const Eigen::MatrixXd state = gather(ens, var, tb);
  std::vector<double> sample(state.data(), state.data() + state.size());
  for (const auto* r : tail) sample.push_back(r->grades[v]);
  const MarginalMap map(sample);
  if (map.degenerate()) return;

  AssimilationProblem p;
  p.state = state.unaryExpr([&](double x) { return map.forward(x); });
  p.observations.resize(static_cast<Eigen::Index>(tail.size()));
  p.error_sd = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(tail.size()), cfg.grade_obs_noise_sd);
  std::vector<std::size_t> pos(tail.size());
  for (std::size_t j = 0; j < tail.size(); ++j) {
    p.observations(static_cast<Eigen::Index>(j)) = map.forward(tail[j]->grades[v]);
    pos[j] = position(tb, tail[j]->block);
    p.obs_locations.push_back(ens.grid().centroid(tail[j]->block));
  }
  p.state_locations = centroids(ens.grid(), tb);
  p.localization_radius = cfg.localization_radius;
  const Eigen::MatrixXd updated =
      mda_update(p, MdaSchedule::constant(cfg.n_assimilations), select_columns(pos), seed);
  scatter(ens, var, tb, updated.unaryExpr([&](double x) { return map.inverse(x); }), true);
}

}  // namespace

void update_grades_period(Ensemble& ens, const ObservationSet& obs_t, const ObservationSet& obs_seen,
                          std::size_t n_domains, const PipelineConfig& cfg, int period, PeriodResult& result) {
  const std::vector<GradeRecord> recs = grade_records(obs_t);
  const std::size_t m = obs_t.variables.size();
  result.grade_mse_prior.assign(m, 0.0);
  result.grade_mse_updated.assign(m, 0.0);
  result.grade_mse_reduction.assign(m, 0.0);
  result.grade_r2.assign(m, 0.0);
  if (recs.empty() || m == 0) return;
  const std::vector<std::size_t> vars = grade_var_indices(ens, obs_t.variables);
  const std::size_t dv = ens.var(kDomain);

  std::vector<std::size_t> rec_blocks;
  std::vector<std::vector<double>> obs_values(m);
  for (const auto& r : recs) {
    rec_blocks.push_back(r.block);
    for (std::size_t v = 0; v < m; ++v) obs_values[v].push_back(r.grades[v]);
  }
  const auto prior_pred = etype_at(ens, vars, rec_blocks);

  std::vector<std::size_t> nb = result.updated_blocks;
  if (nb.empty()) nb = extract_neighbourhood(ens.grid(), obs_t.blocks(), cfg.neighbourhood_k).indices;
  const std::vector<int> modal = modal_labels(ens, dv, n_domains, nb);
  const std::vector<GradeRecord> seen = grade_records(obs_seen);
  const std::uint64_t gseed = derive_seed(cfg.rng_seed, Stream::grade, static_cast<std::uint64_t>(period));

  for (std::size_t d = 0; d < n_domains; ++d) {
    std::vector<GradeRecord> rd;
    for (const auto& r : recs)
      if (static_cast<std::size_t>(r.domain) == d) rd.push_back(r);
    if (rd.empty()) continue;
    if (rd.size() < cfg.min_grade_observations) {
      log::warn("period " + std::to_string(period) + ": domain " + obs_t.domains[d] + " has " +
                std::to_string(rd.size()) + " grade observations, skipped");
      continue;
    }
    std::vector<std::size_t> blocks;
    for (std::size_t i = 0; i < nb.size(); ++i)
      if (modal[i] == static_cast<int>(d)) blocks.push_back(nb[i]);
    for (const auto& r : rd) blocks.push_back(r.block);
    std::sort(blocks.begin(), blocks.end());
    blocks.erase(std::unique(blocks.begin(), blocks.end()), blocks.end());

    const std::uint64_t dseed = derive_seed(gseed, Stream::grade, d);
    bulk_pass(ens, vars, blocks, rd, d, cfg, dseed);
    if (!cfg.tail_pass) continue;
    for (std::size_t v = 0; v < m; ++v) {
      std::vector<double> pooled;
      for (const auto& r : seen)
        if (static_cast<std::size_t>(r.domain) == d) pooled.push_back(r.grades[v]);
      const double threshold = quantile7(pooled, cfg.extreme_percentile);
      tail_pass(ens, vars[v], v, blocks, rd, threshold, cfg, derive_seed(dseed, Stream::threshold_trial, v));
    }
  }

  const auto updated_pred = etype_at(ens, vars, rec_blocks);
  for (std::size_t v = 0; v < m; ++v) {
    result.grade_mse_prior[v] = mse(prior_pred[v], obs_values[v]);
    result.grade_mse_updated[v] = mse(updated_pred[v], obs_values[v]);
    if (result.grade_mse_prior[v] > 0.0)
      result.grade_mse_reduction[v] = mse_reduction(prior_pred[v], updated_pred[v], obs_values[v]);
    try {
      result.grade_r2[v] = r2(updated_pred[v], obs_values[v]);
    } catch (const DataError&) {
      result.grade_r2[v] = 0.0;
    }
  }
}

void simulate_prior_grades(Ensemble& ens, const ObservationSet& conditioning, const GradeConfig& grades,
                           const PriorConfig& prior, std::uint64_t seed, std::size_t rbig_max_iterations,
                           std::size_t threads) {
  const std::size_t m = grades.variables.size();
  if (conditioning.variables != grades.variables)
    throw DataError("conditioning grade columns differ from the configured grade variables");
  const std::size_t nd = conditioning.domains.size();
  const std::vector<GradeRecord> recs = grade_records(conditioning);
  if (recs.size() < 10 * m) throw DataError("prior grades: need at least 10 conditioning samples per variable");

  auto fit_on = [&](const std::vector<const GradeRecord*>& rows) {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t v = 0; v < m; ++v) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(v)) = rows[i]->grades[v];
    return rbig_fit(x, rbig_max_iterations).transform;
  };
  std::vector<const GradeRecord*> all;
  for (const auto& r : recs) all.push_back(&r);
  const RbigTransform pooled = fit_on(all);
  std::vector<RbigTransform> transforms(nd, pooled);
  for (std::size_t d = 0; d < nd; ++d) {
    std::vector<const GradeRecord*> rows;
    for (const auto& r : recs)
      if (static_cast<std::size_t>(r.domain) == d) rows.push_back(&r);
    if (rows.size() >= 10 * m) transforms[d] = fit_on(rows);
    else log::info("prior grades: domain " + conditioning.domains[d] + " uses the pooled transform");
  }

  std::vector<std::size_t> vars;
  for (const auto& name : grades.variables)
    vars.push_back(ens.has_var(name) ? ens.var(name) : ens.add_var(name));
  const std::size_t dv = ens.var(kDomain);
  const GridSpec grid = ens.grid();
  parallel_for(ens.n_real(), threads, [&](std::size_t r) {
    const std::uint64_t rs = derive_seed(seed, Stream::realization, r);
    std::vector<std::vector<double>> factors(m);
    for (std::size_t f = 0; f < m; ++f)
      factors[f] = simulate_conditional(grid, {}, grades.factor_variogram, derive_seed(rs, Stream::prior_grade, f),
                                        prior.simulation);
    const auto dom = ens.field(r, dv);
    for (std::size_t d = 0; d < nd; ++d) {
      std::vector<std::size_t> blocks;
      for (std::size_t b = 0; b < grid.size(); ++b)
        if (static_cast<std::size_t>(std::lround(dom[b])) == d) blocks.push_back(b);
      if (blocks.empty()) continue;
      Eigen::MatrixXd y(static_cast<Eigen::Index>(blocks.size()), static_cast<Eigen::Index>(m));
      for (std::size_t i = 0; i < blocks.size(); ++i)
        for (std::size_t f = 0; f < m; ++f) y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(f)) = factors[f][blocks[i]];
      const Eigen::MatrixXd x = transforms[d].inverse(y);
      for (std::size_t v = 0; v < m; ++v) {
        auto field = ens.field(r, vars[v]);
        for (std::size_t i = 0; i < blocks.size(); ++i)
          field[blocks[i]] = to_f32(std::max(0.0, x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(v))));
      }
    }
  });
  for (std::size_t d = 0; d < nd; ++d) store_transform(ens, d, transforms[d]);
}

Ensemble build_prior(const Config& cfg, const ObservationSet& conditioning) {
  check_domains(conditioning, cfg.domains());
  DomainData data;
  for (const auto& r : conditioning.records)
    if (r.domain) {
      data.locations.push_back(conditioning.bound ? cfg.grid.centroid(r.block) : r.location);
      data.labels.push_back(*r.domain);
    }
  PriorOptions opts;
  opts.gibbs_iterations = cfg.pipeline.gibbs_iterations;
  opts.gibbs_neighbors = cfg.pipeline.max_neighbors;
  opts.simulation = cfg.prior.simulation;
  opts.threads = cfg.pipeline.threads;
  Ensemble ens = simulate_prior_ensemble(cfg.grid, data, cfg.variograms, cfg.rule(), cfg.prior.n_realizations,
                                         cfg.pipeline.rng_seed, opts);
  if (cfg.grades)
    simulate_prior_grades(ens, conditioning, *cfg.grades, cfg.prior,
                          derive_seed(cfg.pipeline.rng_seed, Stream::prior_grade, 0),
                          cfg.pipeline.rbig_max_iterations, cfg.pipeline.threads);
  return ens;
}

namespace {

using nlohmann::json;

json to_json(const PeriodResult& r) {
  return json{{"period", r.period},
              {"n_observations", r.n_observations},
              {"n_updated_blocks", r.n_updated_blocks},
              {"grf_mse_prior", r.grf_mse_prior},
              {"grf_mse_updated", r.grf_mse_updated},
              {"grf_mse_reduction", r.grf_mse_reduction},
              {"domain_accuracy_prior", r.domain_accuracy_prior},
              {"domain_accuracy", r.domain_accuracy},
              {"seen_accuracy", r.seen_accuracy},
              {"score_prior", r.score_prior},
              {"score", r.score},
              {"thresholds", r.thresholds},
              {"grade_mse_prior", r.grade_mse_prior},
              {"grade_mse_updated", r.grade_mse_updated},
              {"grade_mse_reduction", r.grade_mse_reduction},
              {"grade_r2", r.grade_r2},
              {"duration_s", r.duration_s}};
}

PeriodResult from_json(const json& j) {
  PeriodResult r;
  j.at("period").get_to(r.period);
  j.at("n_observations").get_to(r.n_observations);
  j.at("n_updated_blocks").get_to(r.n_updated_blocks);
  j.at("grf_mse_prior").get_to(r.grf_mse_prior);
  j.at("grf_mse_updated").get_to(r.grf_mse_updated);
  j.at("grf_mse_reduction").get_to(r.grf_mse_reduction);
  j.at("domain_accuracy_prior").get_to(r.domain_accuracy_prior);
  j.at("domain_accuracy").get_to(r.domain_accuracy);
  j.at("seen_accuracy").get_to(r.seen_accuracy);
  j.at("score_prior").get_to(r.score_prior);
  j.at("score").get_to(r.score);
  j.at("thresholds").get_to(r.thresholds);
  j.at("grade_mse_prior").get_to(r.grade_mse_prior);
  j.at("grade_mse_updated").get_to(r.grade_mse_updated);
  j.at("grade_mse_reduction").get_to(r.grade_mse_reduction);
  j.at("grade_r2").get_to(r.grade_r2);
  j.at("duration_s").get_to(r.duration_s);
  return r;
}

std::string checkpoint_name(int period) { return "checkpoint_" + std::to_string(period) + ".pgue"; }

void write_checkpoint(const std::filesystem::path& dir, const Ensemble& ens, const SequenceReport& rep, int period) {
  std::filesystem::create_directories(dir);
  const auto file = dir / checkpoint_name(period);
  write_ensemble(file, ens);
  json side{{"completed_period", period}, {"ensemble", checkpoint_name(period)}, {"thresholds", rep.rule.thresholds()}};
  json periods = json::array();
  for (const auto& r : rep.periods) periods.push_back(to_json(r));
  side["periods"] = periods;
  const auto tmp = dir / "checkpoint.json.tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw DataError("cannot write checkpoint in " + dir.string());
    out << side.dump(1);
  }
  std::filesystem::rename(tmp, dir / "checkpoint.json");
  if (period > 0) std::filesystem::remove(dir / checkpoint_name(period - 1));
}

// Returns the next period to process.
int read_checkpoint(const std::filesystem::path& dir, Ensemble& ens, SequenceReport& rep) {
  const auto side_path = dir / "checkpoint.json";
  if (!std::filesystem::exists(side_path)) return 0;
  std::ifstream in(side_path);
  json side;
  try {
    in >> side;
    const int done = side.at("completed_period").get<int>();
    ens = read_ensemble(dir / side.at("ensemble").get<std::string>(), ens.grid());
    rep.rule = rep.rule.with_thresholds(side.at("thresholds").get<std::vector<double>>());
    rep.periods.clear();
    for (const auto& p : side.at("periods")) rep.periods.push_back(from_json(p));
    return done + 1;
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
}

}  // namespace

SequenceReport run_sequence(Ensemble& ens, const ObservationSet& obs, const TruncationRule& rule,
                            const std::array<VariogramModel, 2>& variograms, const PipelineConfig& cfg,
                            const SequenceOptions& options) {
  cfg.validate();
  check_domains(obs, rule.domains());
  SequenceReport rep;
  rep.rule = rule;
  int start = 0;
  if (options.resume && options.checkpoint_dir) start = read_checkpoint(*options.checkpoint_dir, ens, rep);
  const int n_periods = obs.n_periods();
  const bool grades = !obs.variables.empty() && std::all_of(obs.variables.begin(), obs.variables.end(),
                                                            [&](const std::string& v) { return ens.has_var(v); });
  if (!obs.variables.empty() && !grades)
    log::warn("ensemble carries no grade variables; grade observations are ignored");
  int processed = 0;
  for (int t = start; t < n_periods; ++t) {
    const auto t0 = std::chrono::steady_clock::now();
    const ObservationSet obs_t = obs.period(t);
    const ObservationSet seen = obs.up_to(t);
    PeriodResult res;
    rep.rule = update_domains_period(ens, obs_t, seen, rep.rule, variograms, cfg, t, res);
    if (options.audit_dir && res.search) {
      std::filesystem::create_directories(*options.audit_dir);
      write_trials_csv(*options.audit_dir / ("thresholds_period_" + std::to_string(t) + ".csv"), rep.rule, *res.search);
    }
    if (grades) update_grades_period(ens, obs_t, seen, rule.n_domains(), cfg, t, res);
    ens.quantize_to_float();
    res.duration_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    log::info("period " + std::to_string(t) + ": " + std::to_string(res.n_observations) + " observations, " +
              std::to_string(res.n_updated_blocks) + " blocks");
    rep.periods.push_back(std::move(res));
    if (options.checkpoint_dir) write_checkpoint(*options.checkpoint_dir, ens, rep, t);
    ++processed;
    if (options.stop_after && processed >= *options.stop_after && t + 1 < n_periods) return rep;
  }

  // End of sequence: optional one-off threshold search, then every block is
  // relabelled with the final rule so domains and GRFs agree everywhere.
  const LabelledSet all = labelled(obs);
  if (!all.blocks.empty()) {
    if (cfg.threshold_optimisation == ThresholdSchedule::final_only) {
      const auto search = search_thresholds(ens, obs, rep.rule, cfg,
                                            derive_seed(cfg.rng_seed, Stream::threshold_trial, static_cast<std::uint64_t>(n_periods)));
      rep.final_score_prior = search.prior_score;
      rep.final_score = search.best_score;
      rep.rule = search.rule;
      if (options.audit_dir) {
        std::filesystem::create_directories(*options.audit_dir);
        write_trials_csv(*options.audit_dir / "thresholds_final.csv", rep.rule, search);
      }
    } else {
      std::vector<double> a, b;
      for (std::size_t r = 0; r < ens.n_real(); ++r)
        for (const std::size_t blk : all.blocks) a.push_back(ens.at(r, ens.var(kG1), blk));
      for (std::size_t r = 0; r < ens.n_real(); ++r)
        for (const std::size_t blk : all.blocks) b.push_back(ens.at(r, ens.var(kG2), blk));
      rep.final_score_prior = rep.final_score =
          score_rule(rep.rule, a, b, ens.n_real(), all.labels, cfg.score_weights);
    }
  }
  retruncate(ens, rep.rule);
  rep.complete = true;
  return rep;
}

void write_period_csv(const std::filesystem::path& path, const std::vector<PeriodResult>& periods,
                      const std::vector<std::string>& grade_variables) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out.precision(10);
  out << "period,n_observations,n_updated_blocks,mse_reduction_g1,mse_reduction_g2,domain_accuracy_prior,"
         "domain_accuracy,seen_accuracy,score_prior,score,thresholds";
  for (const auto& v : grade_variables) out << ",mse_reduction_" << v << ",r2_" << v;
  out << ",duration_s\n";
  for (const auto& p : periods) {
    out << p.period << ',' << p.n_observations << ',' << p.n_updated_blocks << ',' << p.grf_mse_reduction[0] << ','
        << p.grf_mse_reduction[1] << ',' << p.domain_accuracy_prior << ',' << p.domain_accuracy << ','
        << p.seen_accuracy << ',' << p.score_prior << ',' << p.score << ',';
    for (std::size_t i = 0; i < p.thresholds.size(); ++i) out << (i ? ";" : "") << p.thresholds[i];
    for (std::size_t v = 0; v < grade_variables.size(); ++v) {
      const double red = v < p.grade_mse_reduction.size() ? p.grade_mse_reduction[v] : 0.0;
      const double r2v = v < p.grade_r2.size() ? p.grade_r2[v] : 0.0;
      out << ',' << red << ',' << r2v;
    }
    out << ',' << p.duration_s << '\n';
  }
}

}  // namespace pgu
