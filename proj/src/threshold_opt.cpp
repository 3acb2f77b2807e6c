#include "pgu/threshold_opt.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "pgu/error.hpp"
#include "pgu/metrics.hpp"
#include "pgu/parallel.hpp"
#include "pgu/random.hpp"

namespace pgu {

void ScoreWeights::validate() const {
  if (w1 < 0.0 || w2 < 0.0 || std::abs(w1 + w2 - 1.0) > 1e-9)
    throw ConfigError("score_weights: weights must be non-negative and sum to 1");
}

double classification_score(std::span<const int> truth, std::span<const int> pred, const ScoreWeights& w,
                            std::size_t n_labels) {
  if (truth.empty()) throw DataError("classification score: empty input");
  const ConfusionMatrix cm = confusion(truth, pred, n_labels);
  double f1_sum = 0.0;
  std::size_t f1_n = 0;
  double recall_product = 1.0;
  std::size_t recall_n = 0;
  bool zero_recall = false;
  for (std::size_t k = 0; k < n_labels; ++k) {
    const std::size_t tp = cm.at(k, k);
    const std::size_t row = cm.row_total(k);
    const std::size_t col = cm.col_total(k);
    if (row + col > 0) {
      f1_sum += 2.0 * static_cast<double>(tp) / static_cast<double>(row + col);
      ++f1_n;
    }
    if (row > 0) {
      ++recall_n;
      if (tp == 0) zero_recall = true;
      recall_product *= static_cast<double>(tp) / static_cast<double>(row);
    }
  }
  const double f1 = f1_sum / static_cast<double>(f1_n);
  const double gmean = zero_recall ? 0.0 : std::pow(recall_product, 1.0 / static_cast<double>(recall_n));
  return w.w1 * f1 + w.w2 * gmean;
}

ThresholdSearchSpace ThresholdSearchSpace::around(const TruncationRule& rule, double halfwidth,
                                                  std::size_t budget, std::uint64_t seed) {
  ThresholdSearchSpace s;
  for (const double t : rule.thresholds()) {
    s.lower.push_back(t - halfwidth);
    s.upper.push_back(t + halfwidth);
  }
  s.budget = budget;
  s.seed = seed;
  return s;
}

void ThresholdSearchSpace::validate() const {
  if (lower.size() != upper.size()) throw ConfigError("threshold search: bound length mismatch");
  if (budget < 1) throw ConfigError("threshold search: budget must be at least 1");
  for (std::size_t i = 0; i < lower.size(); ++i)
    if (!std::isfinite(lower[i]) || !std::isfinite(upper[i]) || !(lower[i] < upper[i]))
      throw ConfigError("threshold search: bounds must be finite with lower < upper");
}

double score_rule(const TruncationRule& rule, std::span<const double> g1, std::span<const double> g2,
                  std::size_t n_real, std::span<const int> labels, const ScoreWeights& w) {
  const std::size_t n_obs = labels.size();
  if (g1.size() != n_real * n_obs || g2.size() != n_real * n_obs)
    throw DataError("threshold score: GRF values and labels are not aligned");
  const std::size_t nd = rule.n_domains();
  std::vector<std::uint32_t> counts(n_obs * nd, 0);
  std::vector<std::int32_t> out(n_obs);
  for (std::size_t r = 0; r < n_real; ++r) {
    rule.truncate(g1.subspan(r * n_obs, n_obs), g2.subspan(r * n_obs, n_obs), out);
    for (std::size_t i = 0; i < n_obs; ++i)
      if (out[i] >= 0) ++counts[i * nd + static_cast<std::size_t>(out[i])];
  }
  std::vector<int> pred(n_obs);
  for (std::size_t i = 0; i < n_obs; ++i) {
    std::size_t arg = 0;
    for (std::size_t k = 1; k < nd; ++k)
      if (counts[i * nd + k] > counts[i * nd + arg]) arg = k;
    pred[i] = static_cast<int>(arg);
  }
  return classification_score(labels, pred, w, nd);
}

ThresholdSearchResult optimise_thresholds(std::span<const double> g1, std::span<const double> g2,
                                          std::size_t n_real, std::span<const int> labels,
                                          const TruncationRule& rule, const ThresholdSearchSpace& space,
                                          const ScoreWeights& weights, std::size_t threads) {
  space.validate();
  weights.validate();
  const auto& prior = rule.thresholds();
  if (space.lower.size() != prior.size()) throw ConfigError("threshold search: bound count differs from rule");
  for (std::size_t i = 0; i < prior.size(); ++i)
    if (prior[i] < space.lower[i] || prior[i] > space.upper[i])
      throw ConfigError("threshold search: space excludes the prior thresholds");

  ThresholdSearchResult result;
  result.trials.resize(space.budget);
  for (std::size_t t = 0; t < space.budget; ++t) {
    auto& trial = result.trials[t];
    if (t == 0) {
      trial.thresholds = prior;
      continue;
    }
    Rng rng = make_rng(space.seed, Stream::threshold_trial, t);
    trial.thresholds.resize(prior.size());
    for (std::size_t i = 0; i < prior.size(); ++i)
      trial.thresholds[i] = space.lower[i] + (space.upper[i] - space.lower[i]) * uniform_open(rng);
  }
  parallel_for(space.budget, threads, [&](std::size_t t) {
    auto& trial = result.trials[t];
    if (!rule.accepts(trial.thresholds)) {
      trial.score = std::numeric_limits<double>::quiet_NaN();
      return;
    }
    trial.score = score_rule(rule.with_thresholds(trial.thresholds), g1, g2, n_real, labels, weights);
  });

  auto linf = [&](const std::vector<double>& th) {
    double d = 0.0;
    for (std::size_t i = 0; i < th.size(); ++i) d = std::max(d, std::abs(th[i] - prior[i]));
    return d;
  };
  std::size_t best = 0;
  for (std::size_t t = 1; t < space.budget; ++t) {
    const auto& c = result.trials[t];
    if (std::isnan(c.score)) continue;
    const auto& b = result.trials[best];
    if (c.score > b.score || (c.score == b.score && linf(c.thresholds) < linf(b.thresholds))) best = t;
  }
  result.prior_score = result.trials[0].score;
  result.best_score = result.trials[best].score;
  result.best_trial = best;
  result.rule = rule.with_thresholds(result.trials[best].thresholds);
  return result;
}

void write_trials_csv(const std::filesystem::path& path, const TruncationRule& rule,
                      const ThresholdSearchResult& result) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out.precision(17);
  out << "trial,score,selected";
  for (const auto& name : rule.topology().threshold_names()) out << ",\"" << name << '"';
  out << '\n';
  for (std::size_t t = 0; t < result.trials.size(); ++t) {
    const auto& trial = result.trials[t];
    out << t << ',';
    if (std::isnan(trial.score)) out << "nan";
    else out << trial.score;
    out << ',' << (t == result.best_trial ? 1 : 0);
    for (const double v : trial.thresholds) out << ',' << v;
    out << '\n';
  }
}

}  // namespace pgu
