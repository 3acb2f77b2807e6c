#include "pgu/metrics.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "pgu/error.hpp"
#include "pgu/simd/kernels.hpp"

namespace pgu {

std::size_t ConfusionMatrix::total() const { return std::accumulate(counts.begin(), counts.end(), std::size_t{0}); }

std::size_t ConfusionMatrix::row_total(std::size_t truth) const {
  std::size_t s = 0;
  for (std::size_t p = 0; p < n_labels; ++p) s += at(truth, p);
  return s;
}

std::size_t ConfusionMatrix::col_total(std::size_t pred) const {
  std::size_t s = 0;
  for (std::size_t t = 0; t < n_labels; ++t) s += at(t, pred);
  return s;
}

double ConfusionMatrix::accuracy() const {
  const std::size_t n = total();
  if (n == 0) return 0.0;
  std::size_t diag = 0;
  for (std::size_t k = 0; k < n_labels; ++k) diag += at(k, k);
  return static_cast<double>(diag) / static_cast<double>(n);
}

double ConfusionMatrix::recall(std::size_t label) const {
  const std::size_t row = row_total(label);
  if (row == 0) return std::numeric_limits<double>::quiet_NaN();
  return static_cast<double>(at(label, label)) / static_cast<double>(row);
}

ConfusionMatrix confusion(std::span<const int> truth, std::span<const int> pred, std::size_t n_labels) {
  if (truth.size() != pred.size()) throw DataError("confusion: length mismatch");
  ConfusionMatrix cm{n_labels, std::vector<std::size_t>(n_labels * n_labels, 0)};
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || pred[i] < 0 || static_cast<std::size_t>(truth[i]) >= n_labels ||
        static_cast<std::size_t>(pred[i]) >= n_labels)
      throw DataError("confusion: label out of range");
    ++cm.counts[static_cast<std::size_t>(truth[i]) * n_labels + static_cast<std::size_t>(pred[i])];
  }
  return cm;
}

double accuracy(std::span<const int> truth, std::span<const int> pred) {
  if (truth.size() != pred.size()) throw DataError("accuracy: length mismatch");
  if (truth.empty()) return 0.0;
  std::size_t hit = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hit += truth[i] == pred[i] ? 1 : 0;
  return static_cast<double>(hit) / static_cast<double>(truth.size());
}

double mse(std::span<const double> pred, std::span<const double> obs) {
  if (pred.size() != obs.size()) throw DataError("mse: length mismatch");
  if (obs.empty()) throw DataError("mse: empty input");
  return simd::squared_error_sum(pred, obs) / static_cast<double>(obs.size());
}

double mse_reduction(std::span<const double> prior_pred, std::span<const double> updated_pred,
                     std::span<const double> obs) {
  const double before = mse(prior_pred, obs);
  const double after = mse(updated_pred, obs);
  if (before == 0.0) throw DataError("mse_reduction: prior MSE is zero");
  return 100.0 * (1.0 - after / before);
}

double r2(std::span<const double> pred, std::span<const double> obs) {
  if (pred.size() != obs.size()) throw DataError("r2: length mismatch");
  if (obs.size() < 2) throw DataError("r2: need at least 2 observations");
  const double mean = std::accumulate(obs.begin(), obs.end(), 0.0) / static_cast<double>(obs.size());
  double ss_tot = 0.0;
  for (const double o : obs) ss_tot += (o - mean) * (o - mean);
  if (ss_tot == 0.0) throw DataError("r2: zero observation variance");
  return 1.0 - simd::squared_error_sum(pred, obs) / ss_tot;
}

namespace {

int modal(const std::vector<std::size_t>& counts, std::size_t& best) {
  int arg = 0;
  best = counts[0];
  for (std::size_t k = 1; k < counts.size(); ++k)
    if (counts[k] > best) {
      best = counts[k];
      arg = static_cast<int>(k);
    }
  return arg;
}

void tally(const Ensemble& ens, std::size_t var, std::size_t block, std::vector<std::size_t>& counts) {
  std::fill(counts.begin(), counts.end(), 0);
  for (std::size_t r = 0; r < ens.n_real(); ++r) {
    const double v = ens.at(r, var, block);
    const auto k = static_cast<long>(std::lround(v));
    if (k < 0 || static_cast<std::size_t>(k) >= counts.size()) throw DataError("domain value out of range");
    ++counts[static_cast<std::size_t>(k)];
  }
}

}  // namespace

DomainMaps probability_and_accuracy_maps(const Ensemble& ens, std::size_t var, std::size_t n_domains,
                                         const std::vector<int>* truth) {
  if (ens.n_real() == 0) throw DataError("maps: empty ensemble");
  if (truth != nullptr && truth->size() != ens.n_blocks()) throw DataError("maps: truth grid size mismatch");
  const std::size_t nb = ens.n_blocks();
  DomainMaps maps;
  maps.most_probable.resize(nb);
  maps.probability.resize(nb);
  if (truth != nullptr) maps.accuracy.emplace(nb);
  std::vector<std::size_t> counts(n_domains);
  const double n = static_cast<double>(ens.n_real());
  for (std::size_t b = 0; b < nb; ++b) {
    tally(ens, var, b, counts);
    std::size_t best = 0;
    maps.most_probable[b] = modal(counts, best);
    maps.probability[b] = static_cast<double>(best) / n;
    if (truth != nullptr) {
      const int t = (*truth)[b];
      const double hit = (t >= 0 && static_cast<std::size_t>(t) < n_domains) ? static_cast<double>(counts[static_cast<std::size_t>(t)]) : 0.0;
      (*maps.accuracy)[b] = hit / n;
    }
  }
  return maps;
}

std::vector<int> modal_labels(const Ensemble& ens, std::size_t var, std::size_t n_domains,
                              std::span<const std::size_t> blocks) {
  std::vector<int> out(blocks.size());
  std::vector<std::size_t> counts(n_domains);
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    tally(ens, var, blocks[i], counts);
    std::size_t best = 0;
    out[i] = modal(counts, best);
  }
  return out;
}

}  // namespace pgu
