#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "pgu/ensemble.hpp"

namespace pgu {

/// Counts indexed by (true label, predicted label), labels 0..n-1.
struct ConfusionMatrix {
  std::size_t n_labels = 0;
  std::vector<std::size_t> counts;  // row-major, row = true label

  std::size_t at(std::size_t truth, std::size_t pred) const { return counts[truth * n_labels + pred]; }
  std::size_t total() const;
  std::size_t row_total(std::size_t truth) const;
  std::size_t col_total(std::size_t pred) const;
  double accuracy() const;
  /// Per-class recall; NaN for classes absent from the truth.
  double recall(std::size_t label) const;
};

/// Throws DataError on length mismatch or a label outside [0, n_labels).
ConfusionMatrix confusion(std::span<const int> truth, std::span<const int> pred, std::size_t n_labels);

/// Match rate of two aligned label sequences.
double accuracy(std::span<const int> truth, std::span<const int> pred);

double mse(std::span<const double> pred, std::span<const double> obs);

/// 100 (1 - MSE(updated) / MSE(prior)); throws DataError when the prior MSE is 0.
double mse_reduction(std::span<const double> prior_pred, std::span<const double> updated_pred,
                     std::span<const double> obs);

/// 1 - SS_res / SS_tot; throws DataError on fewer than 2 values or zero variance.
double r2(std::span<const double> pred, std::span<const double> obs);

struct DomainMaps {
  std::vector<int> most_probable;
  std::vector<double> probability;              // frequency of the modal label
  std::optional<std::vector<double>> accuracy;  // frequency of the true label
};

/// Per-block modal domain of variable `var` across realizations, ties broken
/// by the lower domain index.
DomainMaps probability_and_accuracy_maps(const Ensemble& ens, std::size_t var, std::size_t n_domains,
                                         const std::vector<int>* truth = nullptr);

/// Modal domain per listed block only.
std::vector<int> modal_labels(const Ensemble& ens, std::size_t var, std::size_t n_domains,
                              std::span<const std::size_t> blocks);

}  // namespace pgu
