#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pgu/simd/kernels.hpp"

namespace pgu {

/// Hierarchical layout of the two-GRF plane: every node splits its rectangle
/// along one axis into consecutive parts; a part is a domain or a nested node.
/// A node with P parts owns P-1 thresholds, numbered in depth-first order.
struct RuleTopology {
  struct Part {
    bool is_domain = true;
    int index = 0;  // domain index or node index
  };
  struct Node {
    int axis = 0;  // 0 -> G1, 1 -> G2
    std::vector<Part> parts;
  };

  std::vector<std::string> domains;
  std::vector<Node> nodes;  // nodes[0] is the root

  /// Throws ConfigError unless every domain appears exactly once.
  void validate() const;
  std::size_t n_thresholds() const;
  std::vector<std::string> threshold_names() const;
  std::vector<int> threshold_axes() const;
};

using Interval = std::pair<double, double>;

/// Numeric truncation rule: one rectangle per domain, closed below and open
/// above on both axes, partitioning the plane.
class TruncationRule {
 public:
  TruncationRule() = default;
  /// Throws ConfigError if thresholds are not strictly increasing inside
  /// each node's extent.
  TruncationRule(RuleTopology topology, std::vector<double> thresholds);

  const RuleTopology& topology() const { return topology_; }
  const std::vector<std::string>& domains() const { return topology_.domains; }
  std::size_t n_domains() const { return topology_.domains.size(); }
  const std::vector<Rect>& rectangles() const { return rects_; }
  const std::vector<double>& thresholds() const { return thresholds_; }

  int domain_index(const std::string& label) const;
  const std::string& label(int domain) const { return topology_.domains[static_cast<std::size_t>(domain)]; }

  int truncate(double g1, double g2) const;
  /// Batch form over the active SIMD kernel.
  void truncate(std::span<const double> g1, std::span<const double> g2,
                std::span<std::int32_t> out) const;

  /// Same topology, new threshold values.
  TruncationRule with_thresholds(std::vector<double> thresholds) const;
  /// True when `thresholds` would produce a valid rule.
  bool accepts(std::span<const double> thresholds) const;

  bool operator==(const TruncationRule& o) const { return thresholds_ == o.thresholds_ && topology_.domains == o.topology_.domains; }

 private:
  RuleTopology topology_;
  std::vector<double> thresholds_;
  std::vector<Rect> rects_;
};

/// Thresholds such that independent standard normal (G1, G2) fall in each
/// domain's rectangle with the given probability. Cuts are placed node by
/// node at cumulative proportions renormalised to the node's mass.
TruncationRule thresholds_from_proportions(const RuleTopology& topology,
                                           std::span<const double> proportions);

/// Analytic domain probabilities under independent standard normal GRFs.
std::vector<double> rule_proportions(const TruncationRule& rule);

/// [a_min, a_max) of a domain on GRF 1 or 2.
Interval domain_interval(const TruncationRule& rule, int domain, int grf_index);

/// Monte Carlo cover test: every sampled point must lie in exactly one
/// rectangle. Throws ConfigError otherwise.
void validate_partition(const TruncationRule& rule, std::size_t n_samples = 100000,
                        std::uint64_t seed = 12345);

void write_thresholds_csv(const std::filesystem::path& path, const TruncationRule& rule);

}  // namespace pgu
