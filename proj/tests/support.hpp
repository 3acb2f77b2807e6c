#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "pgu/truncation.hpp"

namespace testing {

/// Two domains A | B split on G1.
inline pgu::RuleTopology split_g1(std::vector<std::string> labels = {"A", "B"}) {
  pgu::RuleTopology t;
  t.domains = labels;
  pgu::RuleTopology::Node root;
  root.axis = 0;
  for (int i = 0; i < static_cast<int>(labels.size()); ++i) root.parts.push_back({true, i});
  t.nodes.push_back(root);
  return t;
}

/// First domain isolated on G1, the rest stacked on G2.
inline pgu::RuleTopology table2_topology() {
  pgu::RuleTopology t;
  t.domains = {"VOLC", "HEM", "DOLM", "DOLT", "SKRN"};
  pgu::RuleTopology::Node root, stack;
  root.axis = 0;
  root.parts = {{true, 0}, {false, 1}};
  stack.axis = 1;
  stack.parts = {{true, 1}, {true, 2}, {true, 3}, {true, 4}};
  t.nodes = {root, stack};
  return t;
}

inline const std::vector<double> kTable2{0.1420, 0.4004, 0.3648, 0.0692, 0.0233};
/// Table 2 proportions as printed sum to 0.9997; renormalised for exact roundtrips.
inline std::vector<double> table2_normalised() {
  double s = 0.0;
  for (double p : kTable2) s += p;
  std::vector<double> out;
  for (double p : kTable2) out.push_back(p / s);
  return out;
}


/// Independent normal-distribution oracles built on std::erfc only.
inline double phi(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); }
inline double Phi(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }
inline double Phi_inv(double p) {
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 300; ++i) {
    const double mid = 0.5 * (lo + hi);
    (Phi(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}
/// P(a <= X < b), taken from the upper tail when a > 0 to avoid cancellation.
inline double mass(double a, double b) {
  if (a > 0.0) return 0.5 * std::erfc(a / std::sqrt(2.0)) - 0.5 * std::erfc(b / std::sqrt(2.0));
  return Phi(b) - Phi(a);
}
/// Mean of N(0,1) restricted to [a, b).
inline double truncated_mean(double a, double b) {
  const double pa = std::isinf(a) ? 0.0 : phi(a), pb = std::isinf(b) ? 0.0 : phi(b);
  return (pa - pb) / mass(a, b);
}
inline double truncated_var(double a, double b) {
  const double z = mass(a, b);
  const double apa = std::isinf(a) ? 0.0 : a * phi(a), bpb = std::isinf(b) ? 0.0 : b * phi(b);
  const double m = truncated_mean(a, b);
  return 1.0 + (apa - bpb) / z - m * m;
}

/// Small three-domain setup used by pipeline and CLI tests.
inline const char* kSmallConfig = R"({
  "grid": {"n": [30, 24, 1], "size": [5, 5, 5]},
  "domains": ["A", "B", "C"],
  "proportions": [0.3, 0.5, 0.2],
  "rule": {"axis": "g1", "parts": ["A", {"axis": "g2", "parts": ["B", "C"]}]},
  "variograms": {
    "g1": {"structures": [{"type": "spherical", "ranges": [60, 40, 10], "angles": [30, 0, 0]}]},
    "g2": {"structures": [{"type": "spherical", "ranges": [50, 50, 10]}]}
  },
  "grades": {"variables": ["Cu", "Au"], "factor_variogram": {"structures": [{"type": "spherical", "ranges": [40, 40, 10]}]}},
  "prior": {"n_realizations": 12},
  "pipeline": {
    "neighbourhood_k": 2, "n_assimilations": 4, "localization_radius": 20,
    "gibbs_iterations": 40, "threshold_search_budget": 24, "rng_seed": 5
  },
  "synthetic": {
    "variograms": {
      "g1": {"structures": [{"type": "gaussian", "ranges": [70, 45, 10], "angles": [50, 0, 0]}]},
      "g2": {"structures": [{"type": "gaussian", "ranges": [55, 45, 10]}]}
    },
    "threshold_shift": [0.05, -0.05],
    "grade_targets": {
      "A": {"mean": [0.2, 0.1], "sd": [0.3, 0.2]},
      "B": {"mean": [0.9, 0.5], "sd": [1.2, 0.6]},
      "C": {"mean": [0.1, 0.05], "sd": [0.1, 0.05]}
    },
    "grade_variogram": {"structures": [{"type": "spherical", "ranges": [45, 45, 10]}]},
    "sampling_fraction": 0.25, "n_periods": 4, "drill_fraction": 0.03, "seed": 3
  }
})";

inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("pgu_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}
inline double variance(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

}  // namespace testing
