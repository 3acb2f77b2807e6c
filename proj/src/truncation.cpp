#include "pgu/truncation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <numeric>

#include "pgu/error.hpp"
#include "pgu/log.hpp"
#include "pgu/normal.hpp"
#include "pgu/random.hpp"

namespace pgu {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double& lo_of(Rect& r, int axis) { return axis == 0 ? r.lo1 : r.lo2; }
double& hi_of(Rect& r, int axis) { return axis == 0 ? r.hi1 : r.hi2; }

// Domains below a part, in layout order.
void collect_domains(const RuleTopology& t, const RuleTopology::Part& p, std::vector<int>& out) {
  if (p.is_domain) {
    out.push_back(p.index);
    return;
  }
  for (const auto& child : t.nodes[static_cast<std::size_t>(p.index)].parts) collect_domains(t, child, out);
}

std::string part_name(const RuleTopology& t, const RuleTopology::Part& p) {
  std::vector<int> ds;
  collect_domains(t, p, ds);
  std::string s;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (i) s += '+';
    s += t.domains[static_cast<std::size_t>(ds[i])];
  }
  return s;
}

// Depth-first walk handing each node its rectangle and first threshold slot.
template <class Visit>
void walk(const RuleTopology& t, Visit&& visit) {
  std::size_t next = 0;
  std::function<void(int, const Rect&)> dfs = [&](int node, const Rect& r) {
    const auto& n = t.nodes[static_cast<std::size_t>(node)];
    const std::size_t first = next;
    next += n.parts.size() - 1;
    const std::vector<Rect> child_rects = visit(node, r, first);
    for (std::size_t i = 0; i < n.parts.size(); ++i) {
      if (!n.parts[i].is_domain) dfs(n.parts[i].index, child_rects[i]);
    }
  };
  dfs(0, Rect{-kInf, kInf, -kInf, kInf});
}

}  // namespace

void RuleTopology::validate() const {
  if (domains.empty()) throw ConfigError("rule: no domains");
  if (nodes.empty()) throw ConfigError("rule: empty topology");
  std::vector<int> seen(domains.size(), 0);
  std::vector<int> node_seen(nodes.size(), 0);
  node_seen[0] = 1;
  for (const auto& n : nodes) {
    if (n.axis != 0 && n.axis != 1) throw ConfigError("rule: axis must be g1 or g2");
    if (n.parts.size() < 2) throw ConfigError("rule: every split needs at least two parts");
    for (const auto& p : n.parts) {
      if (p.is_domain) {
        if (p.index < 0 || static_cast<std::size_t>(p.index) >= domains.size())
          throw ConfigError("rule: bad domain reference");
        ++seen[static_cast<std::size_t>(p.index)];
      } else {
        if (p.index <= 0 || static_cast<std::size_t>(p.index) >= nodes.size())
          throw ConfigError("rule: bad node reference");
        ++node_seen[static_cast<std::size_t>(p.index)];
      }
    }
  }
  for (std::size_t d = 0; d < domains.size(); ++d)
    if (seen[d] != 1)
      throw ConfigError("rule: domain '" + domains[d] + "' must appear exactly once in the layout");
  for (const int c : node_seen)
    if (c != 1) throw ConfigError("rule: every split node must be used exactly once");
}

std::size_t RuleTopology::n_thresholds() const {
  std::size_t n = 0;
  for (const auto& node : nodes) n += node.parts.size() - 1;
  return n;
}

std::vector<std::string> RuleTopology::threshold_names() const {
  std::vector<std::string> names(n_thresholds());
  walk(*this, [&](int node, const Rect&, std::size_t first) {
    const auto& n = nodes[static_cast<std::size_t>(node)];
    for (std::size_t i = 0; i + 1 < n.parts.size(); ++i) {
      names[first + i] = std::string(n.axis == 0 ? "g1:" : "g2:") + part_name(*this, n.parts[i]) +
                         "|" + part_name(*this, n.parts[i + 1]);
    }
    return std::vector<Rect>(n.parts.size(), Rect{-kInf, kInf, -kInf, kInf});
  });
  return names;
}

std::vector<int> RuleTopology::threshold_axes() const {
  std::vector<int> axes(n_thresholds());
  walk(*this, [&](int node, const Rect&, std::size_t first) {
    const auto& n = nodes[static_cast<std::size_t>(node)];
    for (std::size_t i = 0; i + 1 < n.parts.size(); ++i) axes[first + i] = n.axis;
    return std::vector<Rect>(n.parts.size(), Rect{-kInf, kInf, -kInf, kInf});
  });
  return axes;
}

TruncationRule::TruncationRule(RuleTopology topology, std::vector<double> thresholds)
    : topology_(std::move(topology)), thresholds_(std::move(thresholds)) {
  topology_.validate();
  if (thresholds_.size() != topology_.n_thresholds())
    throw ConfigError("rule: expected " + std::to_string(topology_.n_thresholds()) +
                      " thresholds, got " + std::to_string(thresholds_.size()));
  rects_.assign(topology_.domains.size(), Rect{});
  walk(topology_, [&](int node, const Rect& r, std::size_t first) {
    const auto& n = topology_.nodes[static_cast<std::size_t>(node)];
    Rect base = r;
    std::vector<double> cuts{lo_of(base, n.axis)};
    for (std::size_t i = 0; i + 1 < n.parts.size(); ++i) cuts.push_back(thresholds_[first + i]);
    cuts.push_back(hi_of(base, n.axis));
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      if (!(cuts[i] < cuts[i + 1]) || std::isnan(cuts[i]))
        throw ConfigError("rule: thresholds must increase strictly within each split");
    }
    std::vector<Rect> children;
    for (std::size_t i = 0; i < n.parts.size(); ++i) {
      Rect c = base;
      lo_of(c, n.axis) = cuts[i];
      hi_of(c, n.axis) = cuts[i + 1];
      children.push_back(c);
      if (n.parts[i].is_domain) rects_[static_cast<std::size_t>(n.parts[i].index)] = c;
    }
    return children;
  });
}

int TruncationRule::domain_index(const std::string& label) const {
  const auto& d = topology_.domains;
  const auto it = std::find(d.begin(), d.end(), label);
  if (it == d.end()) throw DataError("unknown domain label '" + label + "'");
  return static_cast<int>(it - d.begin());
}

int TruncationRule::truncate(double g1, double g2) const {
  for (std::size_t k = 0; k < rects_.size(); ++k) {
    const Rect& r = rects_[k];
    if (g1 >= r.lo1 && g1 < r.hi1 && g2 >= r.lo2 && g2 < r.hi2) return static_cast<int>(k);
  }
  throw NumericError("truncate: point outside every rectangle (non-finite GRF value?)");
}

void TruncationRule::truncate(std::span<const double> g1, std::span<const double> g2,
                              std::span<std::int32_t> out) const {
  simd::truncate(g1, g2, rects_, out);
}

TruncationRule TruncationRule::with_thresholds(std::vector<double> thresholds) const {
  return TruncationRule(topology_, std::move(thresholds));
}

bool TruncationRule::accepts(std::span<const double> thresholds) const {
  if (thresholds.size() != thresholds_.size()) return false;
  bool ok = true;
  walk(topology_, [&](int node, const Rect& r, std::size_t first) {
    const auto& n = topology_.nodes[static_cast<std::size_t>(node)];
    Rect base = r;
    std::vector<double> cuts{lo_of(base, n.axis)};
    for (std::size_t i = 0; i + 1 < n.parts.size(); ++i) cuts.push_back(thresholds[first + i]);
    cuts.push_back(hi_of(base, n.axis));
    std::vector<Rect> children;
    for (std::size_t i = 0; i < n.parts.size(); ++i) {
      if (!(cuts[i] < cuts[i + 1])) ok = false;
      Rect c = base;
      lo_of(c, n.axis) = cuts[i];
      hi_of(c, n.axis) = cuts[i + 1];
      children.push_back(c);
    }
    return children;
  });
  return ok;
}

TruncationRule thresholds_from_proportions(const RuleTopology& topology,
                                           std::span<const double> proportions) {
  topology.validate();
  if (proportions.size() != topology.domains.size())
    throw ConfigError("proportions: expected one value per domain");
  double total = 0.0;
  for (std::size_t d = 0; d < proportions.size(); ++d) {
    if (!(proportions[d] > 0.0))
      throw ConfigError("proportions: domain '" + topology.domains[d] + "' has proportion <= 0");
    total += proportions[d];
  }
  // Published tables are rounded; small defects are renormalised away.
  if (std::abs(total - 1.0) > 1e-2) throw ConfigError("proportions must sum to 1");
  if (std::abs(total - 1.0) > 1e-9) log::info("proportions sum to " + std::to_string(total) + ", renormalised");

  std::vector<double> thresholds(topology.n_thresholds());
  walk(topology, [&](int node, const Rect& r, std::size_t first) {
    const auto& n = topology.nodes[static_cast<std::size_t>(node)];
    Rect base = r;
    const double lo = n.axis == 0 ? base.lo1 : base.lo2;
    const double hi = n.axis == 0 ? base.hi1 : base.hi2;
    std::vector<double> mass;
    for (const auto& p : n.parts) {
      std::vector<int> ds;
      collect_domains(topology, p, ds);
      double m = 0.0;
      for (const int d : ds) m += proportions[static_cast<std::size_t>(d)];
      mass.push_back(m);
    }
    const double node_mass = std::accumulate(mass.begin(), mass.end(), 0.0);
    // Work in whichever tail keeps the most precision for each cut.
    const double p_lo = normal::cdf(lo), p_hi = normal::cdf(hi);
    const double q_lo = normal::sf(lo), q_hi = normal::sf(hi);
    double cum = 0.0;
    std::vector<double> cuts{lo};
    for (std::size_t i = 0; i + 1 < n.parts.size(); ++i) {
      cum += mass[i];
      const double frac = cum / node_mass;
      const double p = p_lo + frac * (p_hi - p_lo);
      const double t = p <= 0.5 ? normal::quantile(p) : normal::isf(q_lo - frac * (q_lo - q_hi));
      thresholds[first + i] = t;
      cuts.push_back(t);
    }
    cuts.push_back(hi);
    std::vector<Rect> children;
    for (std::size_t i = 0; i < n.parts.size(); ++i) {
      Rect c = base;
      lo_of(c, n.axis) = cuts[i];
      hi_of(c, n.axis) = cuts[i + 1];
      children.push_back(c);
    }
    return children;
  });
  TruncationRule rule(topology, std::move(thresholds));
  validate_partition(rule);
  return rule;
}

std::vector<double> rule_proportions(const TruncationRule& rule) {
  std::vector<double> p;
  p.reserve(rule.n_domains());
  for (const Rect& r : rule.rectangles()) {
    p.push_back(normal::interval_probability(r.lo1, r.hi1) * normal::interval_probability(r.lo2, r.hi2));
  }
  return p;
}

Interval domain_interval(const TruncationRule& rule, int domain, int grf_index) {
  if (domain < 0 || static_cast<std::size_t>(domain) >= rule.n_domains())
    throw DataError("domain_interval: unknown domain " + std::to_string(domain));
  if (grf_index != 1 && grf_index != 2) throw DataError("domain_interval: grf index must be 1 or 2");
  const Rect& r = rule.rectangles()[static_cast<std::size_t>(domain)];
  return grf_index == 1 ? Interval{r.lo1, r.hi1} : Interval{r.lo2, r.hi2};
}

void validate_partition(const TruncationRule& rule, std::size_t n_samples, std::uint64_t seed) {
  Rng rng(seed);
  const auto& rects = rule.rectangles();
  for (std::size_t s = 0; s < n_samples; ++s) {
    // Widened draws so that tails and thresholds themselves get exercised.
    double g1 = 3.0 * standard_normal(rng);
    double g2 = 3.0 * standard_normal(rng);
    if (s % 16 == 0 && !rule.thresholds().empty()) {
      g1 = rule.thresholds()[s / 16 % rule.thresholds().size()];
    }
    int hits = 0;
    for (const Rect& r : rects)
      if (g1 >= r.lo1 && g1 < r.hi1 && g2 >= r.lo2 && g2 < r.hi2) ++hits;
    if (hits != 1) {
      throw ConfigError("rule: rectangles do not partition the plane (point covered " +
                        std::to_string(hits) + " times)");
    }
  }
}

void write_thresholds_csv(const std::filesystem::path& path, const TruncationRule& rule) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  const auto names = rule.topology().threshold_names();
  out << "name,value\n" << std::setprecision(17);
  for (std::size_t i = 0; i < names.size(); ++i) out << names[i] << ',' << rule.thresholds()[i] << '\n';
}

}  // namespace pgu
