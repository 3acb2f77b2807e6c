#include "pgu/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <tuple>

#include "pgu/error.hpp"
#include "pgu/gsim.hpp"
#include "pgu/normal.hpp"
#include "pgu/random.hpp"

namespace pgu {
namespace {

// Unit-variance standardisation so that grade calibration sees N(0,1)-like scores.
void standardise(std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (const double x : v) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / n);
  for (double& x : v) x = sd > 0.0 ? (x - mean) / sd : 0.0;
}

// Hazen normal scores: the field keeps its spatial ranks but its histogram
// becomes exactly standard normal.
void normal_score(std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  const double n = static_cast<double>(v.size());
  for (std::size_t r = 0; r < order.size(); ++r) v[order[r]] = normal::quantile((static_cast<double>(r) + 0.5) / n);
}

// exp(s * y) rescaled so the sample mean and SD hit the target exactly; the
// coefficient of variation is increasing in s, found by bisection.
std::vector<double> calibrate_lognormal(const std::vector<double>& y, double mean, double sd) {
  auto moments = [&](double s, double& m, double& cv) {
    double a = 0.0, b = 0.0;
    for (const double v : y) {
      const double e = std::exp(s * v);
      a += e;
      b += e * e;
    }
    const double n = static_cast<double>(y.size());
    m = a / n;
    cv = std::sqrt(std::max(0.0, b / n - m * m)) / m;
  };
  const double target = sd / mean;
  double lo = 1e-6, hi = 6.0, m = 0.0, cv = 0.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    moments(mid, m, cv);
    if (cv < target) lo = mid;
    else hi = mid;
  }
  const double s = 0.5 * (lo + hi);
  moments(s, m, cv);
  std::vector<double> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = std::exp(s * y[i]) / m * mean;
  return out;
}

}  // namespace

SyntheticTruth generate_truth(const Config& cfg) {
  if (!cfg.synthetic) throw ConfigError("config: missing key 'synthetic'");
  const SyntheticConfig& sc = *cfg.synthetic;
  const bool shifted = std::any_of(sc.threshold_shift.begin(), sc.threshold_shift.end(),
                                   [](double v) { return v != 0.0; });
  if (sc.variograms == cfg.variograms && !shifted)
    throw ConfigError("config: 'synthetic' truth parameters must differ from the prior's");
  SyntheticTruth t;
  t.grid = cfg.grid;
  std::vector<double> th = cfg.rule().thresholds();
  for (std::size_t i = 0; i < sc.threshold_shift.size(); ++i) th[i] += sc.threshold_shift[i];
  t.rule = TruncationRule(cfg.topology, th);

  const std::uint64_t seed = derive_seed(sc.seed, Stream::synthetic, 0);
  t.g1 = simulate_conditional(t.grid, {}, sc.variograms[0], derive_seed(seed, Stream::simulation, 0));
  t.g2 = simulate_conditional(t.grid, {}, sc.variograms[1], derive_seed(seed, Stream::simulation, 1));
  normal_score(t.g1);
  normal_score(t.g2);
  std::vector<std::int32_t> labels(t.grid.size());
  t.rule.truncate(t.g1, t.g2, labels);
  t.domains.assign(labels.begin(), labels.end());

  t.variables = cfg.grade_variables();
  const std::size_t m = t.variables.size();
  if (m == 0) return t;
  if (sc.grade_targets.size() != cfg.domains().size())
    throw ConfigError("config: 'synthetic.grade_targets' needs one entry per domain");
  std::vector<double> shared =
      simulate_conditional(t.grid, {}, sc.grade_variogram, derive_seed(seed, Stream::grade, 1000));
  standardise(shared);
  const double rho = sc.grade_correlation;
  t.grades.assign(m, std::vector<double>(t.grid.size(), 0.0));
  for (std::size_t v = 0; v < m; ++v) {
    std::vector<double> own = simulate_conditional(t.grid, {}, sc.grade_variogram, derive_seed(seed, Stream::grade, v));
    standardise(own);
    for (std::size_t d = 0; d < cfg.domains().size(); ++d) {
      std::vector<std::size_t> blocks;
      for (std::size_t b = 0; b < t.grid.size(); ++b)
        if (t.domains[b] == static_cast<int>(d)) blocks.push_back(b);
      if (blocks.empty()) continue;
      std::vector<double> y(blocks.size());
      for (std::size_t i = 0; i < blocks.size(); ++i)
        y[i] = rho * shared[blocks[i]] + std::sqrt(1.0 - rho * rho) * own[blocks[i]];
      const auto& target = sc.grade_targets[d];
      const auto g = calibrate_lognormal(y, target.mean[v], target.sd[v]);
      for (std::size_t i = 0; i < blocks.size(); ++i) t.grades[v][blocks[i]] = g[i];
    }
  }
  return t;
}

std::vector<int> kmeans_periods(const std::vector<Vec3>& points, int k, std::uint64_t seed) {
  const std::size_t n = points.size();
  if (k < 1) throw ConfigError("k-means: need at least one cluster");
  if (n < static_cast<std::size_t>(k)) throw DataError("k-means: fewer points than clusters");
  Rng rng = make_rng(seed, Stream::period, 0);
  auto d2 = [](const Vec3& a, const Vec3& b) {
    return (a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) + (a[2] - b[2]) * (a[2] - b[2]);
  };
  std::vector<Vec3> centers;
  centers.push_back(points[static_cast<std::size_t>(rng() % n)]);
  std::vector<double> best(n, std::numeric_limits<double>::infinity());
  while (centers.size() < static_cast<std::size_t>(k)) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      best[i] = std::min(best[i], d2(points[i], centers.back()));
      total += best[i];
    }
    double u = uniform_open(rng) * total;
    std::size_t pick = n - 1;
    for (std::size_t i = 0; i < n; ++i) {
      u -= best[i];
      if (u <= 0.0 && best[i] > 0.0) {
        pick = i;
        break;
      }
    }
    centers.push_back(points[pick]);
  }
  std::vector<int> assign(n, -1);
  for (int iter = 0; iter < 200; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      int arg = 0;
      double bd = d2(points[i], centers[0]);
      for (int c = 1; c < k; ++c) {
        const double dd = d2(points[i], centers[static_cast<std::size_t>(c)]);
        if (dd < bd) {
          bd = dd;
          arg = c;
        }
      }
      if (assign[i] != arg) {
        assign[i] = arg;
        changed = true;
      }
    }
    std::vector<Vec3> sum(static_cast<std::size_t>(k), Vec3{0, 0, 0});
    std::vector<std::size_t> count(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<std::size_t>(assign[i]);
      for (int a = 0; a < 3; ++a) sum[c][static_cast<std::size_t>(a)] += points[i][static_cast<std::size_t>(a)];
      ++count[c];
    }
    for (std::size_t c = 0; c < static_cast<std::size_t>(k); ++c) {
      if (count[c] == 0) {
        // Re-seed an empty cluster at the point farthest from its own centre.
        std::size_t far = 0;
        double fd = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double dd = d2(points[i], centers[static_cast<std::size_t>(assign[i])]);
          if (dd > fd && count[static_cast<std::size_t>(assign[i])] > 1) {
            fd = dd;
            far = i;
          }
        }
        --count[static_cast<std::size_t>(assign[far])];
        assign[far] = static_cast<int>(c);
        count[c] = 1;
        centers[c] = points[far];
        changed = true;
        continue;
      }
      for (int a = 0; a < 3; ++a)
        centers[c][static_cast<std::size_t>(a)] = sum[c][static_cast<std::size_t>(a)] / static_cast<double>(count[c]);
    }
    if (!changed) break;
  }
  std::vector<int> order(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const Vec3& ca = centers[static_cast<std::size_t>(a)];
    const Vec3& cb = centers[static_cast<std::size_t>(b)];
    return std::tie(ca[2], ca[1], ca[0], a) < std::tie(cb[2], cb[1], cb[0], b);
  });
  std::vector<int> rank(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) rank[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = i;
  for (auto& a : assign) a = rank[static_cast<std::size_t>(a)];
  return assign;
}

namespace {

ObservationSet records_at(const SyntheticTruth& truth, const std::vector<std::string>& domains,
                          const std::vector<std::size_t>& blocks, const std::vector<int>& periods) {
  ObservationSet obs;
  obs.domains = domains;
  obs.variables = truth.variables;
  obs.bound = true;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    ObservationRecord r;
    r.block = blocks[i];
    r.location = truth.grid.centroid(blocks[i]);
    r.period = periods[i];
    r.domain = truth.domains[blocks[i]];
    if (!truth.variables.empty()) {
      std::vector<double> g(truth.variables.size());
      for (std::size_t v = 0; v < g.size(); ++v) g[v] = truth.grades[v][blocks[i]];
      r.grades = std::move(g);
    }
    obs.records.push_back(std::move(r));
  }
  return obs;
}

std::vector<std::size_t> sample_blocks(std::size_t n_blocks, double fraction, Rng& rng) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("sampling fraction must lie in (0, 1]");
  const auto n = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n_blocks)));
  if (n == 0) throw DataError("sampling fraction yields no samples");
  auto perm = random_permutation(n_blocks, rng);
  perm.resize(n);
  std::sort(perm.begin(), perm.end());
  return perm;
}

}  // namespace

ObservationSet sample_observations(const SyntheticTruth& truth, const std::vector<std::string>& domains,
                                   double fraction, int n_periods, std::uint64_t seed) {
  if (n_periods < 1) throw ConfigError("n_periods must be >= 1");
  Rng rng = make_rng(seed, Stream::synthetic, 1);
  const auto blocks = sample_blocks(truth.grid.size(), fraction, rng);
  std::vector<Vec3> pts;
  for (const auto b : blocks) pts.push_back(truth.grid.centroid(b));
  const auto periods = kmeans_periods(pts, n_periods, derive_seed(seed, Stream::synthetic, 2));
  return records_at(truth, domains, blocks, periods);
}

ObservationSet sample_drill(const SyntheticTruth& truth, const std::vector<std::string>& domains, double fraction,
                            std::uint64_t seed) {
  Rng rng = make_rng(seed, Stream::synthetic, 3);
  const auto blocks = sample_blocks(truth.grid.size(), fraction, rng);
  return records_at(truth, domains, blocks, std::vector<int>(blocks.size(), 0));
}

}  // namespace pgu
