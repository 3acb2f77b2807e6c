#include "pgu/gsim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <tuple>

#include "pgu/error.hpp"
#include "pgu/kriging.hpp"
#include "pgu/parallel.hpp"
#include "pgu/random.hpp"
#include "pgu/simd/kernels.hpp"

namespace pgu {
namespace {

struct Offset {
  long dx, dy, dz;
};

std::vector<Offset> search_template(const GridSpec& grid, const VariogramModel& model,
                                    std::size_t max_size) {
  double reach = 0.0;
  for (const auto& s : model.structures())
    for (const double r : s.ranges) reach = std::max(reach, r);
  if (reach == 0.0) reach = std::max({grid.dx, grid.dy, grid.dz});
  const auto extent = [&](double d, std::size_t n) {
    return static_cast<long>(std::min<double>(std::ceil(reach / d), static_cast<double>(n - 1)));
  };
  const long ex = extent(grid.dx, grid.nx), ey = extent(grid.dy, grid.ny), ez = extent(grid.dz, grid.nz);
  std::vector<std::tuple<double, long, long, long>> ranked;
  for (long z = -ez; z <= ez; ++z)
    for (long y = -ey; y <= ey; ++y)
      for (long x = -ex; x <= ex; ++x) {
        if (x == 0 && y == 0 && z == 0) continue;
        const double d = model.normalized_distance(
            {static_cast<double>(x) * grid.dx, static_cast<double>(y) * grid.dy, static_cast<double>(z) * grid.dz});
        if (d <= 1.0 + 1e-12) ranked.emplace_back(d, z, y, x);
      }
  std::sort(ranked.begin(), ranked.end());
  if (ranked.size() > max_size) ranked.resize(max_size);
  std::vector<Offset> out;
  out.reserve(ranked.size());
  for (const auto& [d, z, y, x] : ranked) out.push_back({x, y, z});
  return out;
}

}  // namespace

SimulationPath SimulationPath::make(std::size_t n, std::uint64_t seed) {
  Rng rng = make_rng(seed, Stream::simulation, 0);
  return {random_permutation(n, rng)};
}

std::vector<double> simulate_conditional(const GridSpec& grid,
                                         std::span<const ConditioningDatum> conditioning,
                                         const VariogramModel& model, std::uint64_t seed,
                                         const SimulationOptions& options) {
  const std::size_t n = grid.size();
  std::vector<double> values(n, 0.0);
  enum : char { empty = 0, simulated = 1, datum = 2 };
  std::vector<char> state(n, empty);

  std::map<std::size_t, std::pair<double, int>> snapped;
  for (const auto& d : conditioning) {
    if (!std::isfinite(d.value)) throw DataError("simulate_conditional: non-finite conditioning value");
    const auto b = grid.locate(d.location);
    if (!b) throw DataError("simulate_conditional: conditioning datum outside grid");
    auto& acc = snapped[*b];
    acc.first += d.value;
    acc.second += 1;
  }
  for (const auto& [b, acc] : snapped) {
    values[b] = acc.first / acc.second;
    state[b] = datum;
  }

  const auto tmpl = search_template(grid, model, options.max_template);
  std::vector<std::size_t> targets;
  targets.reserve(n - snapped.size());
  for (std::size_t b = 0; b < n; ++b)
    if (state[b] == empty) targets.push_back(b);
  const SimulationPath path = SimulationPath::make(targets.size(), seed);
  Rng rng = make_rng(seed, Stream::simulation, 1);

  std::vector<Vec3> nb_locs;
  std::vector<double> nb_vals;
  for (const std::size_t p : path.order) {
    const std::size_t b = targets[p];
    const auto [ix, iy, iz] = grid.coords(b);
    nb_locs.clear();
    nb_vals.clear();
    std::size_t n_sim = 0, n_data = 0;
    for (const Offset& o : tmpl) {
      if (n_sim >= options.max_simulated && n_data >= options.max_data) break;
      const long x = static_cast<long>(ix) + o.dx, y = static_cast<long>(iy) + o.dy,
                 z = static_cast<long>(iz) + o.dz;
      if (x < 0 || y < 0 || z < 0 || x >= static_cast<long>(grid.nx) ||
          y >= static_cast<long>(grid.ny) || z >= static_cast<long>(grid.nz))
        continue;
      const std::size_t nb = grid.index(static_cast<std::size_t>(x), static_cast<std::size_t>(y),
                                        static_cast<std::size_t>(z));
      if (state[nb] == simulated && n_sim < options.max_simulated) {
        ++n_sim;
      } else if (state[nb] == datum && n_data < options.max_data) {
        ++n_data;
      } else {
        continue;
      }
      nb_locs.push_back(grid.centroid(nb));
      nb_vals.push_back(values[nb]);
    }
    const auto kr = simple_krige(grid.centroid(b), nb_locs, nb_vals, model);
    values[b] = kr.estimate + std::sqrt(kr.variance) * standard_normal(rng);
    state[b] = simulated;
  }
  return values;
}

Ensemble simulate_prior_ensemble(const GridSpec& grid, const DomainData& data,
                                 const std::array<VariogramModel, 2>& variograms,
                                 const TruncationRule& rule, std::size_t n_real, std::uint64_t seed,
                                 const PriorOptions& options) {
  if (n_real < 1) throw ConfigError("prior: n_real must be >= 1");
  if (data.locations.size() != data.labels.size())
    throw DataError("prior: conditioning locations/labels size mismatch");
  Ensemble ens(grid, n_real, {"G1", "G2", "domain"});
  GibbsPlan plan;
  if (!data.locations.empty()) plan = make_gibbs_plan(data.locations, variograms, options.gibbs_neighbors);

  parallel_for(n_real, options.threads, [&](std::size_t r) {
    const std::uint64_t rs = derive_seed(seed, Stream::realization, r);
    GibbsState gs = gibbs_initialise(data.labels, rule, derive_seed(rs, Stream::gibbs_init, 0));
    if (!data.locations.empty())
      for (std::size_t it = 0; it < options.gibbs_iterations; ++it) gibbs_sweep(gs, plan);
    for (std::size_t g = 0; g < 2; ++g) {
      std::vector<ConditioningDatum> cond(data.locations.size());
      for (std::size_t i = 0; i < cond.size(); ++i)
        cond[i] = {data.locations[i], g == 0 ? gs.g1[i] : gs.g2[i]};
      const auto field = simulate_conditional(grid, cond, variograms[g],
                                              derive_seed(rs, Stream::simulation, g), options.simulation);
      // Stored at binary32 precision before truncation so that labels stay
      // consistent with what the ensemble file keeps.
      std::transform(field.begin(), field.end(), ens.field(r, g).begin(),
                     [](double v) { return static_cast<double>(static_cast<float>(v)); });
    }
    std::vector<std::int32_t> labels(grid.size());
    rule.truncate(ens.field(r, 0), ens.field(r, 1), labels);
    auto dom = ens.field(r, 2);
    for (std::size_t b = 0; b < labels.size(); ++b) {
      if (labels[b] < 0) throw NumericError("prior: GRF value outside the truncation rule");
      dom[b] = labels[b];
    }
  });
  return ens;
}

}  // namespace pgu
