#include "pgu/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "pgu/error.hpp"

namespace pgu {
namespace {

using nlohmann::json;

// Object accessor that remembers which keys were read so leftovers can be
// reported as unknown.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError("config: '" + path_ + "' must be an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& require(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) throw ConfigError("config: missing key '" + qualified(key) + "'");
    return j_.at(key);
  }
  const json* find(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }
  Section sub(const std::string& key) { return Section(require(key), qualified(key)); }

  template <class T>
  T get(const std::string& key) {
    return convert<T>(require(key), key);
  }
  template <class T>
  void get_to(const std::string& key, T& out) {
    if (const json* v = find(key)) out = convert<T>(*v, key);
  }

  std::string qualified(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError("config: unknown key '" + qualified(it.key()) + "'");
  }

 private:
  template <class T>
  T convert(const json& v, const std::string& key) const {
    try {
      return v.get<T>();
    } catch (const json::exception&) {
      throw ConfigError("config: bad value for '" + qualified(key) + "'");
    }
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

Vec3 vec3(const json& v, const std::string& name) {
  if (!v.is_array() || v.size() != 3) throw ConfigError("config: '" + name + "' must be a 3-element array");
  try {
    return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
  } catch (const json::exception&) {
    throw ConfigError("config: '" + name + "' must hold numbers");
  }
}

GridSpec parse_grid(Section s) {
  GridSpec g;
  const json& n = s.require("n");
  if (!n.is_array() || n.size() != 3) throw ConfigError("config: 'grid.n' must be a 3-element array");
  try {
    const auto nx = n[0].get<long long>(), ny = n[1].get<long long>(), nz = n[2].get<long long>();
    if (nx < 1 || ny < 1 || nz < 1) throw ConfigError("config: 'grid.n' counts must be >= 1");
    g.nx = static_cast<std::size_t>(nx);
    g.ny = static_cast<std::size_t>(ny);
    g.nz = static_cast<std::size_t>(nz);
  } catch (const json::exception&) {
    throw ConfigError("config: 'grid.n' must hold integers");
  }
  const Vec3 size = vec3(s.require("size"), "grid.size");
  g.dx = size[0];
  g.dy = size[1];
  g.dz = size[2];
  if (const json* o = s.find("origin")) g.origin = vec3(*o, "grid.origin");
  else g.origin = {g.dx / 2, g.dy / 2, g.dz / 2};
  s.finish();
  g.validate();
  return g;
}

StructureKind parse_kind(const std::string& name, const std::string& where) {
  if (name == "spherical") return StructureKind::spherical;
  if (name == "exponential") return StructureKind::exponential;
  if (name == "gaussian") return StructureKind::gaussian;
  throw ConfigError("config: unknown structure type '" + name + "' in '" + where + "'");
}

VariogramModel parse_variogram(Section s) {
  double nugget = 0.0;
  s.get_to("nugget", nugget);
  const json& list = s.require("structures");
  if (!list.is_array() || list.empty())
    throw ConfigError("config: '" + s.qualified("structures") + "' must be a non-empty array");
  std::vector<VariogramStructure> structures;
  for (std::size_t i = 0; i < list.size(); ++i) {
    Section st(list[i], s.qualified("structures") + "[" + std::to_string(i) + "]");
    VariogramStructure vs;
    vs.kind = parse_kind(st.get<std::string>("type"), st.qualified("type"));
    st.get_to("sill", vs.sill);
    const json& r = st.require("ranges");
    if (r.is_number()) {
      const double v = r.get<double>();
      vs.ranges = {v, v, v};
    } else {
      vs.ranges = vec3(r, st.qualified("ranges"));
    }
    if (const json* a = st.find("angles")) vs.angles = vec3(*a, st.qualified("angles"));
    st.finish();
    structures.push_back(vs);
  }
  s.finish();
  return VariogramModel(nugget, std::move(structures));
}

void parse_rule_node(const json& j, const std::string& path, RuleTopology& t, std::size_t node) {
  Section s(j, path);
  const std::string axis = s.get<std::string>("axis");
  if (axis == "g1") t.nodes[node].axis = 0;
  else if (axis == "g2") t.nodes[node].axis = 1;
  else throw ConfigError("config: '" + s.qualified("axis") + "' must be g1 or g2");
  const json& parts = s.require("parts");
  if (!parts.is_array()) throw ConfigError("config: '" + s.qualified("parts") + "' must be an array");
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const std::string where = s.qualified("parts") + "[" + std::to_string(i) + "]";
    if (parts[i].is_string()) {
      const std::string label = parts[i].get<std::string>();
      const auto it = std::find(t.domains.begin(), t.domains.end(), label);
      if (it == t.domains.end()) throw ConfigError("config: unknown domain '" + label + "' in '" + where + "'");
      t.nodes[node].parts.push_back({true, static_cast<int>(it - t.domains.begin())});
    } else {
      const std::size_t child = t.nodes.size();
      t.nodes.emplace_back();
      t.nodes[node].parts.push_back({false, static_cast<int>(child)});
      parse_rule_node(parts[i], where, t, child);
    }
  }
  s.finish();
}

std::array<VariogramModel, 2> parse_variogram_pair(Section s) {
  std::array<VariogramModel, 2> v{parse_variogram(s.sub("g1")), parse_variogram(s.sub("g2"))};
  s.finish();
  return v;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

PipelineConfig parse_pipeline(Section s) {
  PipelineConfig c;
  s.get_to("neighbourhood_k", c.neighbourhood_k);
  s.get_to("n_assimilations", c.n_assimilations);
  s.get_to("localization_radius", c.localization_radius);
  s.get_to("gibbs_iterations", c.gibbs_iterations);
  s.get_to("max_neighbors", c.max_neighbors);
  s.get_to("grf_obs_noise_sd", c.grf_obs_noise_sd);
  s.get_to("extreme_percentile", c.extreme_percentile);
  s.get_to("rbig_max_iterations", c.rbig_max_iterations);
  s.get_to("threshold_search_budget", c.threshold_search_budget);
  s.get_to("threshold_search_halfwidth", c.threshold_search_halfwidth);
  if (const json* v = s.find("threshold_optimisation")) {
    const std::string mode = v->is_string() ? v->get<std::string>() : "";
    if (mode == "every_period") c.threshold_optimisation = ThresholdSchedule::every_period;
    else if (mode == "final") c.threshold_optimisation = ThresholdSchedule::final_only;
    else if (mode == "off") c.threshold_optimisation = ThresholdSchedule::off;
    else throw ConfigError("config: 'pipeline.threshold_optimisation' must be every_period, final or off");
  }
  if (const json* w = s.find("score_weights")) {
    if (!w->is_array() || w->size() != 2)
      throw ConfigError("config: 'pipeline.score_weights' must be [w1, w2]");
    c.score_weights = {(*w)[0].get<double>(), (*w)[1].get<double>()};
  }
  s.get_to("tail_pass", c.tail_pass);
  s.get_to("min_grade_observations", c.min_grade_observations);
  s.get_to("grade_obs_noise_sd", c.grade_obs_noise_sd);
  s.get_to("rng_seed", c.rng_seed);
  s.get_to("threads", c.threads);
  s.finish();
  c.validate();
  return c;
}

}  // namespace

void PipelineConfig::validate() const {
  if (n_assimilations < 1) throw ConfigError("config: 'pipeline.n_assimilations' must be >= 1");
  if (!(localization_radius > 0.0)) throw ConfigError("config: 'pipeline.localization_radius' must be > 0");
  if (!(grf_obs_noise_sd > 0.0)) throw ConfigError("config: 'pipeline.grf_obs_noise_sd' must be > 0");
  if (!(grade_obs_noise_sd > 0.0)) throw ConfigError("config: 'pipeline.grade_obs_noise_sd' must be > 0");
  if (!(extreme_percentile > 0.5 && extreme_percentile < 1.0))
    throw ConfigError("config: 'pipeline.extreme_percentile' must lie in (0.5, 1)");
  if (threshold_search_budget < 1) throw ConfigError("config: 'pipeline.threshold_search_budget' must be >= 1");
  if (!(threshold_search_halfwidth > 0.0))
    throw ConfigError("config: 'pipeline.threshold_search_halfwidth' must be > 0");
  if (max_neighbors < 1) throw ConfigError("config: 'pipeline.max_neighbors' must be >= 1");
  if (rbig_max_iterations < 1) throw ConfigError("config: 'pipeline.rbig_max_iterations' must be >= 1");
  try {
    score_weights.validate();
  } catch (const ConfigError&) {
    throw ConfigError("config: 'pipeline.score_weights' must be non-negative and sum to 1");
  }
}

std::string to_string(ThresholdSchedule s) {
  switch (s) {
    case ThresholdSchedule::every_period: return "every_period";
    case ThresholdSchedule::final_only: return "final";
    case ThresholdSchedule::off: return "off";
  }
  return "?";
}

static Config parse_config_impl(const std::string& text, const std::filesystem::path& base_dir) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  Section s(root, "");
  Config c;
  c.base_dir = base_dir;
  c.grid = parse_grid(s.sub("grid"));
  c.topology.domains = s.get<std::vector<std::string>>("domains");
  c.proportions = s.get<std::vector<double>>("proportions");
  if (c.proportions.size() != c.topology.domains.size())
    throw ConfigError("config: 'proportions' must have one value per domain");
  c.topology.nodes.emplace_back();
  parse_rule_node(s.require("rule"), "rule", c.topology, 0);
  c.topology.validate();
  c.variograms = parse_variogram_pair(s.sub("variograms"));

  if (s.has("grades")) {
    Section g = s.sub("grades");
    GradeConfig gc;
    gc.variables = g.get<std::vector<std::string>>("variables");
    if (gc.variables.empty()) throw ConfigError("config: 'grades.variables' must not be empty");
    if (g.has("factor_variogram")) gc.factor_variogram = parse_variogram(g.sub("factor_variogram"));
    g.finish();
    c.grades = gc;
  }
  if (s.has("prior")) {
    Section p = s.sub("prior");
    p.get_to("n_realizations", c.prior.n_realizations);
    if (const json* v = p.find("conditioning")) {
      if (!v->is_string()) throw ConfigError("config: 'prior.conditioning' must be a path");
      c.prior.conditioning = resolve(base_dir, v->get<std::string>());
    }
    p.get_to("max_simulated", c.prior.simulation.max_simulated);
    p.get_to("max_data", c.prior.simulation.max_data);
    p.finish();
    if (c.prior.n_realizations < 2) throw ConfigError("config: 'prior.n_realizations' must be >= 2");
  }
  if (s.has("pipeline")) c.pipeline = parse_pipeline(s.sub("pipeline"));
  if (s.has("synthetic")) {
    Section y = s.sub("synthetic");
    SyntheticConfig sc;
    sc.variograms = parse_variogram_pair(y.sub("variograms"));
    y.get_to("threshold_shift", sc.threshold_shift);
    if (!sc.threshold_shift.empty() && sc.threshold_shift.size() != c.topology.n_thresholds())
      throw ConfigError("config: 'synthetic.threshold_shift' needs one value per threshold");
    if (const json* t = y.find("grade_targets")) {
      Section ts(*t, "synthetic.grade_targets");
      for (const auto& d : c.topology.domains) {
        Section ds = ts.sub(d);
        GradeTarget gt;
        gt.mean = ds.get<std::vector<double>>("mean");
        gt.sd = ds.get<std::vector<double>>("sd");
        ds.finish();
        if (gt.mean.size() != c.grade_variables().size() || gt.sd.size() != gt.mean.size())
          throw ConfigError("config: '" + ts.qualified(d) + "' needs one mean and sd per grade variable");
        sc.grade_targets.push_back(gt);
      }
      ts.finish();
    }
    if (y.has("grade_variogram")) sc.grade_variogram = parse_variogram(y.sub("grade_variogram"));
    y.get_to("grade_correlation", sc.grade_correlation);
    y.get_to("sampling_fraction", sc.sampling_fraction);
    y.get_to("n_periods", sc.n_periods);
    y.get_to("drill_fraction", sc.drill_fraction);
    y.get_to("seed", sc.seed);
    y.finish();
    if (!(sc.sampling_fraction > 0.0 && sc.sampling_fraction <= 1.0))
      throw ConfigError("config: 'synthetic.sampling_fraction' must lie in (0, 1]");
    if (!(sc.drill_fraction > 0.0 && sc.drill_fraction <= 1.0))
      throw ConfigError("config: 'synthetic.drill_fraction' must lie in (0, 1]");
    if (sc.n_periods < 1) throw ConfigError("config: 'synthetic.n_periods' must be >= 1");
    if (!(std::abs(sc.grade_correlation) < 1.0)) throw ConfigError("config: 'synthetic.grade_correlation' must lie in (-1, 1)");
    if (c.grades && sc.grade_targets.empty()) throw ConfigError("config: missing key 'synthetic.grade_targets'");
    c.synthetic = sc;
  }
  s.finish();
  return c;
}

Config parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  try {
    return parse_config_impl(text, base_dir);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

}  // namespace pgu
