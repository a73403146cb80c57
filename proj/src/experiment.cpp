#include "skewfit/experiment.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>

#include "skewfit/error.hpp"
#include "skewfit/metrics.hpp"
#include "skewfit/theory.hpp"

namespace skewfit {

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr int kManifestSchema = 1;

[[noreturn]] void bad_field(const std::string& key, const std::string& why) {
  throw Error(ErrorCode::ConfigError, "field '" + key + "': " + why);
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end || v.empty()) bad_field(key, "expected a number, got '" + v + "'");
  return out;
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end || v.empty())
    bad_field(key, "expected a nonnegative integer, got '" + v + "'");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  bad_field(key, "expected true or false, got '" + v + "'");
}

std::vector<double> to_doubles(const std::string& key, const std::string& v) {
  std::vector<double> out;
  if (trim(v).empty()) return out;
  for (const auto& part : split(v, ',')) out.push_back(to_double(key, part));
  return out;
}

std::vector<std::uint64_t> to_uints(const std::string& key, const std::string& v) {
  std::vector<std::uint64_t> out;
  if (trim(v).empty()) return out;
  for (const auto& part : split(v, ',')) out.push_back(to_uint(key, part));
  return out;
}

template <typename T>
std::string join(const std::vector<T>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ", ";
    if constexpr (std::is_floating_point_v<T>) out += format_number(xs[i]);
    else out += std::to_string(xs[i]);
  }
  return out;
}

std::string walls_text(const std::vector<Box2>& walls) {
  std::string out;
  for (std::size_t i = 0; i < walls.size(); ++i) {
    if (i) out += "; ";
    const auto& w = walls[i];
    out += format_number(w.lo.x) + " " + format_number(w.lo.y) + " " + format_number(w.hi.x) + " " +
           format_number(w.hi.y);
  }
  return out;
}

std::vector<Box2> parse_walls(const std::string& key, const std::string& v) {
  std::vector<Box2> out;
  if (trim(v).empty()) return out;
  for (const auto& item : split(v, ';')) {
    std::istringstream in(item);
    std::vector<std::string> nums;
    for (std::string tok; in >> tok;) nums.push_back(tok);
    if (nums.size() != 4) bad_field(key, "each wall needs 4 numbers 'x0 y0 x1 y1'");
    out.push_back({{to_double(key, nums[0]), to_double(key, nums[1])}, {to_double(key, nums[2]), to_double(key, nums[3])}});
  }
  return out;
}

struct Field {
  std::function<void(ExperimentConfig&, const std::string& key, const std::string& value)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define SF_NUM(expr)                                                                              \
  Field {                                                                                         \
    [](ExperimentConfig& c, const std::string& k, const std::string& v) { expr = to_double(k, v); }, \
        [](const ExperimentConfig& c) { return format_number(expr); }                             \
  }
#define SF_UINT(expr)                                                                             \
  Field {                                                                                         \
    [](ExperimentConfig& c, const std::string& k, const std::string& v) {                         \
      expr = static_cast<std::decay_t<decltype(expr)>>(to_uint(k, v));                            \
    },                                                                                            \
        [](const ExperimentConfig& c) { return std::to_string(expr); }                            \
  }

const char* goal_source_name(GoalSource s) { return s == GoalSource::FromModel ? "model" : "skewed"; }

GoalSource parse_goal_source(const std::string& key, const std::string& v) {
  if (v == "model" || v == "FromModel") return GoalSource::FromModel;
  if (v == "skewed" || v == "FromSkewedEmpirical") return GoalSource::FromSkewedEmpirical;
  bad_field(key, "expected 'model' or 'skewed', got '" + v + "'");
}

// Ordered so to_text() output is stable.
const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = {
      {"experiment",
       {[](ExperimentConfig& c, const std::string& k, const std::string& v) {
          try {
            c.experiment = parse_experiment_kind(v);
          } catch (const Error&) {
            bad_field(k, "unknown experiment '" + v + "'");
          }
        },
        [](const ExperimentConfig& c) { return std::string(to_string(c.experiment)); }}},
      {"alpha_list",
       {[](ExperimentConfig& c, const std::string& k, const std::string& v) { c.alpha_list = to_doubles(k, v); },
        [](const ExperimentConfig& c) { return join(c.alpha_list); }}},
      {"seeds",
       {[](ExperimentConfig& c, const std::string& k, const std::string& v) { c.seeds = to_uints(k, v); },
        [](const ExperimentConfig& c) { return join(c.seeds); }}},
      {"iterations", SF_UINT(c.iterations)},
      {"output_dir",
       {[](ExperimentConfig& c, const std::string&, const std::string& v) { c.output_dir = v; },
        [](const ExperimentConfig& c) { return c.output_dir.string(); }}},
      {"metrics.grid_resolution", SF_UINT(c.metric_resolution)},

      {"skew.n_collect", SF_UINT(c.skew.n_collect)},
      {"skew.resample_size", SF_UINT(c.skew.resample_size)},
      {"skew.goal_source",
       {[](ExperimentConfig& c, const std::string& k, const std::string& v) {
          c.skew.goal_source = parse_goal_source(k, v);
        },
        [](const ExperimentConfig& c) { return std::string(goal_source_name(c.skew.goal_source)); }}},
      {"density.family",
       {[](ExperimentConfig& c, const std::string& k, const std::string& v) {
          if (v == "histogram") c.skew.density.family = DensityFamily::Histogram;
          else if (v == "kde") c.skew.density.family = DensityFamily::Kde;
          else bad_field(k, "expected 'histogram' or 'kde', got '" + v + "'");
        },
        [](const ExperimentConfig& c) {
          return std::string(c.skew.density.family == DensityFamily::Histogram ? "histogram" : "kde");
        }}},
      {"density.resolution",
       {[](ExperimentConfig& c, const std::string& k, const std::string& v) {
          const auto n = to_uint(k, v);
          c.skew.density.grid.nx = c.skew.density.grid.ny = static_cast<std::size_t>(n);
        },
        [](const ExperimentConfig& c) { return std::to_string(c.skew.density.grid.nx); }}},
      {"density.floor", SF_NUM(c.skew.density.floor)},
      {"density.bandwidth", SF_NUM(c.skew.density.bandwidth)},
      {"density.uniform_mix", SF_NUM(c.skew.density.uniform_mix)},

      {"fourrooms.side", SF_NUM(c.fourrooms.side)},
      {"fourrooms.noise_sigma", SF_NUM(c.fourrooms.noise_sigma)},
      {"fourrooms.start_x", SF_NUM(c.fourrooms.start.x)},
      {"fourrooms.start_y", SF_NUM(c.fourrooms.start.y)},
      {"fourrooms.mode",
       {[](ExperimentConfig& c, const std::string& k, const std::string& v) {
          if (v == "projection") c.fourrooms.mode = ReachMode::Projection;
          else if (v == "stop_at_wall") c.fourrooms.mode = ReachMode::StopAtWall;
          else bad_field(k, "expected 'projection' or 'stop_at_wall', got '" + v + "'");
        },
        [](const ExperimentConfig& c) {
          return std::string(c.fourrooms.mode == ReachMode::Projection ? "projection" : "stop_at_wall");
        }}},
      {"fourrooms.walls",
       {[](ExperimentConfig& c, const std::string& k, const std::string& v) { c.fourrooms.walls = parse_walls(k, v); },
        [](const ExperimentConfig& c) { return walls_text(c.fourrooms.walls); }}},

      {"labyrinth.map",
       {[](ExperimentConfig& c, const std::string&, const std::string& v) { c.labyrinth_map = v; },
        [](const ExperimentConfig& c) { return c.labyrinth_map; }}},
      {"labyrinth.horizon", SF_UINT(c.labyrinth_horizon)},
      {"labyrinth.episodes_per_epoch", SF_UINT(c.episodes_per_epoch)},
      {"labyrinth.updates_per_epoch", SF_UINT(c.updates_per_epoch)},
      {"labyrinth.terminal_window", SF_UINT(c.terminal_window)},
      {"labyrinth.density_floor", SF_NUM(c.labyrinth_floor)},
      {"labyrinth.stop_at_goal",
       {[](ExperimentConfig& c, const std::string& k, const std::string& v) { c.labyrinth_stop_at_goal = to_bool(k, v); },
        [](const ExperimentConfig& c) { return std::string(c.labyrinth_stop_at_goal ? "true" : "false"); }}},
      {"labyrinth.weights_from_window",
       {[](ExperimentConfig& c, const std::string& k, const std::string& v) {
          c.labyrinth_weights_from_window = to_bool(k, v);
        },
        [](const ExperimentConfig& c) { return std::string(c.labyrinth_weights_from_window ? "true" : "false"); }}},
      {"labyrinth.goal_source",
       {[](ExperimentConfig& c, const std::string& k, const std::string& v) {
          c.labyrinth_goal_source = parse_goal_source(k, v);
        },
        [](const ExperimentConfig& c) { return std::string(goal_source_name(c.labyrinth_goal_source)); }}},
      {"agent.learning_rate", SF_NUM(c.learning_rate)},
      {"agent.discount", SF_NUM(c.discount)},
      {"agent.epsilon", SF_NUM(c.epsilon)},
      {"agent.buffer_capacity", SF_UINT(c.buffer_capacity)},
      {"agent.relabel_skewed", SF_NUM(c.relabel.skewed)},
      {"agent.relabel_future", SF_NUM(c.relabel.future)},

      {"ablation.dataset_size", SF_UINT(c.ablation.dataset_size)},
      {"ablation.rare_fraction", SF_NUM(c.ablation.rare_fraction)},
      {"ablation.batch_size", SF_UINT(c.ablation.batch_size)},
      {"ablation.draws", SF_UINT(c.ablation.draws)},
      {"ablation.floor", SF_NUM(c.ablation.floor)},

      {"lemma.derivative_pairs", SF_UINT(c.lemma.derivative_pairs)},
      {"lemma.derivative_atoms", SF_UINT(c.lemma.derivative_atoms)},
      {"lemma.step", SF_NUM(c.lemma.step)},
      {"lemma.derivative_tolerance", SF_NUM(c.lemma.derivative_tolerance)},
      {"lemma.gain_pairs", SF_UINT(c.lemma.gain_pairs)},
      {"lemma.gain_atoms", SF_UINT(c.lemma.gain_atoms)},
      {"lemma.gain_grid",
       {[](ExperimentConfig& c, const std::string& k, const std::string& v) { c.lemma.gain_grid = to_doubles(k, v); },
        [](const ExperimentConfig& c) { return join(c.lemma.gain_grid); }}},
      {"lemma.simple_p0", SF_UINT(c.lemma.simple_p0)},
      {"lemma.simple_atoms", SF_UINT(c.lemma.simple_atoms)},
      {"lemma.gammas",
       {[](ExperimentConfig& c, const std::string& k, const std::string& v) { c.lemma.gammas = to_doubles(k, v); },
        [](const ExperimentConfig& c) { return join(c.lemma.gammas); }}},
      {"lemma.max_iters", SF_UINT(c.lemma.max_iters)},
      {"lemma.tol", SF_NUM(c.lemma.tol)},
  };
  return table;
}

#undef SF_NUM
#undef SF_UINT

std::string fmt_alpha_tag(double alpha) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", alpha);
  return buf;
}

void write_file(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << body;
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

double mean_of(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return xs.empty() ? 0.0 : s / double(xs.size());
}

}  // namespace

// ---------------------------------------------------------------------------

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v == 0.0 ? 0.0 : v);
  return buf;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

const char* to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::FourRoomsOracle: return "FourRoomsOracle";
    case ExperimentKind::LabyrinthJoint: return "LabyrinthJoint";
    case ExperimentKind::VarianceAblation: return "VarianceAblation";
    case ExperimentKind::LemmaSuite: return "LemmaSuite";
  }
  return "?";
}

ExperimentKind parse_experiment_kind(std::string_view name) {
  for (auto k : {ExperimentKind::FourRoomsOracle, ExperimentKind::LabyrinthJoint, ExperimentKind::VarianceAblation,
                 ExperimentKind::LemmaSuite})
    if (name == to_string(k)) return k;
  throw Error(ErrorCode::ConfigError, "unknown experiment '" + std::string(name) + "'");
}

SkewConfig ExperimentConfig::default_fourrooms_skew() {
  SkewConfig s;
  s.alpha = -1.0;
  s.n_collect = 500;
  s.goal_source = GoalSource::FromModel;
  s.density.family = DensityFamily::Kde;
  s.density.grid = GridSpec{{{0.0, 0.0}, {11.0, 11.0}}, 11, 11};
  s.density.floor = 1e-3;
  s.density.bandwidth = 0.4;
  s.density.uniform_mix = 1e-3;
  return s;
}

ExperimentConfig ExperimentConfig::parse(std::string_view text) {
  ExperimentConfig cfg;
  std::istringstream in{std::string(text)};
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::ConfigError, "line " + std::to_string(line_no) + ": expected 'key = value'");
    cfg.set(trim(std::string_view(body).substr(0, eq)), trim(std::string_view(body).substr(eq + 1)));
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  for (const auto& [name, field] : fields()) {
    if (name == key) {
      field.set(*this, key, value);
      return;
    }
  }
  bad_field(key, "unknown key");
}

std::string ExperimentConfig::to_text() const {
  std::string out;
  for (const auto& [name, field] : fields()) out += name + " = " + field.get(*this) + "\n";
  return out;
}

void ExperimentConfig::validate() const {
  if (seeds.empty()) bad_field("seeds", "at least one seed required");
  if (alpha_list.empty() && experiment != ExperimentKind::LemmaSuite) bad_field("alpha_list", "at least one alpha required");
  for (double a : alpha_list)
    if (!(a >= -10.0 && a <= 0.0)) bad_field("alpha_list", "alpha " + format_number(a) + " outside [-10, 0]");
  if (skew.n_collect == 0) bad_field("skew.n_collect", "must be at least 1");
  if (metric_resolution == 0) bad_field("metrics.grid_resolution", "must be at least 1");
  if (skew.density.grid.nx == 0) bad_field("density.resolution", "must be at least 1");
  if (!(skew.density.floor >= 0.0 && skew.density.floor < 1.0)) bad_field("density.floor", "must lie in [0, 1)");
  if (!(skew.density.bandwidth > 0.0)) bad_field("density.bandwidth", "must be positive");
  if (!(skew.density.uniform_mix > 0.0 && skew.density.uniform_mix < 1.0))
    bad_field("density.uniform_mix", "must lie in (0, 1)");
  if (!(fourrooms.noise_sigma > 0.0)) bad_field("fourrooms.noise_sigma", "must be positive");
  if (!(fourrooms.side > 0.0)) bad_field("fourrooms.side", "must be positive");
  if (labyrinth_horizon == 0) bad_field("labyrinth.horizon", "must be at least 1");
  if (episodes_per_epoch == 0) bad_field("labyrinth.episodes_per_epoch", "must be at least 1");
  if (terminal_window == 0) bad_field("labyrinth.terminal_window", "must be at least 1");
  if (!(learning_rate >= 0.0 && learning_rate <= 1.0)) bad_field("agent.learning_rate", "must lie in [0, 1]");
  if (!(discount > 0.0 && discount < 1.0)) bad_field("agent.discount", "must lie in (0, 1)");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) bad_field("agent.epsilon", "must lie in [0, 1]");
  if (buffer_capacity == 0) bad_field("agent.buffer_capacity", "must be at least 1");
  if (!(relabel.skewed >= 0.0 && relabel.future >= 0.0 && relabel.skewed + relabel.future <= 1.0))
    bad_field("agent.relabel_skewed", "relabel fractions must be nonnegative and sum to at most 1");
  if (!(lemma.step > 0.0 && lemma.step <= 1e-3)) bad_field("lemma.step", "must lie in (0, 1e-3]");
  for (double g : lemma.gammas)
    if (!(g >= 0.0 && g < 1.0)) bad_field("lemma.gammas", "values must lie in [0, 1)");
  for (double a : lemma.gain_grid)
    if (!(a >= -1.0 && a < 0.0)) bad_field("lemma.gain_grid", "values must lie in [-1, 0)");
  if (ablation.draws < 2) bad_field("ablation.draws", "must be at least 2");
  if (ablation.batch_size == 0) bad_field("ablation.batch_size", "must be at least 1");
  if (ablation.dataset_size == 0) bad_field("ablation.dataset_size", "must be at least 1");
  if (!(ablation.rare_fraction >= 0.0 && ablation.rare_fraction < 1.0))
    bad_field("ablation.rare_fraction", "must lie in [0, 1)");
}

SkewConfig ExperimentConfig::fourrooms_skew(double alpha) const {
  SkewConfig s = skew;
  s.alpha = alpha;
  const Box2 world{{0.0, 0.0}, {fourrooms.side, fourrooms.side}};
  s.density.grid.bounds = world;
  s.metric_grid = entropy_grid(world, metric_resolution);
  return s;
}

Labyrinth ExperimentConfig::make_labyrinth() const {
  if (labyrinth_map.empty()) {
    const auto spiral = Labyrinth::spiral15();
    return Labyrinth::parse(spiral.to_text(), labyrinth_horizon);
  }
  return Labyrinth::load(labyrinth_map, labyrinth_horizon);
}

JointConfig ExperimentConfig::joint_config(const Labyrinth& env, double alpha) const {
  JointConfig j = JointConfig::for_labyrinth(env, alpha);
  j.skew.goal_source = labyrinth_goal_source;
  j.skew.density.floor = labyrinth_floor;
  j.episodes_per_epoch = episodes_per_epoch;
  j.updates_per_epoch = updates_per_epoch;
  j.learning_rate = learning_rate;
  j.discount = discount;
  j.epsilon = epsilon;
  j.buffer_capacity = buffer_capacity;
  j.terminal_window = terminal_window;
  j.stop_at_goal = labyrinth_stop_at_goal;
  j.weights_from_window = labyrinth_weights_from_window;
  j.relabel = relabel;
  return j;
}

void apply_overrides(ExperimentConfig& config, const RunOverrides& overrides) {
  if (overrides.experiment) config.set("experiment", *overrides.experiment);
  if (overrides.alpha_list) config.alpha_list = *overrides.alpha_list;
  if (overrides.seeds) config.seeds = *overrides.seeds;
  if (overrides.output_dir) config.output_dir = *overrides.output_dir;
}

// ---------------------------------------------------------------------------
// Experiment bodies

SkewFitRun run_fourrooms_oracle(const ExperimentConfig& config, double alpha, std::uint64_t seed) {
  FourRoomsConfig env_cfg = config.fourrooms;
  env_cfg.start_room = Box2{{env_cfg.side / 2.0 + 0.5, 0.0}, {env_cfg.side, env_cfg.side / 2.0 - 0.5}};
  const FourRooms env(env_cfg);
  const SkewConfig skew = config.fourrooms_skew(alpha);
  const std::vector<Point2> start{env_cfg.start};
  const std::vector<double> unit{1.0};
  const DensityModel initial = fit_weighted(start, unit, skew.density);
  const Collector collector = [&env](const Point2& goal, std::uint64_t s) { return env.reach(goal, s); };
  return run_skewfit(initial, collector, skew, config.iterations, seed);
}

JointResult run_labyrinth(const ExperimentConfig& config, double alpha, std::uint64_t seed) {
  const Labyrinth env = config.make_labyrinth();
  return train_joint(env, config.joint_config(env, alpha), config.iterations, seed);
}

std::vector<VarianceRow> run_variance_ablation(const ExperimentConfig& config, std::uint64_t seed) {
  FourRoomsConfig env_cfg = config.fourrooms;
  env_cfg.start_room = Box2{{env_cfg.side / 2.0 + 0.5, 0.0}, {env_cfg.side, env_cfg.side / 2.0 - 0.5}};
  const FourRooms env(env_cfg);
  auto rng = make_rng(seed, 7);
  const auto dataset = imbalanced_dataset(env, config.ablation, rng);
  const GridSpec grid = entropy_grid(env.world(), config.metric_resolution);
  const std::vector<GradientEstimator> methods{GradientEstimator::IS, GradientEstimator::SIR, GradientEstimator::MLE};
  return variance_ablation(dataset, grid, config.alpha_list, methods, config.ablation, seed);
}

nlohmann::json run_lemma_suite(const LemmaSuiteConfig& config, std::uint64_t seed) {
  using namespace theory;
  nlohmann::json doc;
  bool all_pass = true;
  auto record = [&](const std::string& name, std::size_t passed, std::size_t total, nlohmann::json detail) {
    const bool ok = passed == total;
    all_pass = all_pass && ok;
    doc["checks"].push_back({{"name", name}, {"passed", passed}, {"total", total}, {"pass", ok}, {"detail", std::move(detail)}});
  };

  // Hand cases.
  {
    const DiscreteDist p({0.8, 0.2});
    const auto skewed = exact_skew(p, p, -1.0);
    const bool uniform = std::abs(skewed[0] - 0.5) < 1e-15 && std::abs(skewed[1] - 0.5) < 1e-15;
    const auto deriv = verify_entropy_derivative(p, p, config.step);
    const auto gain = verify_lemma_32(p, p, std::vector<double>{-1.0, -0.5, -0.1, -0.01});
    const bool all_four = std::all_of(gain.increased.begin(), gain.increased.end(), [](bool b) { return b; });
    const auto simple = iterate_simple_case(p, 0.5, 1, 0.0);
    const bool simple_ok = std::abs(simple.sequence[1][0] - 2.0 / 3.0) < 1e-12;
    const std::size_t passed = std::size_t(uniform) + std::size_t(deriv.pass) + std::size_t(all_four) + std::size_t(simple_ok);
    record("hand_cases", passed, 4,
           {{"skew_0.8_0.2_alpha_-1", std::vector<double>{skewed[0], skewed[1]}},
            {"derivative", to_json(deriv)},
            {"entropy_gain", to_json(gain)},
            {"simple_case_one_step", std::vector<double>{simple.sequence[1][0], simple.sequence[1][1]}}});
  }

  // Entropy-derivative identity on random pairs.
  {
    auto rng = make_rng(seed, 101);
    std::size_t passed = 0;
    double worst = 0.0;
    for (std::size_t i = 0; i < config.derivative_pairs; ++i) {
      const auto p = random_dist(config.derivative_atoms, rng);
      const auto q = random_dist(config.derivative_atoms, rng);
      const auto r = verify_entropy_derivative(p, q, config.step);
      worst = std::max(worst, r.abs_error);
      if (r.abs_error < config.derivative_tolerance) ++passed;
    }
    record("entropy_derivative", passed, config.derivative_pairs,
           {{"worst_abs_error", worst}, {"tolerance", config.derivative_tolerance}, {"step", config.step}});
  }

  // Entropy gain under skewing, pairs with positive covariance only.
  {
    auto rng = make_rng(seed, 202);
    std::size_t passed = 0, drawn = 0;
    double least_negative_a = -1.0;
    for (std::size_t found = 0; found < config.gain_pairs;) {
      const auto p = random_dist(config.gain_atoms, rng);
      const auto q = random_dist(config.gain_atoms, rng);
      ++drawn;
      if (!(cov_log_densities(p, q) > 0.0)) continue;
      ++found;
      const auto r = verify_lemma_32(p, q, config.gain_grid);
      if (r.pass) {
        ++passed;
        least_negative_a = std::max(least_negative_a, *r.verified_a);
      }
    }
    record("entropy_gain", passed, config.gain_pairs,
           {{"pairs_drawn", drawn}, {"grid", config.gain_grid}, {"least_negative_verified_a", least_negative_a}});
  }

  // Simple-case convergence to uniform.
  {
    auto rng = make_rng(seed, 303);
    std::size_t passed = 0, total = 0, slowest = 0;
    double worst_drop = 0.0;
    for (std::size_t i = 0; i < config.simple_p0; ++i) {
      const auto p0 = random_dist(config.simple_atoms, rng);
      for (double gamma : config.gammas) {
        ++total;
        const auto r = iterate_simple_case(p0, gamma, config.max_iters, config.tol);
        worst_drop = std::max(worst_drop, r.worst_entropy_drop);
        if (r.iterations_to_converge && r.entropy_nondecreasing) {
          ++passed;
          slowest = std::max(slowest, *r.iterations_to_converge);
        }
      }
    }
    record("simple_case_convergence", passed, total,
           {{"max_iters", config.max_iters}, {"tol", config.tol}, {"slowest", slowest}, {"worst_entropy_drop", worst_drop}});
  }

  doc["all_pass"] = all_pass;
  doc["seed"] = seed;
  return doc;
}

// ---------------------------------------------------------------------------
// Runner

RunOutcome run(const ExperimentConfig& config) {
  config.validate();
  const auto t0 = std::chrono::steady_clock::now();
  std::error_code ec;
  std::filesystem::create_directories(config.output_dir / "runs", ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create output directory " + config.output_dir.string() + ": " + ec.message());

  RunOutcome outcome;
  auto emit = [&](const std::filesystem::path& rel, const std::string& body) {
    write_file(config.output_dir / rel, body);
    outcome.files.push_back(rel);
  };

  std::string summary;
  bool all_pass = true;
  switch (config.experiment) {
    case ExperimentKind::FourRoomsOracle: {
      summary = "alpha,seeds,mean_terminal_entropy_nats,mean_terminal_cells_visited\n";
      for (double alpha : config.alpha_list) {
        std::vector<double> entropies, cells;
        for (auto seed : config.seeds) {
          const auto result = run_fourrooms_oracle(config, alpha, seed);
          std::string csv = "iteration,alpha,entropy_nats,cells_visited,z_alpha,seed\n";
          for (const auto& r : result.reports)
            csv += std::to_string(r.iteration) + "," + format_number(r.alpha) + "," + format_number(r.entropy_nats) + "," +
                   std::to_string(r.cells_visited) + "," + format_number(r.z_alpha) + "," + std::to_string(seed) + "\n";
          emit(std::filesystem::path("runs") / ("fourrooms_alpha" + fmt_alpha_tag(alpha) + "_seed" + std::to_string(seed) + ".csv"), csv);
          if (!result.reports.empty()) {
            entropies.push_back(result.reports.back().entropy_nats);
            cells.push_back(double(result.reports.back().cells_visited));
          }
        }
        summary += format_number(alpha) + "," + std::to_string(config.seeds.size()) + "," + format_number(mean_of(entropies)) +
                   "," + format_number(mean_of(cells)) + "\n";
      }
      break;
    }
    case ExperimentKind::LabyrinthJoint: {
      summary = "alpha,seeds,mean_final_cells_visited,mean_final_fraction_of_valid,mean_final_entropy_nats\n";
      const auto env = config.make_labyrinth();
      for (double alpha : config.alpha_list) {
        std::vector<double> cells, fractions, entropies;
        for (auto seed : config.seeds) {
          const auto result = train_joint(env, config.joint_config(env, alpha), config.iterations, seed);
          std::string csv = "epoch,cells_visited,fraction_of_valid,entropy_nats,alpha,seed\n";
          for (std::size_t i = 0; i < result.coverage.size(); ++i) {
            const auto& c = result.coverage[i];
            csv += std::to_string(c.epoch) + "," + std::to_string(c.cells_visited) + "," + format_number(c.fraction_of_valid) +
                   "," + format_number(result.reports[i].entropy_nats) + "," + format_number(alpha) + "," +
                   std::to_string(seed) + "\n";
          }
          emit(std::filesystem::path("runs") / ("labyrinth_alpha" + fmt_alpha_tag(alpha) + "_seed" + std::to_string(seed) + ".csv"), csv);
          if (!result.coverage.empty()) {
            cells.push_back(double(result.coverage.back().cells_visited));
            fractions.push_back(result.coverage.back().fraction_of_valid);
            entropies.push_back(result.reports.back().entropy_nats);
          }
        }
        summary += format_number(alpha) + "," + std::to_string(config.seeds.size()) + "," + format_number(mean_of(cells)) + "," +
                   format_number(mean_of(fractions)) + "," + format_number(mean_of(entropies)) + "\n";
      }
      break;
    }
    case ExperimentKind::VarianceAblation: {
      std::map<std::pair<double, int>, std::vector<double>> by_key;
      std::vector<std::pair<double, GradientEstimator>> order;
      for (auto seed : config.seeds) {
        const auto rows = run_variance_ablation(config, seed);
        std::string csv = "alpha,method,seed,variance\n";
        for (const auto& r : rows) {
          csv += format_number(r.alpha) + "," + to_string(r.method) + "," + std::to_string(seed) + "," + format_number(r.variance) + "\n";
          auto& slot = by_key[{r.alpha, int(r.method)}];
          if (slot.empty() && seed == config.seeds.front()) order.emplace_back(r.alpha, r.method);
          slot.push_back(r.variance);
        }
        emit(std::filesystem::path("runs") / ("ablation_seed" + std::to_string(seed) + ".csv"), csv);
      }
      summary = "alpha,method,seeds,mean_variance\n";
      for (const auto& [alpha, method] : order)
        summary += format_number(alpha) + "," + to_string(method) + "," + std::to_string(config.seeds.size()) + "," +
                   format_number(mean_of(by_key[{alpha, int(method)}])) + "\n";
      break;
    }
    case ExperimentKind::LemmaSuite: {
      nlohmann::json reports = nlohmann::json::array();
      summary = "seed,check,passed,total,pass\n";
      for (auto seed : config.seeds) {
        auto doc = run_lemma_suite(config.lemma, seed);
        for (const auto& c : doc["checks"])
          summary += std::to_string(seed) + "," + c["name"].get<std::string>() + "," + std::to_string(c["passed"].get<std::size_t>()) +
                     "," + std::to_string(c["total"].get<std::size_t>()) + "," + (c["pass"].get<bool>() ? "1" : "0") + "\n";
        all_pass = all_pass && doc["all_pass"].get<bool>();
        reports.push_back(std::move(doc));
      }
      emit("lemma_report.json", nlohmann::json{{"runs", reports}, {"all_pass", all_pass}}.dump(2) + "\n");
      break;
    }
  }
  emit("summary.csv", summary);

  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const std::string effective = config.to_text();
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(fnv1a64(effective)));
  nlohmann::json files = nlohmann::json::array();
  for (const auto& f : outcome.files) files.push_back(f.generic_string());
  outcome.manifest = {{"schema_version", kManifestSchema},
                      {"experiment", to_string(config.experiment)},
                      {"config_hash", hash},
                      {"config", effective},
                      {"alpha_list", config.alpha_list},
                      {"seeds", config.seeds},
                      {"versions", {{"skewfit", kVersion}, {"compiler", __VERSION__}, {"cplusplus", __cplusplus}}},
                      {"wall_time_seconds", wall},
                      {"files", files},
                      {"all_pass", all_pass}};
  write_file(config.output_dir / "manifest.json", outcome.manifest.dump(2) + "\n");
  outcome.files.emplace_back("manifest.json");
  if (!all_pass) throw Error(ErrorCode::PreconditionUnmet, "lemma suite reported failing checks; see lemma_report.json");
  return outcome;
}

int run_from_file(const std::filesystem::path& config_path, const RunOverrides& overrides, std::ostream& out,
                  std::ostream& err) {
  try {
    auto config = ExperimentConfig::load(config_path);
    apply_overrides(config, overrides);
    const auto outcome = run(config);
    out << to_string(config.experiment) << ": wrote " << outcome.files.size() << " files to " << config.output_dir.string()
        << "\n";
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::ConfigError ? 2 : 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace skewfit
