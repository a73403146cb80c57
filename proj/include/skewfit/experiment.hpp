#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "skewfit/ablation.hpp"
#include "skewfit/agent.hpp"
#include "skewfit/environments.hpp"
#include "skewfit/skew.hpp"

namespace skewfit {

enum class ExperimentKind { FourRoomsOracle, LabyrinthJoint, VarianceAblation, LemmaSuite };

const char* to_string(ExperimentKind kind);
ExperimentKind parse_experiment_kind(std::string_view name);

struct LemmaSuiteConfig {
  std::size_t derivative_pairs = 100;
  std::size_t derivative_atoms = 8;
  double step = 1e-4;
  double derivative_tolerance = 1e-5;
  std::size_t gain_pairs = 500;
  std::size_t gain_atoms = 16;
  std::vector<double> gain_grid{-1.0, -0.5, -0.25, -0.1, -0.05, -0.01, -1e-3, -1e-4, -1e-5, -1e-6, -1e-7, -1e-8};
  std::size_t simple_p0 = 50;
  std::size_t simple_atoms = 16;
  std::vector<double> gammas{0.3, 0.5, 0.9};
  std::size_t max_iters = 500;
  double tol = 1e-6;
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::FourRoomsOracle;
  std::vector<double> alpha_list{-1.0, -0.75, -0.5, -0.25, 0.0};
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  /// Skew-Fit iterations (Four Rooms) or training epochs (labyrinth).
  std::size_t iterations = 100;
  std::filesystem::path output_dir = "out";

  std::size_t metric_resolution = 11;
  FourRoomsConfig fourrooms;
  SkewConfig skew = default_fourrooms_skew();

  std::string labyrinth_map;  // empty: built-in 15x15 spiral
  std::size_t labyrinth_horizon = 60;
  std::size_t episodes_per_epoch = 20;
  std::size_t updates_per_epoch = 0;
  std::size_t terminal_window = 1000;
  double labyrinth_floor = 1e-3;
  bool labyrinth_stop_at_goal = false;
  bool labyrinth_weights_from_window = true;
  GoalSource labyrinth_goal_source = GoalSource::FromSkewedEmpirical;
  double learning_rate = 0.1;
  double discount = 0.95;
  double epsilon = 0.2;
  std::size_t buffer_capacity = 100000;
  RelabelFractions relabel;

  AblationConfig ablation;
  LemmaSuiteConfig lemma;

  static SkewConfig default_fourrooms_skew();

  /// Flat `key = value` lines; `#` starts a comment. Unknown keys and bad
  /// values throw ConfigError naming the field.
  static ExperimentConfig parse(std::string_view text);
  static ExperimentConfig load(const std::filesystem::path& path);
  void set(const std::string& key, const std::string& value);
  /// Every key with its current value, in a fixed order. parse(to_text()) round-trips.
  std::string to_text() const;
  void validate() const;

  /// Skew settings with geometry resolved against the Four Rooms world.
  SkewConfig fourrooms_skew(double alpha) const;
  Labyrinth make_labyrinth() const;
  JointConfig joint_config(const Labyrinth& env, double alpha) const;
};

struct RunOverrides {
  std::optional<std::string> experiment;
  std::optional<std::vector<double>> alpha_list;
  std::optional<std::vector<std::uint64_t>> seeds;
  std::optional<std::filesystem::path> output_dir;
};

void apply_overrides(ExperimentConfig& config, const RunOverrides& overrides);

SkewFitRun run_fourrooms_oracle(const ExperimentConfig& config, double alpha, std::uint64_t seed);
JointResult run_labyrinth(const ExperimentConfig& config, double alpha, std::uint64_t seed);
std::vector<VarianceRow> run_variance_ablation(const ExperimentConfig& config, std::uint64_t seed);
/// All lemma checks; the document carries per-check pass counts and "all_pass".
nlohmann::json run_lemma_suite(const LemmaSuiteConfig& config, std::uint64_t seed);

struct RunOutcome {
  std::vector<std::filesystem::path> files;
  nlohmann::json manifest;
};

/// Runs the configured experiment for every (alpha, seed) pair and writes
/// per-run CSVs, summary.csv and manifest.json under output_dir.
RunOutcome run(const ExperimentConfig& config);

/// Loads, overrides, validates and runs. Returns the process exit code and
/// writes diagnostics to `err`.
int run_from_file(const std::filesystem::path& config_path, const RunOverrides& overrides, std::ostream& out,
                  std::ostream& err);

/// Fixed-precision rendering used in every CSV cell.
std::string format_number(double v);
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace skewfit
