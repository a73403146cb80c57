#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "skewfit/environments.hpp"
#include "skewfit/metrics.hpp"
#include "skewfit/rng.hpp"
#include "skewfit/skew.hpp"

namespace skewfit {

struct Transition {
  Cell state;
  int action = 0;
  Cell next;
  Cell goal;
  double reward = 0.0;
  /// True only when `next` equals `goal`; running out of horizon is not terminal.
  bool done = false;
};

/// Q(s, g, a) over dense valid-cell indices.
class GoalQTable {
 public:
  GoalQTable(std::size_t cell_count, double learning_rate, double discount, double epsilon);

  std::size_t cell_count() const { return cells_; }
  double learning_rate() const { return learning_rate_; }
  double discount() const { return discount_; }
  double epsilon() const { return epsilon_; }
  void set_epsilon(double epsilon);

  double& at(std::size_t state, std::size_t goal, int action) { return q_[offset(state, goal) + std::size_t(action)]; }
  double at(std::size_t state, std::size_t goal, int action) const { return q_[offset(state, goal) + std::size_t(action)]; }
  double max_value(std::size_t state, std::size_t goal) const;
  /// Lowest action index among the maximizers.
  int greedy_action(std::size_t state, std::size_t goal) const;
  std::span<const double> values() const { return q_; }

 private:
  std::size_t offset(std::size_t state, std::size_t goal) const { return (state * cells_ + goal) * kActionCount; }

  std::size_t cells_;
  double learning_rate_;
  double discount_;
  double epsilon_;
  std::vector<double> q_;
};

/// Fixed-capacity FIFO of transitions. Each entry keeps a handle to its
/// episode's state sequence so hindsight goals can be drawn from the future.
class ReplayBuffer {
 public:
  struct Entry {
    Transition transition;
    std::shared_ptr<const std::vector<Cell>> episode;  // states s_0 .. s_T
    std::size_t step = 0;                              // transition goes s_step -> s_{step+1}

    std::span<const Cell> future_states() const;
  };

  explicit ReplayBuffer(std::size_t capacity);

  void push(Entry entry);
  std::size_t size() const { return size_; }
  std::size_t capacity() const { return entries_.size(); }
  /// i = 0 is the oldest retained entry.
  const Entry& operator[](std::size_t i) const { return entries_[(head_ + i) % entries_.size()]; }
  const Entry& sample(Rng& rng) const { return (*this)[uniform_index(rng, size_)]; }

 private:
  std::vector<Entry> entries_;
  std::size_t head_ = 0;
  std::size_t size_ = 0;
};

int select_action(const GoalQTable& table, std::size_t state, std::size_t goal, Rng& rng);
int select_action(const GoalQTable& table, std::size_t state, std::size_t goal, std::uint64_t seed);

enum class RelabelSource { Skewed, Future, Original };

struct RelabelFractions {
  double skewed = 0.5;
  double future = 0.3;
  // Remainder keeps the original goal.
};

struct RelabelDraw {
  Cell goal;
  RelabelSource source;
};

/// Picks a replacement goal: skewed-distribution draw (snapped to the nearest
/// free cell), a uniformly chosen future state of the episode, or the original
/// goal. With no future states their share falls to the original goal.
RelabelDraw relabel(const Transition& transition, std::span<const Cell> future_states,
                    const SkewedEmpirical& skewed, const Labyrinth& env, Rng& rng,
                    const RelabelFractions& fractions = {});
RelabelDraw relabel(const Transition& transition, std::span<const Cell> future_states,
                    const SkewedEmpirical& skewed, const Labyrinth& env, std::uint64_t seed,
                    const RelabelFractions& fractions = {});

/// Rewrites reward and done for a new goal.
Transition with_goal(const Transition& t, Cell goal);

/// One tabular Bellman backup; returns the new entry value.
double q_update(GoalQTable& table, const Labyrinth& env, const Transition& t);

enum class GoalMode {
  /// Goals from the Skew-Fit distribution over terminal states.
  SkewFit,
  /// Every episode targets fixed_goal.
  FixedCell,
  /// Goals uniform over valid cells.
  UniformValid,
};

struct JointConfig {
  SkewConfig skew;
  GoalMode goal_mode = GoalMode::SkewFit;
  Cell fixed_goal;
  std::size_t episodes_per_epoch = 20;
  /// Q updates per epoch; 0 means one per transition collected in the epoch.
  std::size_t updates_per_epoch = 0;
  double learning_rate = 0.1;
  double discount = 0.95;
  double epsilon = 0.2;
  std::size_t buffer_capacity = 100000;
  /// Most recent terminal states kept for the Skew-Fit refit.
  std::size_t terminal_window = 1000;
  /// End collection episodes on arrival. Otherwise they run the full horizon
  /// and arrival only marks the transition terminal for the backup.
  bool stop_at_goal = false;
  /// Skew weights come from a density fit to the terminal window itself
  /// rather than from the previous epoch's goal model.
  bool weights_from_window = true;
  RelabelFractions relabel;

  /// Histogram over the labyrinth grid, one cell per map cell.
  static JointConfig for_labyrinth(const Labyrinth& env, double alpha);
};

struct CoveragePoint {
  std::size_t epoch = 0;
  std::size_t cells_visited = 0;
  double fraction_of_valid = 0.0;
};

struct JointResult {
  GoalQTable table;
  std::vector<EntropyReport> reports;
  std::vector<CoveragePoint> coverage;
};

/// Alternates goal-directed episode collection, relabeled Q updates, and a
/// Skew-Fit refit on terminal states.
JointResult train_joint(const Labyrinth& env, const JointConfig& config, std::size_t epochs,
                        std::uint64_t seed);

/// Greedy rollout from `from` toward `goal`; returns the number of steps taken
/// to reach it, or nullopt if the horizon runs out.
std::optional<std::size_t> greedy_steps_to_goal(const GoalQTable& table, const Labyrinth& env, Cell from,
                                                Cell goal, std::size_t max_steps);

}  // namespace skewfit
