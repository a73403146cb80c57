#include "skewfit/agent.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "skewfit/error.hpp"

namespace skewfit {

// ---------------------------------------------------------------------------
// GoalQTable

GoalQTable::GoalQTable(std::size_t cell_count, double learning_rate, double discount, double epsilon)
    : cells_(cell_count),
      learning_rate_(learning_rate),
      discount_(discount),
      epsilon_(epsilon),
      q_(cell_count * cell_count * kActionCount, 0.0) {
  if (cell_count == 0) throw Error(ErrorCode::InvalidInput, "Q-table needs at least one cell");
  if (!(learning_rate >= 0.0 && learning_rate <= 1.0))
    throw Error(ErrorCode::InvalidInput, "learning_rate must lie in [0, 1]");
  if (!(discount > 0.0 && discount < 1.0)) throw Error(ErrorCode::InvalidInput, "discount must lie in (0, 1)");
  set_epsilon(epsilon);
}

void GoalQTable::set_epsilon(double epsilon) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw Error(ErrorCode::InvalidInput, "epsilon must lie in [0, 1]");
  epsilon_ = epsilon;
}

double GoalQTable::max_value(std::size_t state, std::size_t goal) const {
  const auto* row = &q_[offset(state, goal)];
  return *std::max_element(row, row + kActionCount);
}

int GoalQTable::greedy_action(std::size_t state, std::size_t goal) const {
  const auto* row = &q_[offset(state, goal)];
  return static_cast<int>(std::max_element(row, row + kActionCount) - row);
}

// ---------------------------------------------------------------------------
// ReplayBuffer

std::span<const Cell> ReplayBuffer::Entry::future_states() const {
  if (!episode || step + 1 >= episode->size()) return {};
  return std::span<const Cell>(*episode).subspan(step + 1);
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : entries_(capacity) {
  if (capacity == 0) throw Error(ErrorCode::InvalidInput, "buffer capacity must be positive");
}

void ReplayBuffer::push(Entry entry) {
  if (size_ < entries_.size()) {
    entries_[(head_ + size_) % entries_.size()] = std::move(entry);
    ++size_;
  } else {
    entries_[head_] = std::move(entry);
    head_ = (head_ + 1) % entries_.size();
  }
}

// ---------------------------------------------------------------------------
// Acting and learning

int select_action(const GoalQTable& table, std::size_t state, std::size_t goal, Rng& rng) {
  if (table.epsilon() > 0.0 && uniform01(rng) < table.epsilon())
    return static_cast<int>(uniform_index(rng, kActionCount));
  return table.greedy_action(state, goal);
}

int select_action(const GoalQTable& table, std::size_t state, std::size_t goal, std::uint64_t seed) {
  auto rng = make_rng(seed);
  return select_action(table, state, goal, rng);
}

RelabelDraw relabel(const Transition& transition, std::span<const Cell> future_states,
                    const SkewedEmpirical& skewed, const Labyrinth& env, Rng& rng,
                    const RelabelFractions& fractions) {
  if (skewed.empty()) throw Error(ErrorCode::InvalidInput, "relabeling needs a nonempty skewed distribution");
  const double u = uniform01(rng);
  if (u < fractions.skewed) {
    const Point2 atom = sir_resample(skewed, 1, rng).front();
    return {env.nearest_valid(atom), RelabelSource::Skewed};
  }
  if (u < fractions.skewed + fractions.future && !future_states.empty()) {
    const auto k = uniform_index(rng, future_states.size());
    return {future_states[k], RelabelSource::Future};
  }
  return {transition.goal, RelabelSource::Original};
}

RelabelDraw relabel(const Transition& transition, std::span<const Cell> future_states,
                    const SkewedEmpirical& skewed, const Labyrinth& env, std::uint64_t seed,
                    const RelabelFractions& fractions) {
  auto rng = make_rng(seed);
  return relabel(transition, future_states, skewed, env, rng, fractions);
}

Transition with_goal(const Transition& t, Cell goal) {
  Transition out = t;
  out.goal = goal;
  out.reward = goal_reward(t.next, goal);
  out.done = t.next == goal;
  return out;
}

double q_update(GoalQTable& table, const Labyrinth& env, const Transition& t) {
  const auto s = env.index_of(t.state);
  const auto s_next = env.index_of(t.next);
  const auto g = env.index_of(t.goal);
  const double bootstrap = t.done ? 0.0 : table.discount() * table.max_value(s_next, g);
  double& entry = table.at(s, g, t.action);
  const double eta = table.learning_rate();
  entry = (1.0 - eta) * entry + eta * (t.reward + bootstrap);
  return entry;
}

std::optional<std::size_t> greedy_steps_to_goal(const GoalQTable& table, const Labyrinth& env, Cell from,
                                                Cell goal, std::size_t max_steps) {
  const auto g = env.index_of(goal);
  Cell s = from;
  for (std::size_t t = 0; t < max_steps; ++t) {
    if (s == goal) return t;
    s = env.move(s, table.greedy_action(env.index_of(s), g));
  }
  if (s == goal) return max_steps;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Joint training

JointConfig JointConfig::for_labyrinth(const Labyrinth& env, double alpha) {
  JointConfig cfg;
  cfg.skew.alpha = alpha;
  cfg.skew.goal_source = GoalSource::FromSkewedEmpirical;
  cfg.skew.density.family = DensityFamily::Histogram;
  cfg.skew.density.grid = GridSpec{env.bounds(), std::size_t(env.width()), std::size_t(env.height())};
  cfg.skew.metric_grid = cfg.skew.density.grid;
  return cfg;
}

namespace {

Cell propose_goal(const Labyrinth& env, const JointConfig& config, const DensityModel& model,
                  const SkewedEmpirical& skewed, Rng& rng) {
  switch (config.goal_mode) {
    case GoalMode::FixedCell:
      return config.fixed_goal;
    case GoalMode::UniformValid:
      return env.valid_cells()[uniform_index(rng, env.valid_cells().size())];
    case GoalMode::SkewFit:
      break;
  }
  if (config.skew.goal_source == GoalSource::FromSkewedEmpirical && !skewed.empty())
    return env.nearest_valid(sir_resample(skewed, 1, rng).front());
  std::vector<Point2> draw;
  sample_into(model, rng, 1, draw);
  return env.nearest_valid(draw.front());
}

}  // namespace

JointResult train_joint(const Labyrinth& env, const JointConfig& config, std::size_t epochs,
                        std::uint64_t seed) {
  config.skew.validate();
  if (config.episodes_per_epoch == 0) throw Error(ErrorCode::InvalidInput, "episodes_per_epoch must be positive");
  if (config.goal_mode == GoalMode::FixedCell && !env.is_free(config.fixed_goal))
    throw Error(ErrorCode::InvalidInput, "fixed goal is not a free cell");

  JointResult result{GoalQTable(env.valid_cells().size(), config.learning_rate, config.discount, config.epsilon),
                     {}, {}};
  GoalQTable& table = result.table;
  ReplayBuffer buffer(config.buffer_capacity);

  const Point2 start_point = Labyrinth::center(env.start());
  const std::vector<Point2> seed_state{start_point};
  const std::vector<double> unit{1.0};
  DensityModel model = fit_weighted(seed_state, unit, config.skew.density);
  SkewedEmpirical skewed = build_skewed_empirical(seed_state, unit);

  std::vector<bool> visited(env.valid_cells().size(), false);
  std::size_t visited_count = 0;
  auto visit = [&](Cell c) {
    const auto i = env.index_of(c);
    if (!visited[i]) {
      visited[i] = true;
      ++visited_count;
    }
  };
  visit(env.start());

  std::deque<Point2> terminals;
  auto rng = make_rng(seed, 0);

  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    // (a) goal-directed episodes
    std::size_t collected_transitions = 0;
    for (std::size_t e = 0; e < config.episodes_per_epoch; ++e) {
      const Cell goal = propose_goal(env, config, model, skewed, rng);
      const auto g = env.index_of(goal);
      auto states = std::make_shared<std::vector<Cell>>();
      states->push_back(env.start());
      std::vector<Transition> episode;
      Cell s = env.start();
      for (std::size_t t = 0; t < env.horizon(); ++t) {
        const int a = select_action(table, env.index_of(s), g, rng);
        const StepResult r = env.step(s, a, goal, t);
        episode.push_back({s, a, r.next, goal, r.reward, r.next == goal});
        states->push_back(r.next);
        visit(r.next);
        s = r.next;
        if (config.stop_at_goal && r.next == goal) break;
      }
      std::shared_ptr<const std::vector<Cell>> shared = std::move(states);
      for (std::size_t t = 0; t < episode.size(); ++t) buffer.push({episode[t], shared, t});
      collected_transitions += episode.size();
      terminals.push_back(Labyrinth::center(s));
      if (terminals.size() > config.terminal_window) terminals.pop_front();
    }

    // (b) relabeled Q updates
    const std::size_t updates = config.updates_per_epoch > 0 ? config.updates_per_epoch : collected_transitions;
    for (std::size_t u = 0; u < updates; ++u) {
      const auto& entry = buffer.sample(rng);
      const auto draw = relabel(entry.transition, entry.future_states(), skewed, env, rng, config.relabel);
      q_update(table, env, with_goal(entry.transition, draw.goal));
    }

    // (c) Skew-Fit refit on terminal states
    const std::vector<Point2> terminal_states(terminals.begin(), terminals.end());
    const std::vector<double> ones(terminal_states.size(), 1.0);
    if (config.skew.alpha == 0.0 || config.goal_mode != GoalMode::SkewFit) {
      skewed = build_skewed_empirical(terminal_states, ones);
      model = fit_weighted(terminal_states, ones, config.skew.density);
    } else {
      const DensityModel weight_model =
          config.weights_from_window ? fit_weighted(terminal_states, ones, config.skew.density) : model;
      const auto log_w = skew_log_weights(weight_model, terminal_states, config.skew.alpha);
      skewed = build_skewed_empirical_from_log(terminal_states, log_w);
      const std::size_t m = config.skew.resample_size > 0 ? config.skew.resample_size : terminal_states.size();
      const auto resampled = sir_resample(skewed, m, rng);
      const std::vector<double> resampled_w(resampled.size(), 1.0);
      model = fit_weighted(resampled, resampled_w, config.skew.density);
    }

    EntropyReport report;
    report.iteration = epoch;
    report.alpha = config.skew.alpha;
    report.seed = seed;
    report.z_alpha = skewed.z_alpha;
    report.entropy_nats = grid_entropy(terminal_states, config.skew.metric_grid);
    report.cells_visited = visited_count;
    result.reports.push_back(report);
    result.coverage.push_back({epoch, visited_count,
                               static_cast<double>(visited_count) / static_cast<double>(visited.size())});
  }
  return result;
}

}  // namespace skewfit
