#include "skewfit/environments.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>

#include "skewfit/error.hpp"

namespace skewfit {

namespace {

constexpr double kEdgeNudge = 1e-9;

struct Interval {
  double lo;
  double hi;
};

// Removes the open interval (cut_lo, cut_hi) from every interval in `parts`.
void subtract_open(std::vector<Interval>& parts, double cut_lo, double cut_hi) {
  std::vector<Interval> out;
  out.reserve(parts.size() + 1);
  for (const auto& iv : parts) {
    if (cut_hi <= iv.lo || cut_lo >= iv.hi) {
      out.push_back(iv);
      continue;
    }
    if (iv.lo <= cut_lo) out.push_back({iv.lo, cut_lo});
    if (cut_hi <= iv.hi) out.push_back({cut_hi, iv.hi});
  }
  parts = std::move(out);
}

}  // namespace

// ---------------------------------------------------------------------------
// FourRooms

std::vector<Box2> FourRoomsConfig::default_walls(double side) {
  const double lo = side / 2.0 - 0.5;
  const double hi = side / 2.0 + 0.5;
  const double door_a = lo / 2.0;
  const double door_b = (hi + side) / 2.0;
  return {
      // vertical wall, split by its two doorways
      {{lo, 0.0}, {hi, door_a - 0.5}},
      {{lo, door_a + 0.5}, {hi, door_b - 0.5}},
      {{lo, door_b + 0.5}, {hi, side}},
      // horizontal wall
      {{0.0, lo}, {door_a - 0.5, hi}},
      {{door_a + 0.5, lo}, {door_b - 0.5, hi}},
      {{door_b + 0.5, lo}, {side, hi}},
  };
}

FourRooms::FourRooms(FourRoomsConfig config)
    : config_(std::move(config)), world_{{0.0, 0.0}, {config_.side, config_.side}} {
  if (!(config_.side > 0.0)) throw Error(ErrorCode::InvalidInput, "side must be positive");
  if (!(config_.noise_sigma > 0.0)) throw Error(ErrorCode::InvalidInput, "noise_sigma must be positive");
  obstacles_ = config_.walls;
  const double s = config_.side;
  const double pad = 2.0 * s;
  obstacles_.push_back({{-pad, -pad}, {0.0, s + pad}});      // left
  obstacles_.push_back({{s, -pad}, {s + pad, s + pad}});     // right
  obstacles_.push_back({{-pad, -pad}, {s + pad, 0.0}});      // bottom
  obstacles_.push_back({{-pad, s}, {s + pad, s + pad}});     // top
  if (!is_free(config_.start)) throw Error(ErrorCode::InvalidInput, "start lies inside a wall");

  // Connectivity of free space, checked by flood fill on a fine lattice.
  const std::size_t n = 4 * static_cast<std::size_t>(std::ceil(s));
  const GridSpec lattice{world_, n, n};
  std::vector<char> free(n * n), seen(n * n, 0);
  std::size_t free_count = 0;
  for (std::size_t i = 0; i < n * n; ++i) {
    free[i] = is_free(lattice.cell_center(i)) ? 1 : 0;
    free_count += free[i];
  }
  std::deque<std::size_t> queue{lattice.cell_of(config_.start)};
  seen[queue.front()] = 1;
  std::size_t reached = 0;
  while (!queue.empty()) {
    const auto c = queue.front();
    queue.pop_front();
    ++reached;
    const auto col = c % n, row = c / n;
    const std::size_t nbrs[4] = {col > 0 ? c - 1 : c, col + 1 < n ? c + 1 : c,
                                 row > 0 ? c - n : c, row + 1 < n ? c + n : c};
    for (auto nb : nbrs) {
      if (free[nb] && !seen[nb]) {
        seen[nb] = 1;
        queue.push_back(nb);
      }
    }
  }
  if (reached != free_count)
    throw Error(ErrorCode::InvalidInput, "free space is not connected to the start");
}

bool FourRooms::is_free(const Point2& p) const {
  if (!world_.contains(p)) return false;
  for (const auto& w : config_.walls)
    if (w.interior_contains(p)) return false;
  return true;
}

Point2 FourRooms::project(const Point2& raw) const {
  const double s = config_.side;
  const Point2 p{std::clamp(raw.x, -s, 2.0 * s), std::clamp(raw.y, -s, 2.0 * s)};
  if (is_free(p)) return p;

  double best_d2 = std::numeric_limits<double>::infinity();
  Point2 best = p;
  int best_edge = 0;
  for (std::size_t a = 0; a < obstacles_.size(); ++a) {
    const Box2& box = obstacles_[a];
    // edges: 0 bottom, 1 top, 2 left, 3 right
    for (int edge = 0; edge < 4; ++edge) {
      const bool horizontal = edge < 2;
      const double fixed = edge == 0 ? box.lo.y : edge == 1 ? box.hi.y : edge == 2 ? box.lo.x : box.hi.x;
      std::vector<Interval> parts{horizontal ? Interval{box.lo.x, box.hi.x} : Interval{box.lo.y, box.hi.y}};
      for (std::size_t b = 0; b < obstacles_.size() && !parts.empty(); ++b) {
        if (b == a) continue;
        const Box2& other = obstacles_[b];
        if (horizontal) {
          if (other.lo.y < fixed && fixed < other.hi.y) subtract_open(parts, other.lo.x, other.hi.x);
        } else {
          if (other.lo.x < fixed && fixed < other.hi.x) subtract_open(parts, other.lo.y, other.hi.y);
        }
      }
      for (const auto& iv : parts) {
        const Point2 c = horizontal ? Point2{std::clamp(p.x, iv.lo, iv.hi), fixed}
                                    : Point2{fixed, std::clamp(p.y, iv.lo, iv.hi)};
        const double dx = c.x - p.x, dy = c.y - p.y;
        const double d2 = dx * dx + dy * dy;
        if (d2 < best_d2) {
          best_d2 = d2;
          best = c;
          best_edge = edge;
        }
      }
    }
  }
  return nudge_off_edge(best, best_edge);
}

// Boundary points sit exactly on a grid line; stepping a hair away from the
// wall keeps them in the free cell under the lower-index binning rule.
Point2 FourRooms::nudge_off_edge(const Point2& p, int edge) const {
  Point2 q = p;
  switch (edge) {
    case 0: q.y -= kEdgeNudge; break;
    case 1: q.y += kEdgeNudge; break;
    case 2: q.x -= kEdgeNudge; break;
    default: q.x += kEdgeNudge; break;
  }
  return is_free(q) ? q : p;
}

Point2 FourRooms::stop_at_wall(const Point2& target) const {
  const Point2 from = config_.start;
  const double dx = target.x - from.x, dy = target.y - from.y;
  double t_hit = 1.0;
  for (const auto& box : obstacles_) {
    double t0 = 0.0, t1 = 1.0;
    bool miss = false;
    const double d[2] = {dx, dy};
    const double o[2] = {from.x, from.y};
    const double lo[2] = {box.lo.x, box.lo.y};
    const double hi[2] = {box.hi.x, box.hi.y};
    for (int k = 0; k < 2 && !miss; ++k) {
      if (d[k] == 0.0) {
        if (!(o[k] > lo[k] && o[k] < hi[k])) miss = true;
        continue;
      }
      double a = (lo[k] - o[k]) / d[k];
      double b = (hi[k] - o[k]) / d[k];
      if (a > b) std::swap(a, b);
      t0 = std::max(t0, a);
      t1 = std::min(t1, b);
    }
    // Entering the open interior needs a segment of positive length inside.
    if (!miss && t0 < t1) t_hit = std::min(t_hit, t0);
  }
  if (t_hit >= 1.0) return target;
  const double len = std::hypot(dx, dy);
  const double back = len > 0.0 ? kEdgeNudge / len : 0.0;
  const double t = std::max(0.0, t_hit - back);
  const Point2 stop{from.x + t * dx, from.y + t * dy};
  return is_free(stop) ? stop : project(stop);
}

Point2 FourRooms::reach(const Point2& goal, Rng& rng) const {
  const Point2 noisy{goal.x + config_.noise_sigma * standard_normal(rng),
                     goal.y + config_.noise_sigma * standard_normal(rng)};
  if (config_.mode == ReachMode::StopAtWall) return stop_at_wall(noisy);
  return project(noisy);
}

Point2 FourRooms::reach(const Point2& goal, std::uint64_t seed) const {
  auto rng = make_rng(seed);
  return reach(goal, rng);
}

std::vector<std::size_t> FourRooms::valid_cells(const GridSpec& grid) const {
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < grid.cell_count(); ++c)
    if (is_free(grid.cell_center(c))) out.push_back(c);
  return out;
}

// ---------------------------------------------------------------------------
// Labyrinth

double goal_reward(Cell at, Cell goal) {
  return -std::hypot(double(at.col - goal.col), double(at.row - goal.row));
}

Labyrinth::Labyrinth(int width, int height, std::vector<bool> free, Cell start, std::size_t horizon)
    : width_(width), height_(height), free_(std::move(free)), start_(start), horizon_(horizon) {
  if (width_ <= 0 || height_ <= 0) throw Error(ErrorCode::InvalidInput, "empty labyrinth");
  if (horizon_ == 0) throw Error(ErrorCode::InvalidInput, "horizon must be at least 1");
  if (!is_free(start_)) throw Error(ErrorCode::InvalidInput, "start cell is a wall");
  dense_index_.assign(free_.size(), -1);
  for (int r = 0; r < height_; ++r) {
    for (int c = 0; c < width_; ++c) {
      if (free_[flat({c, r})]) {
        dense_index_[flat({c, r})] = static_cast<int>(valid_.size());
        valid_.push_back({c, r});
      }
    }
  }
  std::vector<char> seen(free_.size(), 0);
  std::deque<Cell> queue{start_};
  seen[flat(start_)] = 1;
  std::size_t reached = 0;
  while (!queue.empty()) {
    const Cell cur = queue.front();
    queue.pop_front();
    ++reached;
    for (int a = 0; a < kActionCount; ++a) {
      const Cell nb = move(cur, a);
      if (!seen[flat(nb)]) {
        seen[flat(nb)] = 1;
        queue.push_back(nb);
      }
    }
  }
  if (reached != valid_.size())
    throw Error(ErrorCode::InvalidInput, "labyrinth has free cells unreachable from start");
}

Labyrinth Labyrinth::parse(std::string_view text, std::size_t horizon) {
  std::vector<std::string> rows;
  std::istringstream in{std::string(text)};
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    rows.push_back(line);
  }
  if (rows.empty()) throw Error(ErrorCode::InvalidInput, "empty map");
  const auto width = rows.front().size();
  std::vector<bool> free;
  std::optional<Cell> start;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != width)
      throw Error(ErrorCode::InvalidInput, "map row " + std::to_string(r) + " has inconsistent width");
    for (std::size_t c = 0; c < width; ++c) {
      const char ch = rows[r][c];
      if (ch == '#') {
        free.push_back(false);
      } else if (ch == '.' || ch == 'S') {
        free.push_back(true);
        if (ch == 'S') {
          if (start) throw Error(ErrorCode::InvalidInput, "map has more than one start");
          start = Cell{int(c), int(r)};
        }
      } else {
        throw Error(ErrorCode::InvalidInput, std::string("unknown map character '") + ch + "'");
      }
    }
  }
  if (!start) throw Error(ErrorCode::InvalidInput, "map has no start cell");
  return Labyrinth(int(width), int(rows.size()), std::move(free), *start, horizon);
}

Labyrinth Labyrinth::load(const std::filesystem::path& path, std::size_t horizon) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open map " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), horizon);
}

Labyrinth Labyrinth::spiral15() {
  static constexpr std::string_view kSpiral =
      "###############\n"
      "#S............#\n"
      "#############.#\n"
      "#...........#.#\n"
      "#.#########.#.#\n"
      "#.#.......#.#.#\n"
      "#.#.#####.#.#.#\n"
      "#.#.#...#.#.#.#\n"
      "#.#.#.###.#.#.#\n"
      "#.#.#.....#.#.#\n"
      "#.#.#######.#.#\n"
      "#.#.........#.#\n"
      "#.###########.#\n"
      "#.............#\n"
      "###############\n";
  return parse(kSpiral, 60);
}

Labyrinth Labyrinth::open_grid(int width, int height, Cell start, std::size_t horizon) {
  if (width <= 0 || height <= 0) throw Error(ErrorCode::InvalidInput, "empty labyrinth");
  return Labyrinth(width, height, std::vector<bool>(std::size_t(width * height), true), start, horizon);
}

std::size_t Labyrinth::index_of(Cell c) const {
  if (!is_free(c)) throw Error(ErrorCode::InvalidInput, "cell is not free");
  return static_cast<std::size_t>(dense_index_[flat(c)]);
}

Cell Labyrinth::move(Cell state, int action) const {
  Cell next = state;
  switch (action) {
    case int(Action::North): --next.row; break;
    case int(Action::South): ++next.row; break;
    case int(Action::East): ++next.col; break;
    case int(Action::West): --next.col; break;
    default: throw Error(ErrorCode::InvalidInput, "invalid action code " + std::to_string(action));
  }
  return is_free(next) ? next : state;
}

StepResult Labyrinth::step(Cell state, int action, Cell goal, std::size_t t) const {
  if (!is_free(state)) throw Error(ErrorCode::InvalidInput, "state is not a free cell");
  StepResult out;
  out.next = move(state, action);
  out.reward = goal_reward(out.next, goal);
  out.done = out.next == goal || t + 1 >= horizon_;
  return out;
}

Cell Labyrinth::nearest_valid(const Point2& p) const {
  Cell best = valid_.front();
  double best_d2 = std::numeric_limits<double>::infinity();
  for (const auto& c : valid_) {
    const Point2 m = center(c);
    const double d2 = (m.x - p.x) * (m.x - p.x) + (m.y - p.y) * (m.y - p.y);
    if (d2 < best_d2) {
      best_d2 = d2;
      best = c;
    }
  }
  return best;
}

std::string Labyrinth::to_text() const {
  std::string out;
  for (int r = 0; r < height_; ++r) {
    for (int c = 0; c < width_; ++c) {
      const Cell cell{c, r};
      out += cell == start_ ? 'S' : (free_[flat(cell)] ? '.' : '#');
    }
    out += '\n';
  }
  return out;
}

}  // namespace skewfit
