#include "ctxgrid/grid.hpp"

#include <deque>
#include <fstream>
#include <sstream>
#include <vector>

namespace ctxgrid {

std::string Condition::name() const {
  return (order == Order::AB ? "AB" : "BA") + std::to_string(t_switch);
}

Condition Condition::parse(const std::string& text) {
  if (text.size() < 3) throw std::invalid_argument("bad condition: " + text);
  Order order;
  if (text.rfind("AB", 0) == 0) order = Order::AB;
  else if (text.rfind("BA", 0) == 0) order = Order::BA;
  else throw std::invalid_argument("bad condition order: " + text);
  int t_switch = 0;
  try {
    size_t used = 0;
    t_switch = std::stoi(text.substr(2), &used);
    if (used != text.size() - 2) throw std::invalid_argument("");
  } catch (const std::exception&) {
    throw std::invalid_argument("bad condition switch time: " + text);
  }
  if (t_switch < 1) throw std::invalid_argument("t_switch must be >= 1: " + text);
  return Condition{order, t_switch};
}

Context context_at(const Condition& cond, int t) {
  bool phase0 = t < cond.t_switch;
  if (cond.order == Order::AB) return phase0 ? Context::A : Context::B;
  return phase0 ? Context::B : Context::A;
}

GoalId target_of(Context c) { return c == Context::A ? GoalId::G1 : GoalId::G2; }
GoalId wrong_of(Context c) { return c == Context::A ? GoalId::G2 : GoalId::G1; }

Coord move(Coord p, Action a) {
  switch (a) {
    case Action::Up: return {p.row - 1, p.col};
    case Action::Down: return {p.row + 1, p.col};
    case Action::Left: return {p.row, p.col - 1};
    case Action::Right: return {p.row, p.col + 1};
  }
  return p;
}

namespace {

void bfs_from(const MazeSpec& maze, Coord src,
              std::array<std::array<int, kGridSize>, kGridSize>& dist) {
  for (auto& row : dist) row.fill(-1);
  std::deque<Coord> queue;
  dist[src.row][src.col] = 0;
  queue.push_back(src);
  while (!queue.empty()) {
    Coord p = queue.front();
    queue.pop_front();
    for (Action a : {Action::Up, Action::Down, Action::Left, Action::Right}) {
      Coord n = move(p, a);
      if (maze.free_at(n) && dist[n.row][n.col] < 0) {
        dist[n.row][n.col] = dist[p.row][p.col] + 1;
        queue.push_back(n);
      }
    }
  }
}

}  // namespace

MazeSpec MazeSpec::load(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.size() != kGridSize)
    throw MazeParseError(MazeParseError::Kind::BadDimensions,
                         "maze must have 9 rows, got " + std::to_string(lines.size()));

  MazeSpec maze;
  int n_start = 0, n_g1 = 0, n_g2 = 0;
  for (int r = 0; r < kGridSize; ++r) {
    if (lines[r].size() != kGridSize)
      throw MazeParseError(MazeParseError::Kind::BadDimensions,
                           "maze row " + std::to_string(r) + " must have 9 columns, got " +
                               std::to_string(lines[r].size()));
    for (int c = 0; c < kGridSize; ++c) {
      char ch = lines[r][c];
      switch (ch) {
        case '#': maze.grid[r][c] = Cell::Wall; break;
        case '.': maze.grid[r][c] = Cell::Free; break;
        case 'S': maze.grid[r][c] = Cell::Free; maze.start = {r, c}; ++n_start; break;
        case '1': maze.grid[r][c] = Cell::Free; maze.g1 = {r, c}; ++n_g1; break;
        case '2': maze.grid[r][c] = Cell::Free; maze.g2 = {r, c}; ++n_g2; break;
        default:
          throw MazeParseError(MazeParseError::Kind::BadCharacter,
                               std::string("invalid maze character '") + ch + "' at row " +
                                   std::to_string(r) + " col " + std::to_string(c));
      }
    }
  }
  if (n_start != 1 || n_g1 != 1 || n_g2 != 1)
    throw MazeParseError(MazeParseError::Kind::MarkerCount,
                         "expected exactly one S/1/2 marker, got S=" + std::to_string(n_start) +
                             " 1=" + std::to_string(n_g1) + " 2=" + std::to_string(n_g2));

  bfs_from(maze, maze.g1, maze.dist_g1);
  bfs_from(maze, maze.g2, maze.dist_g2);
  if (maze.dist_to(GoalId::G1, maze.start) < 0)
    throw MazeParseError(MazeParseError::Kind::UnreachableGoal, "G1 is unreachable from start");
  if (maze.dist_to(GoalId::G2, maze.start) < 0)
    throw MazeParseError(MazeParseError::Kind::UnreachableGoal, "G2 is unreachable from start");
  return maze;
}

MazeSpec MazeSpec::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open maze file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return load(buf.str());
}

Observation observe(const MazeSpec& maze, Coord pos, Context c) {
  Observation obs;
  obs.context = c;
  int i = 0;
  for (int dr = -1; dr <= 1; ++dr) {
    for (int dc = -1; dc <= 1; ++dc, ++i) {
      Coord p{pos.row + dr, pos.col + dc};
      if (dr == 0 && dc == 0) {
        obs.patch[i] = CellClass::SelfCenter;
      } else if (!maze.free_at(p)) {
        obs.patch[i] = CellClass::WallOrOob;
      } else if (p == maze.g1) {
        obs.patch[i] = CellClass::Goal1;
      } else if (p == maze.g2) {
        obs.patch[i] = CellClass::Goal2;
      } else {
        obs.patch[i] = CellClass::Free;
      }
    }
  }
  return obs;
}

std::pair<EpisodeState, Observation> reset(const MazeSpec& maze, const Condition& cond) {
  EpisodeState s;
  s.pos = maze.start;
  return {s, observe(maze, s.pos, context_at(cond, 0))};
}

StepResult step(const MazeSpec& maze, const Condition& cond, const RewardConfig& rc,
                const EpisodeState& s, Action a) {
  if (s.done) throw std::logic_error("step() called on a finished episode");

  StepResult out;
  EpisodeState& next = out.state;
  next = s;

  const Context c = context_at(cond, s.t);  // context the action is judged under
  const int phase = s.phase;
  const GoalId target = target_of(c);
  const GoalId wrong = wrong_of(c);

  Coord dest = move(s.pos, a);
  if (!maze.free_at(dest)) {
    out.events.blocked = true;
    dest = s.pos;
  }

  double reward = rc.step_cost;
  if (out.events.blocked) reward += rc.blocked_penalty;

  const bool shaping_active = !s.target_reached[phase];
  if (shaping_active) {
    const int phi_before = maze.dist_to(target, s.pos);
    const int phi_after = maze.dist_to(target, dest);
    out.shaping = rc.shaping_coef * static_cast<double>(phi_before - phi_after);
    reward += out.shaping;
  }

  const bool arrived = !out.events.blocked && dest != s.pos;
  if (arrived && dest == maze.goal_cell(target)) {
    out.events.reached_target = true;
    next.target_reached[phase] = true;
    if (phase == 0) {
      if (!s.phase0_success) {
        next.phase0_success = true;
        reward += rc.goal_reward;
      }
    } else if (s.phase0_success) {  // phase-1 credit is gated on phase-0 success
      next.phase1_success = true;
      reward += rc.goal_reward;
    }
  } else if (arrived && dest == maze.goal_cell(wrong)) {
    out.events.reached_wrong = true;
    if (!s.wrong_paid[phase]) {
      next.wrong_paid[phase] = true;
      reward += rc.wrong_penalty;
    }
  }

  next.pos = dest;
  next.t = s.t + 1;
  next.phase = next.t < cond.t_switch ? 0 : 1;
  out.events.phase_advanced = (phase == 0 && next.phase == 1);
  next.done = next.phase1_success || next.t >= rc.horizon;
  next.return_so_far = s.return_so_far + reward;

  out.reward = reward;
  out.obs = observe(maze, next.pos, context_at(cond, next.t));
  return out;
}

std::array<MoveClass, kNumActions> classify_moves(const MazeSpec& maze, Coord pos, Context c) {
  std::array<MoveClass, kNumActions> classes{};
  const Coord target = maze.goal_cell(target_of(c));
  const Coord wrong = maze.goal_cell(wrong_of(c));
  for (int i = 0; i < kNumActions; ++i) {
    Coord dest = move(pos, static_cast<Action>(i));
    if (!maze.free_at(dest)) {
      classes[i] = MoveClass::Other;  // blocked: stays at pos
    } else if (dest == target) {
      classes[i] = MoveClass::Target;
    } else if (dest == wrong) {
      classes[i] = MoveClass::Wrong;
    } else {
      classes[i] = MoveClass::Other;
    }
  }
  return classes;
}

const char* to_string(Action a) {
  switch (a) {
    case Action::Up: return "up";
    case Action::Down: return "down";
    case Action::Left: return "left";
    case Action::Right: return "right";
  }
  return "?";
}

const char* to_string(Context c) { return c == Context::A ? "A" : "B"; }

}  // namespace ctxgrid
