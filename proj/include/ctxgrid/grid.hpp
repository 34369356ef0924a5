#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>

namespace ctxgrid {

inline constexpr int kGridSize = 9;
inline constexpr int kPatchCells = 9;  // 3x3 local view

enum class Cell : uint8_t { Wall, Free };

// Classes a patch cell can take in the observation encoding.
enum class CellClass : uint8_t { WallOrOob = 0, Free = 1, Goal1 = 2, Goal2 = 3, SelfCenter = 4 };
inline constexpr int kNumCellClasses = 5;

enum class Context : uint8_t { A = 0, B = 1 };
enum class GoalId : uint8_t { G1 = 0, G2 = 1 };
enum class Order : uint8_t { AB, BA };
enum class Action : uint8_t { Up = 0, Down = 1, Left = 2, Right = 3 };
inline constexpr int kNumActions = 4;

struct Coord {
  int row = 0;
  int col = 0;
  bool operator==(const Coord&) const = default;
};

struct Condition {
  Order order = Order::AB;
  int t_switch = 25;

  std::string name() const;
  // Parses "AB25", "BA30", etc. Throws std::invalid_argument on bad input.
  static Condition parse(const std::string& text);
};

struct MazeParseError : std::runtime_error {
  enum class Kind { BadDimensions, BadCharacter, MarkerCount, UnreachableGoal };
  MazeParseError(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
  Kind kind;
};

struct MazeSpec {
  std::array<std::array<Cell, kGridSize>, kGridSize> grid{};
  Coord start, g1, g2;

  // BFS distance fields to each goal over free cells, filled at load time.
  // Unreachable cells hold -1.
  std::array<std::array<int, kGridSize>, kGridSize> dist_g1{};
  std::array<std::array<int, kGridSize>, kGridSize> dist_g2{};

  bool in_bounds(Coord p) const {
    return p.row >= 0 && p.row < kGridSize && p.col >= 0 && p.col < kGridSize;
  }
  bool free_at(Coord p) const { return in_bounds(p) && grid[p.row][p.col] == Cell::Free; }
  Coord goal_cell(GoalId g) const { return g == GoalId::G1 ? g1 : g2; }
  int dist_to(GoalId g, Coord p) const {
    const auto& d = (g == GoalId::G1) ? dist_g1 : dist_g2;
    return in_bounds(p) ? d[p.row][p.col] : -1;
  }

  // Parses the text maze format: 9 rows x 9 cols over {#,.,S,1,2}, exactly
  // one S/1/2, both goals BFS-reachable from S. Throws MazeParseError.
  static MazeSpec load(const std::string& text);
  static MazeSpec load_file(const std::string& path);
};

// Reward structure and horizon. The values here are the shipped defaults;
// everything is overridable through the experiment config.
struct RewardConfig {
  int horizon = 80;
  double step_cost = -0.01;
  double goal_reward = 1.0;
  double wrong_penalty = -0.2;    // paid at most once per phase
  double blocked_penalty = -0.05;
  double shaping_coef = 0.02;     // potential term on BFS distance to the active target
};

struct EpisodeState {
  Coord pos;
  int t = 0;
  int phase = 0;  // 0 iff t < t_switch
  bool phase0_success = false;
  bool phase1_success = false;
  bool done = false;
  double return_so_far = 0.0;
  // Per-phase bookkeeping for once-only payments and shaping cutoff.
  std::array<bool, 2> wrong_paid{false, false};
  std::array<bool, 2> target_reached{false, false};
};

struct Observation {
  std::array<CellClass, kPatchCells> patch{};  // row-major 3x3, center = agent cell
  Context context = Context::A;
};

struct StepEvents {
  bool blocked = false;
  bool reached_target = false;
  bool reached_wrong = false;
  bool phase_advanced = false;
};

struct StepResult {
  EpisodeState state;
  Observation obs;
  double reward = 0.0;   // includes the shaping term
  double shaping = 0.0;  // the shaping component alone
  StepEvents events;
};

enum class MoveClass : uint8_t { Other = 0, Target = 1, Wrong = 2 };

Context context_at(const Condition& cond, int t);
GoalId target_of(Context c);
GoalId wrong_of(Context c);

Coord move(Coord p, Action a);
Observation observe(const MazeSpec& maze, Coord pos, Context c);

std::pair<EpisodeState, Observation> reset(const MazeSpec& maze, const Condition& cond);

// One environment transition. Stepping a finished episode throws
// std::logic_error.
StepResult step(const MazeSpec& maze, const Condition& cond, const RewardConfig& rc,
                const EpisodeState& s, Action a);

// Class of the cell each action would land on under context c. Blocked moves
// resolve to staying put and classify as Other.
std::array<MoveClass, kNumActions> classify_moves(const MazeSpec& maze, Coord pos, Context c);

const char* to_string(Action a);
const char* to_string(Context c);

}  // namespace ctxgrid
