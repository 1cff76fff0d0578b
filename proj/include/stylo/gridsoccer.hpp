#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "stylo/errors.hpp"
#include "stylo/rng.hpp"

namespace stylo {

enum class Side : uint8_t { L = 0, R = 1 };

inline Side opponent_of(Side s) { return s == Side::L ? Side::R : Side::L; }

enum class Winner : uint8_t { L = 0, R = 1, Draw = 2, None = 3 };

// Absolute actions. Kicks are legal only when 4-adjacent to the ball.
enum class Action : uint8_t {
  Stay = 0,
  MoveN,
  MoveS,
  MoveE,
  MoveW,
  KickN,
  KickS,
  KickE,
  KickW
};

constexpr int kNumActions = 9;
constexpr int kKickRange = 3;
constexpr int kPlyCap = 200;
constexpr int kFeatureDim = 20;

inline bool is_kick(Action a) { return a >= Action::KickN; }
inline bool is_move(Action a) { return a >= Action::MoveN && a <= Action::MoveW; }

// Turn-based two-player ball-pushing game on a small grid. Side L attacks the
// east goal (column width-1), side R the west goal (column 0); the goal is
// the 3 center cells of the column. Default board is 9x7.
struct GameState {
  int8_t width = 9;
  int8_t height = 7;
  int8_t ax[2] = {0, 0};  // agent cells, indexed by Side
  int8_t ay[2] = {0, 0};
  int8_t bx = 0;
  int8_t by = 0;
  Side side_to_move = Side::L;
  int16_t ply = 0;
  bool terminal = false;
  Winner winner = Winner::None;

  bool in_bounds(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }

  bool is_goal_cell(int x, int y) const {
    return (x == 0 || x == width - 1) && std::abs(y - height / 2) <= 1;
  }

  bool occupied_by_agent(int x, int y) const {
    return (ax[0] == x && ay[0] == y) || (ax[1] == x && ay[1] == y);
  }
};

GameState initial_state(int width = 9, int height = 7);

// Reflects the board about its vertical center line and swaps sides.
GameState mirror(const GameState& s);

std::array<bool, kNumActions> legal_mask(const GameState& s);
std::vector<Action> legal_actions(const GameState& s);
bool is_legal(const GameState& s, Action a);

GameState apply_action(const GameState& s, Action a);

// Frame-relative action index used in datasets: the mover's attack direction
// is "forward", so mirrored sides share one action vocabulary.
// 0 stay, 1 fwd, 2 back, 3 up, 4 down, 5..8 the matching kicks.
int to_frame_action(Action a, Side perspective);
Action from_frame_action(int frame_action, Side perspective);

// Feature encoding from one side's perspective, every value in [-1, 1].
// Mirror-symmetric: encode(s, R) == encode(mirror(s), L) exactly.
std::array<float, kFeatureDim> encode_state(const GameState& s, Side perspective);

// Scripted-agent weights; the ground-truth style generator.
struct StyleParams {
  float chase_weight = 0.0f;
  float goal_push_weight = 0.0f;
  float defend_weight = 0.0f;
  float kick_bias = 0.0f;
  float temperature = 1.0f;
};

struct ActionDist {
  std::array<double, kNumActions> p{};  // zero on illegal actions
};

int manhattan(int x0, int y0, int x1, int y1);
int dist_self_ball(const GameState& s, Side side);
int dist_ball_goal(const GameState& s, Side side);  // to the attacked goal
// True when `side`'s agent stands between the ball and its own goal:
// strictly behind the ball along the attack axis and within one row of it.
bool between_ball_and_own_goal(const GameState& s, Side side);

// score(a) = chase * drop in self-ball distance + goal_push * drop in
// ball-goal distance + defend * between-flag(next) + kick_bias * is_kick(a),
// softmaxed at the agent's temperature over the legal actions.
ActionDist scripted_policy(const StyleParams& params, const GameState& s);

Action sample_from_dist(const ActionDist& dist, RngStream& rng);
Action argmax_action(const ActionDist& dist);

using Policy = std::function<ActionDist(const GameState&)>;

struct PlyRecord {
  int16_t ply;
  Side side;
  GameState state;  // state before the move
  Action action;
};

struct MatchResult {
  Winner winner = Winner::None;
  int plies = 0;
  std::vector<PlyRecord> trajectory;
};

MatchResult play_match(const Policy& policy_l, const Policy& policy_r, uint64_t seed);
MatchResult play_match(const Policy& policy_l, const Policy& policy_r, RngStream rng);

inline double win_value(Winner w, Side side) {
  if (w == Winner::Draw) return 0.5;
  return (w == Winner::L) == (side == Side::L) ? 1.0 : 0.0;
}

// Per-player interpretable style measurements over a fixed probe set.
struct AttributeProfile {
  double aggression = 0.0;     // mean drop in self-ball distance per move
  double goal_threat = 0.0;    // mean drop in ball-goal distance per move
  double defensiveness = 0.0;  // fraction of moves keeping agent between ball and own goal
  double kick_rate = 0.0;      // fraction of moves that kick

  double get(const std::string& name) const;
  static const std::vector<std::string>& names();
};

using ChooseFn = std::function<Action(const GameState&)>;

AttributeProfile probe_attributes(const ChooseFn& choose, const std::vector<GameState>& probe_set);

// Expectation of the same measurements under a stochastic policy: each probe
// state contributes sum_a p(a) * attribute(s, a). Smooth in the policy, so
// population attribute distributions do not saturate at the argmax ceiling.
AttributeProfile probe_attributes_expected(const Policy& policy,
                                           const std::vector<GameState>& probe_set);

// Nonterminal states pooled from seeded mixed-policy playouts; fixed and
// versioned via the stream.
std::vector<GameState> make_probe_set(int size, RngStream rng, int width = 9, int height = 7);

}  // namespace stylo
