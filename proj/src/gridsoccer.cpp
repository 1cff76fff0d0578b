#include "stylo/gridsoccer.hpp"

#include <algorithm>
#include <cmath>

namespace stylo {

namespace {

struct Delta {
  int dx, dy;
};

// N/S/E/W for both moves and kicks.
constexpr Delta kDirs[4] = {{0, 1}, {0, -1}, {1, 0}, {-1, 0}};

Delta action_delta(Action a) {
  if (is_move(a)) return kDirs[static_cast<int>(a) - 1];
  return kDirs[static_cast<int>(a) - 5];
}

}  // namespace

GameState initial_state(int width, int height) {
  if (width < 5 || height < 3 || width % 2 == 0 || height % 2 == 0) {
    throw ArgumentError("initial_state: board must be odd-sized, at least 5x3");
  }
  GameState s;
  s.width = static_cast<int8_t>(width);
  s.height = static_cast<int8_t>(height);
  s.bx = static_cast<int8_t>(width / 2);
  s.by = static_cast<int8_t>(height / 2);
  s.ax[0] = static_cast<int8_t>(width / 2 - 2);
  s.ay[0] = static_cast<int8_t>(height / 2);
  s.ax[1] = static_cast<int8_t>(width / 2 + 2);
  s.ay[1] = static_cast<int8_t>(height / 2);
  return s;
}

GameState mirror(const GameState& s) {
  GameState m = s;
  const int w = s.width;
  m.ax[0] = static_cast<int8_t>(w - 1 - s.ax[1]);
  m.ay[0] = s.ay[1];
  m.ax[1] = static_cast<int8_t>(w - 1 - s.ax[0]);
  m.ay[1] = s.ay[0];
  m.bx = static_cast<int8_t>(w - 1 - s.bx);
  m.side_to_move = opponent_of(s.side_to_move);
  if (s.winner == Winner::L) m.winner = Winner::R;
  if (s.winner == Winner::R) m.winner = Winner::L;
  return m;
}

std::array<bool, kNumActions> legal_mask(const GameState& s) {
  if (s.terminal) throw ContractError("legal_mask: terminal state");
  std::array<bool, kNumActions> mask{};
  mask[0] = true;  // stay
  const int me = static_cast<int>(s.side_to_move);
  const int op = 1 - me;
  const int x = s.ax[me], y = s.ay[me];
  for (int d = 0; d < 4; ++d) {
    const int tx = x + kDirs[d].dx, ty = y + kDirs[d].dy;
    bool ok = s.in_bounds(tx, ty) && !(tx == s.ax[op] && ty == s.ay[op]);
    if (ok && tx == s.bx && ty == s.by) {
      // push: the ball must have a free in-bounds cell to move into
      const int px = tx + kDirs[d].dx, py = ty + kDirs[d].dy;
      ok = s.in_bounds(px, py) && !(px == s.ax[op] && py == s.ay[op]);
    }
    mask[1 + d] = ok;
  }
  const bool adjacent = manhattan(x, y, s.bx, s.by) == 1;
  for (int d = 0; d < 4; ++d) mask[5 + d] = adjacent;
  return mask;
}

std::vector<Action> legal_actions(const GameState& s) {
  const auto mask = legal_mask(s);
  std::vector<Action> out;
  for (int a = 0; a < kNumActions; ++a) {
    if (mask[static_cast<size_t>(a)]) out.push_back(static_cast<Action>(a));
  }
  return out;
}

bool is_legal(const GameState& s, Action a) {
  return legal_mask(s)[static_cast<size_t>(a)];
}

GameState apply_action(const GameState& s, Action a) {
  if (s.terminal) throw ContractError("apply_action: terminal state");
  if (!is_legal(s, a)) throw ContractError("apply_action: illegal action");
  GameState n = s;
  const int me = static_cast<int>(s.side_to_move);
  if (is_move(a)) {
    const Delta d = action_delta(a);
    const int tx = s.ax[me] + d.dx, ty = s.ay[me] + d.dy;
    if (tx == s.bx && ty == s.by) {
      n.bx = static_cast<int8_t>(s.bx + d.dx);
      n.by = static_cast<int8_t>(s.by + d.dy);
    }
    n.ax[me] = static_cast<int8_t>(tx);
    n.ay[me] = static_cast<int8_t>(ty);
  } else if (is_kick(a)) {
    const Delta d = action_delta(a);
    // ball advances cell by cell, stopping before a blocker or the edge, and
    // stopping in a goal cell the moment it enters one
    for (int step = 0; step < kKickRange; ++step) {
      const int nx = n.bx + d.dx, ny = n.by + d.dy;
      if (!n.in_bounds(nx, ny) || n.occupied_by_agent(nx, ny)) break;
      n.bx = static_cast<int8_t>(nx);
      n.by = static_cast<int8_t>(ny);
      if (n.is_goal_cell(n.bx, n.by)) break;
    }
  }
  if (n.is_goal_cell(n.bx, n.by)) {
    n.terminal = true;
    n.winner = n.bx == n.width - 1 ? Winner::L : Winner::R;
  }
  n.ply = static_cast<int16_t>(s.ply + 1);
  if (!n.terminal && n.ply >= kPlyCap) {
    n.terminal = true;
    n.winner = Winner::Draw;
  }
  n.side_to_move = opponent_of(s.side_to_move);
  return n;
}

int to_frame_action(Action a, Side perspective) {
  if (a == Action::Stay) return 0;
  const bool kick = is_kick(a);
  const int dir = kick ? static_cast<int>(a) - 5 : static_cast<int>(a) - 1;  // N S E W
  int frame;
  switch (dir) {
    case 0: frame = 3; break;  // N = up
    case 1: frame = 4; break;  // S = down
    case 2: frame = perspective == Side::L ? 1 : 2; break;  // E
    default: frame = perspective == Side::L ? 2 : 1; break;  // W
  }
  return frame + (kick ? 4 : 0);
}

Action from_frame_action(int frame_action, Side perspective) {
  if (frame_action == 0) return Action::Stay;
  const bool kick = frame_action > 4;
  const int frame = kick ? frame_action - 4 : frame_action;
  int dir;
  switch (frame) {
    case 3: dir = 0; break;
    case 4: dir = 1; break;
    case 1: dir = perspective == Side::L ? 2 : 3; break;
    default: dir = perspective == Side::L ? 3 : 2; break;
  }
  return static_cast<Action>(dir + (kick ? 5 : 1));
}

std::array<float, kFeatureDim> encode_state(const GameState& s, Side perspective) {
  const int w = s.width, h = s.height;
  const int me = static_cast<int>(perspective);
  const int op = 1 - me;
  // attack frame: x measured toward the attacked goal
  const auto fx = [&](int x) { return perspective == Side::L ? x : (w - 1) - x; };
  const float wspan = static_cast<float>(w - 1);
  const float hspan = static_cast<float>(h - 1);
  const int sx = fx(s.ax[me]), sy = s.ay[me];
  const int ox = fx(s.ax[op]), oy = s.ay[op];
  const int ballx = fx(s.bx), bally = s.by;

  std::array<float, kFeatureDim> f{};
  f[0] = sx / wspan * 2.0f - 1.0f;
  f[1] = sy / hspan * 2.0f - 1.0f;
  f[2] = ox / wspan * 2.0f - 1.0f;
  f[3] = oy / hspan * 2.0f - 1.0f;
  f[4] = ballx / wspan * 2.0f - 1.0f;
  f[5] = bally / hspan * 2.0f - 1.0f;
  f[6] = (ballx - sx) / wspan;
  f[7] = (bally - sy) / hspan;
  f[8] = ((w - 1) - ballx) / wspan;
  f[9] = (h / 2 - bally) / static_cast<float>(h / 2);
  f[10] = (ballx == sx + 1 && bally == sy) ? 1.0f : 0.0f;
  f[11] = (ballx == sx - 1 && bally == sy) ? 1.0f : 0.0f;
  f[12] = (ballx == sx && bally == sy + 1) ? 1.0f : 0.0f;
  f[13] = (ballx == sx && bally == sy - 1) ? 1.0f : 0.0f;
  f[14] = s.side_to_move == perspective ? 1.0f : 0.0f;
  f[15] = s.ply / static_cast<float>(kPlyCap);
  f[16] = manhattan(sx, sy, ballx, bally) / (wspan + hspan);
  f[17] = dist_ball_goal(s, perspective) / (wspan + hspan);
  f[18] = 1.0f;
  f[19] = -1.0f;
  return f;
}

int manhattan(int x0, int y0, int x1, int y1) { return std::abs(x0 - x1) + std::abs(y0 - y1); }

int dist_self_ball(const GameState& s, Side side) {
  const int i = static_cast<int>(side);
  return manhattan(s.ax[i], s.ay[i], s.bx, s.by);
}

int dist_ball_goal(const GameState& s, Side side) {
  const int gx = side == Side::L ? s.width - 1 : 0;
  const int mid = s.height / 2;
  int best = 0x7fffffff;
  for (int gy = mid - 1; gy <= mid + 1; ++gy) {
    best = std::min(best, manhattan(s.bx, s.by, gx, gy));
  }
  return best;
}

bool between_ball_and_own_goal(const GameState& s, Side side) {
  const int i = static_cast<int>(side);
  const int fx_self = side == Side::L ? s.ax[i] : (s.width - 1) - s.ax[i];
  const int fx_ball = side == Side::L ? s.bx : (s.width - 1) - s.bx;
  return fx_self < fx_ball && std::abs(s.ay[i] - s.by) <= 1;
}

ActionDist scripted_policy(const StyleParams& params, const GameState& s) {
  if (s.terminal) throw ContractError("scripted_policy: terminal state");
  if (params.temperature <= 0.0f) throw ArgumentError("scripted_policy: temperature must be > 0");
  const Side side = s.side_to_move;
  const auto mask = legal_mask(s);
  std::array<double, kNumActions> score{};
  double max_score = -1e30;
  for (int a = 0; a < kNumActions; ++a) {
    if (!mask[static_cast<size_t>(a)]) continue;
    const GameState next = apply_action(s, static_cast<Action>(a));
    const double d_chase = dist_self_ball(s, side) - dist_self_ball(next, side);
    const double d_push = dist_ball_goal(s, side) - dist_ball_goal(next, side);
    const double betw = between_ball_and_own_goal(next, side) ? 1.0 : 0.0;
    const double kick = is_kick(static_cast<Action>(a)) ? 1.0 : 0.0;
    score[static_cast<size_t>(a)] = params.chase_weight * d_chase +
                                    params.goal_push_weight * d_push +
                                    params.defend_weight * betw + params.kick_bias * kick;
    max_score = std::max(max_score, score[static_cast<size_t>(a)]);
  }
  ActionDist dist;
  double sum = 0.0;
  for (int a = 0; a < kNumActions; ++a) {
    if (!mask[static_cast<size_t>(a)]) continue;
    const double e = std::exp((score[static_cast<size_t>(a)] - max_score) / params.temperature);
    dist.p[static_cast<size_t>(a)] = e;
    sum += e;
  }
  for (auto& p : dist.p) p /= sum;
  return dist;
}

Action sample_from_dist(const ActionDist& dist, RngStream& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  int last = 0;
  for (int a = 0; a < kNumActions; ++a) {
    if (dist.p[static_cast<size_t>(a)] <= 0.0) continue;
    acc += dist.p[static_cast<size_t>(a)];
    last = a;
    if (u < acc) return static_cast<Action>(a);
  }
  return static_cast<Action>(last);
}

Action argmax_action(const ActionDist& dist) {
  int best = 0;
  for (int a = 1; a < kNumActions; ++a) {
    if (dist.p[static_cast<size_t>(a)] > dist.p[static_cast<size_t>(best)]) best = a;
  }
  return static_cast<Action>(best);
}

MatchResult play_match(const Policy& policy_l, const Policy& policy_r, uint64_t seed) {
  return play_match(policy_l, policy_r, RngStream(seed));
}

MatchResult play_match(const Policy& policy_l, const Policy& policy_r, RngStream rng) {
  GameState s = initial_state();
  MatchResult result;
  while (!s.terminal) {
    const ActionDist dist = s.side_to_move == Side::L ? policy_l(s) : policy_r(s);
    const Action a = sample_from_dist(dist, rng);
    result.trajectory.push_back({s.ply, s.side_to_move, s, a});
    s = apply_action(s, a);
  }
  result.winner = s.winner;
  result.plies = s.ply;
  return result;
}

double AttributeProfile::get(const std::string& name) const {
  if (name == "aggression") return aggression;
  if (name == "goal_threat") return goal_threat;
  if (name == "defensiveness") return defensiveness;
  if (name == "kick_rate") return kick_rate;
  throw ArgumentError("unknown attribute: " + name);
}

const std::vector<std::string>& AttributeProfile::names() {
  static const std::vector<std::string> kNames = {"aggression", "goal_threat", "defensiveness",
                                                  "kick_rate"};
  return kNames;
}

AttributeProfile probe_attributes(const ChooseFn& choose,
                                  const std::vector<GameState>& probe_set) {
  if (probe_set.empty()) throw ArgumentError("probe_attributes: empty probe set");
  AttributeProfile profile;
  for (const GameState& s : probe_set) {
    const Side side = s.side_to_move;
    const Action a = choose(s);
    const GameState next = apply_action(s, a);
    profile.aggression += dist_self_ball(s, side) - dist_self_ball(next, side);
    profile.goal_threat += dist_ball_goal(s, side) - dist_ball_goal(next, side);
    profile.defensiveness += between_ball_and_own_goal(next, side) ? 1.0 : 0.0;
    profile.kick_rate += is_kick(a) ? 1.0 : 0.0;
  }
  const double n = static_cast<double>(probe_set.size());
  profile.aggression /= n;
  profile.goal_threat /= n;
  profile.defensiveness /= n;
  profile.kick_rate /= n;
  return profile;
}

AttributeProfile probe_attributes_expected(const Policy& policy,
                                           const std::vector<GameState>& probe_set) {
  if (probe_set.empty()) throw ArgumentError("probe_attributes_expected: empty probe set");
  AttributeProfile profile;
  for (const GameState& s : probe_set) {
    const Side side = s.side_to_move;
    const ActionDist dist = policy(s);
    for (int a = 0; a < kNumActions; ++a) {
      const double p = dist.p[static_cast<size_t>(a)];
      if (p <= 0.0) continue;
      const GameState next = apply_action(s, static_cast<Action>(a));
      profile.aggression += p * (dist_self_ball(s, side) - dist_self_ball(next, side));
      profile.goal_threat += p * (dist_ball_goal(s, side) - dist_ball_goal(next, side));
      profile.defensiveness += p * (between_ball_and_own_goal(next, side) ? 1.0 : 0.0);
      profile.kick_rate += p * (is_kick(static_cast<Action>(a)) ? 1.0 : 0.0);
    }
  }
  const double n = static_cast<double>(probe_set.size());
  profile.aggression /= n;
  profile.goal_threat /= n;
  profile.defensiveness /= n;
  profile.kick_rate /= n;
  return profile;
}

std::vector<GameState> make_probe_set(int size, RngStream rng, int width, int height) {
  if (size <= 0) throw ArgumentError("make_probe_set: size must be positive");
  std::vector<GameState> pool;
  RngStream params_rng = rng.stream("params");
  RngStream match_rng = rng.stream("matches");
  const size_t target = static_cast<size_t>(size) * 6;
  int game = 0;
  while (pool.size() < target) {
    const auto draw = [&]() {
      StyleParams p;
      p.chase_weight = static_cast<float>(params_rng.uniform(0.0, 2.0));
      p.goal_push_weight = static_cast<float>(params_rng.uniform(0.0, 2.0));
      p.defend_weight = static_cast<float>(params_rng.uniform(0.0, 1.5));
      p.kick_bias = static_cast<float>(params_rng.uniform(-0.5, 1.5));
      p.temperature = static_cast<float>(params_rng.log_uniform(0.3, 1.0));
      return p;
    };
    const StyleParams pl = draw(), pr = draw();
    GameState s = initial_state(width, height);
    RngStream game_rng = match_rng.stream("game", static_cast<uint64_t>(game++));
    while (!s.terminal) {
      pool.push_back(s);
      const StyleParams& params = s.side_to_move == Side::L ? pl : pr;
      s = apply_action(s, sample_from_dist(scripted_policy(params, s), game_rng));
    }
  }
  // Stratify by mover-ball distance (40% adjacent / 25% at 2 / 35% farther).
  // Raw playout states are ~85% ball-adjacent, which flattens the movement
  // attributes; the mix keeps positions realistic while every attribute stays
  // measurable.
  std::vector<GameState> near, mid, far;
  for (const GameState& s : pool) {
    const int d = dist_self_ball(s, s.side_to_move);
    (d <= 1 ? near : d == 2 ? mid : far).push_back(s);
  }
  RngStream pick_rng = rng.stream("pick");
  pick_rng.shuffle(near);
  pick_rng.shuffle(mid);
  pick_rng.shuffle(far);
  std::vector<GameState> probe;
  const int n_near = size * 40 / 100, n_mid = size * 25 / 100;
  const int n_far = size - n_near - n_mid;
  const auto take = [&](const std::vector<GameState>& bucket, int n) {
    for (int i = 0; i < n && i < static_cast<int>(bucket.size()); ++i) {
      probe.push_back(bucket[static_cast<size_t>(i)]);
    }
  };
  take(near, n_near);
  take(mid, n_mid);
  take(far, n_far);
  for (size_t i = 0; probe.size() < static_cast<size_t>(size); ++i) {
    probe.push_back(near[i % near.size()]);  // shortfall fill; near states always abound
  }
  pick_rng.shuffle(probe);
  return probe;
}

}  // namespace stylo
