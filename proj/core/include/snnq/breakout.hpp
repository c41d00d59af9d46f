#pragma once

#include <cstdint>
#include <vector>

#include "snnq/rng.hpp"
#include "snnq/tensor.hpp"

namespace snnq {

// Numbering follows the Atari convention: a dead policy whose Q-values tie
// at zero argmaxes to 0 and therefore sits still instead of drifting.
enum class EnvAction { Noop = 0, Fire = 1, Right = 2, Left = 3 };
inline constexpr int kNumActions = 4;

EnvAction env_action_from_int(int a);

/// Geometry and pacing of the miniature game. Defaults give an 80x80 screen:
/// 6x16 bricks of 2x5 pixels in rows 8..19, a 3-wide paddle whose body fills
/// rows 74..75, and a 1-pixel ball. Rows 76..79 stay dark for the whole game;
/// the ball is lost the moment it passes below the paddle.
struct EnvConfig {
  int frame_h = 80;
  int frame_w = 80;
  int brick_rows = 6;
  int brick_cols = 16;
  int brick_top_row = 8;
  int brick_h = 2;
  int brick_w = 5;
  int paddle_row = 74;
  int paddle_width = 3;
  int paddle_step = 2;
  int lives = 5;
  /// A held ball launches itself after this many steps without fire.
  int auto_fire_delay = 20;
  /// Episodes end as a loss of no life after this many steps (guards
  /// against cycles of a deterministic ball and an idle paddle).
  int max_episode_steps = 5000;

  void validate() const;
  int brick_count() const { return brick_rows * brick_cols; }
};

struct StepResult {
  double reward = 0.0;
  bool done = false;
};

/// Snapshot of the game for tests and tools.
struct EnvState {
  int paddle_x = 0;  // leftmost paddle column
  float ball_row = 0.0f;
  float ball_col = 0.0f;
  float ball_drow = 0.0f;
  float ball_dcol = 0.0f;
  std::vector<std::uint8_t> bricks;  // row-major brick_rows x brick_cols
  int lives = 0;
  int score = 0;
  bool ball_held = false;
  bool done = true;
  int steps = 0;
  Tensor frame;
};

/// Deterministic miniature Breakout. The seed only randomizes the launch
/// direction of each new ball; everything else is fixed by the action
/// sequence. Actions: 0 does nothing, 1 fires a held ball, 2 moves the
/// paddle right, 3 left. Each destroyed brick pays +1.
class BreakoutEnv {
 public:
  explicit BreakoutEnv(EnvConfig cfg = {});

  void reset(std::uint64_t seed);
  /// Advances one step. Throws ProtocolError once the episode is done.
  StepResult step(EnvAction action);

  const Tensor& frame() const { return frame_; }
  EnvState state() const;
  const EnvConfig& config() const { return cfg_; }

  bool done() const { return done_; }
  bool started() const { return started_; }
  int score() const { return score_; }
  int lives() const { return lives_; }
  int steps() const { return steps_; }
  int bricks_remaining() const;

 private:
  void hold_ball();
  void launch();
  void move_ball();
  void render();
  bool brick_at(int row, int col) const;
  bool hit_brick(int row, int col);

  EnvConfig cfg_;
  Rng rng_;
  bool started_ = false;
  bool done_ = true;
  int paddle_x_ = 0;
  int ball_row_ = 0;
  int ball_col_ = 0;
  int ball_drow_ = 0;
  int ball_dcol_ = 0;
  bool ball_held_ = true;
  int held_steps_ = 0;
  std::vector<std::uint8_t> bricks_;
  int lives_ = 0;
  int score_ = 0;
  int steps_ = 0;
  Tensor frame_;
};

}  // namespace snnq
