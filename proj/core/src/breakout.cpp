#include "snnq/breakout.hpp"

#include "snnq/errors.hpp"

namespace snnq {

EnvAction env_action_from_int(int a) {
  if (a < 0 || a >= kNumActions) {
    throw ValidationError("action must lie in [0, " +
                          std::to_string(kNumActions - 1) + "], got " +
                          std::to_string(a));
  }
  return static_cast<EnvAction>(a);
}

void EnvConfig::validate() const {
  if (frame_h < 1 || frame_w < 1) {
    throw ValidationError("frame must be non-empty, got " +
                          std::to_string(frame_h) + "x" +
                          std::to_string(frame_w));
  }
  if (brick_rows < 1 || brick_cols < 1 || brick_h < 1 || brick_w < 1) {
    throw ValidationError("brick grid must be non-empty");
  }
  if (brick_cols * brick_w > frame_w) {
    throw ValidationError("brick grid is wider than the frame");
  }
  if (paddle_width < 1 || paddle_width > frame_w) {
    throw ValidationError("paddle width " + std::to_string(paddle_width) +
                          " does not fit a " + std::to_string(frame_w) +
                          "-wide frame");
  }
  if (paddle_step < 1) {
    throw ValidationError("paddle step must be positive");
  }
  // The paddle body fills rows paddle_row and paddle_row + 1; at least one
  // row must remain below it so a lost ball has somewhere to go.
  if (paddle_row < 1 || paddle_row + 2 >= frame_h) {
    throw ValidationError("paddle row " + std::to_string(paddle_row) +
                          " does not fit an " + std::to_string(frame_h) +
                          "-row frame");
  }
  const int band_end = brick_top_row + brick_rows * brick_h;
  if (brick_top_row < 0 || band_end >= paddle_row - 1) {
    throw ValidationError("brick band rows " + std::to_string(brick_top_row) +
                          ".." + std::to_string(band_end - 1) +
                          " collide with the paddle at row " +
                          std::to_string(paddle_row));
  }
  if (lives < 1) throw ValidationError("lives must be positive");
  if (auto_fire_delay < 0) {
    throw ValidationError("auto_fire_delay must be non-negative");
  }
  if (max_episode_steps < 1) {
    throw ValidationError("max_episode_steps must be positive");
  }
}

BreakoutEnv::BreakoutEnv(EnvConfig cfg) : cfg_(cfg) { cfg_.validate(); }

void BreakoutEnv::reset(std::uint64_t seed) {
  rng_ = make_rng(seed);
  started_ = true;
  done_ = false;
  paddle_x_ = (cfg_.frame_w - cfg_.paddle_width) / 2;
  bricks_.assign(static_cast<std::size_t>(cfg_.brick_count()), 1);
  lives_ = cfg_.lives;
  score_ = 0;
  steps_ = 0;
  frame_ = Tensor({cfg_.frame_h, cfg_.frame_w});
  hold_ball();
  render();
}

int BreakoutEnv::bricks_remaining() const {
  int n = 0;
  for (auto b : bricks_) n += b;
  return n;
}

void BreakoutEnv::hold_ball() {
  ball_held_ = true;
  held_steps_ = 0;
  ball_row_ = cfg_.paddle_row - 1;
  ball_col_ = paddle_x_ + cfg_.paddle_width / 2;
  ball_drow_ = 0;
  ball_dcol_ = 0;
}

void BreakoutEnv::launch() {
  ball_held_ = false;
  ball_drow_ = -1;
  ball_dcol_ = (rng_() & 1u) ? 1 : -1;
}

bool BreakoutEnv::brick_at(int row, int col) const {
  if (row < cfg_.brick_top_row ||
      row >= cfg_.brick_top_row + cfg_.brick_rows * cfg_.brick_h) {
    return false;
  }
  if (col < 0 || col >= cfg_.brick_cols * cfg_.brick_w) return false;
  const int br = (row - cfg_.brick_top_row) / cfg_.brick_h;
  const int bc = col / cfg_.brick_w;
  return bricks_[static_cast<std::size_t>(br * cfg_.brick_cols + bc)] != 0;
}

bool BreakoutEnv::hit_brick(int row, int col) {
  if (!brick_at(row, col)) return false;
  const int br = (row - cfg_.brick_top_row) / cfg_.brick_h;
  const int bc = col / cfg_.brick_w;
  bricks_[static_cast<std::size_t>(br * cfg_.brick_cols + bc)] = 0;
  ++score_;
  return true;
}

StepResult BreakoutEnv::step(EnvAction action) {
  if (!started_) {
    throw ProtocolError("step before reset");
  }
  if (done_) {
    throw ProtocolError("step on a finished episode; call reset first");
  }
  ++steps_;
  StepResult result;

  if (action == EnvAction::Left) {
    paddle_x_ -= cfg_.paddle_step;
  } else if (action == EnvAction::Right) {
    paddle_x_ += cfg_.paddle_step;
  }
  if (paddle_x_ < 0) paddle_x_ = 0;
  const int max_x = cfg_.frame_w - cfg_.paddle_width;
  if (paddle_x_ > max_x) paddle_x_ = max_x;

  if (ball_held_) {
    ball_col_ = paddle_x_ + cfg_.paddle_width / 2;
    ++held_steps_;
    if (action == EnvAction::Fire || held_steps_ > cfg_.auto_fire_delay) {
      launch();
    }
  }

  if (!ball_held_) {
    const int before = score_;
    move_ball();
    result.reward = static_cast<double>(score_ - before);
  }

  if (ball_row_ > cfg_.paddle_row + 1) {
    --lives_;
    hold_ball();
    if (lives_ <= 0) done_ = true;
  }
  if (bricks_remaining() == 0) done_ = true;
  if (steps_ >= cfg_.max_episode_steps) done_ = true;

  render();
  result.done = done_;
  return result;
}

void BreakoutEnv::move_ball() {
  // Side walls.
  int c2 = ball_col_ + ball_dcol_;
  if (c2 < 0 || c2 >= cfg_.frame_w) {
    ball_dcol_ = -ball_dcol_;
    c2 = ball_col_ + ball_dcol_;
  }
  // Ceiling.
  int r2 = ball_row_ + ball_drow_;
  if (r2 < 0) {
    ball_drow_ = -ball_drow_;
    r2 = ball_row_ + ball_drow_;
  }
  // Bricks reflect the ball vertically; the ball never enters the cell.
  if (hit_brick(r2, c2)) {
    ball_drow_ = -ball_drow_;
    return;
  }
  // Paddle top surface catches a falling ball; the hit offset steers it
  // (left third sends it left, right third right, center keeps course).
  if (ball_drow_ > 0 && ball_row_ < cfg_.paddle_row && r2 >= cfg_.paddle_row &&
      c2 >= paddle_x_ && c2 < paddle_x_ + cfg_.paddle_width) {
    ball_drow_ = -1;
    const int offset = c2 - paddle_x_;
    if (offset * 3 < cfg_.paddle_width) {
      ball_dcol_ = -1;
    } else if ((offset + 1) * 3 > 2 * cfg_.paddle_width) {
      ball_dcol_ = 1;
    }
    r2 = cfg_.paddle_row - 1;
  }
  ball_row_ = r2;
  ball_col_ = c2;
}

void BreakoutEnv::render() {
  for (auto& v : frame_.values()) v = 0.0f;
  for (int br = 0; br < cfg_.brick_rows; ++br) {
    for (int bc = 0; bc < cfg_.brick_cols; ++bc) {
      if (!bricks_[static_cast<std::size_t>(br * cfg_.brick_cols + bc)]) {
        continue;
      }
      const int r0 = cfg_.brick_top_row + br * cfg_.brick_h;
      const int c0 = bc * cfg_.brick_w;
      for (int r = r0; r < r0 + cfg_.brick_h; ++r) {
        for (int c = c0; c < c0 + cfg_.brick_w; ++c) frame_.at(r, c) = 1.0f;
      }
    }
  }
  for (int r = cfg_.paddle_row; r < cfg_.paddle_row + 2; ++r) {
    for (int c = paddle_x_; c < paddle_x_ + cfg_.paddle_width; ++c) {
      frame_.at(r, c) = 1.0f;
    }
  }
  frame_.at(ball_row_, ball_col_) = 1.0f;
}

EnvState BreakoutEnv::state() const {
  EnvState s;
  s.paddle_x = paddle_x_;
  s.ball_row = static_cast<float>(ball_row_);
  s.ball_col = static_cast<float>(ball_col_);
  s.ball_drow = static_cast<float>(ball_drow_);
  s.ball_dcol = static_cast<float>(ball_dcol_);
  s.bricks = bricks_;
  s.lives = lives_;
  s.score = score_;
  s.ball_held = ball_held_;
  s.done = done_;
  s.steps = steps_;
  s.frame = frame_;
  return s;
}

}  // namespace snnq
