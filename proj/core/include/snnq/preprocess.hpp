#pragma once

#include <deque>
#include <string>
#include <vector>

#include "snnq/tensor.hpp"

namespace snnq {

enum class InputMode { Binary, Grayscale };

const char* to_string(InputMode mode);
InputMode input_mode_from_string(const std::string& name);

/// Pixel >= threshold maps to 1, everything else to 0.
Tensor binarize(const Tensor& frame, float threshold = 0.5f);

/// Nearest-neighbour resample of a 2-D frame to out_h x out_w.
Tensor resize_nearest(const Tensor& frame, int out_h, int out_w);

/// Positive part of (current - previous), elementwise, on binary frames:
/// 1 exactly where a pixel turned on.
Tensor difference_frame(const Tensor& current, const Tensor& previous);

/// Movement observation from the last (up to) 5 binarized frames, newest
/// last. Consecutive differences are summed and thresholded at 1, so a pixel
/// is set iff it turned on in any of the last 4 transitions. Shorter
/// histories are padded by repeating the oldest frame.
Tensor preprocess_binary(const std::vector<Tensor>& binary_frames);

/// Weighted observation from the last (up to) 4 difference frames, newest
/// last: 1.0 * newest + 0.75 + 0.5 + 0.25 * oldest. Shorter histories are
/// padded with zero frames. Values lie in [0, 2.5] on binary differences.
Tensor preprocess_grayscale(const std::vector<Tensor>& difference_frames);

inline constexpr int kOcclusionBarHeight = 3;
inline constexpr int kOcclusionPositions = 77;  // bar rows 0..76 on 80 rows

/// Zeroes the 3-row band starting at bar_row. bar_row must keep the whole
/// band on screen.
Tensor apply_occlusion(const Tensor& observation, int bar_row);

/// Rolling frame history feeding both observation modes.
class FrameStack {
 public:
  explicit FrameStack(InputMode mode) : mode_(mode) {}

  void clear();
  /// Binarizes the raw frame and appends it to the history.
  void push(const Tensor& raw_frame);
  /// Observation for the current history; requires at least one frame.
  Tensor observation() const;

  InputMode mode() const { return mode_; }

 private:
  InputMode mode_;
  std::deque<Tensor> frames_;  // binarized, newest last, at most 5
  std::deque<Tensor> diffs_;   // consecutive differences, newest last, at most 4
};

}  // namespace snnq
