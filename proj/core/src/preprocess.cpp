#include "snnq/preprocess.hpp"

#include "snnq/errors.hpp"

namespace snnq {

const char* to_string(InputMode mode) {
  return mode == InputMode::Binary ? "binary" : "grayscale";
}

InputMode input_mode_from_string(const std::string& name) {
  if (name == "binary") return InputMode::Binary;
  if (name == "grayscale") return InputMode::Grayscale;
  throw ValidationError("unknown input mode '" + name +
                        "' (expected binary or grayscale)");
}

Tensor binarize(const Tensor& frame, float threshold) {
  Tensor out(frame.shape());
  for (std::size_t i = 0; i < frame.size(); ++i) {
    out[i] = frame[i] >= threshold ? 1.0f : 0.0f;
  }
  return out;
}

Tensor resize_nearest(const Tensor& frame, int out_h, int out_w) {
  if (frame.rank() != 2) {
    throw DimensionError("resize_nearest needs a rank-2 frame, got shape " +
                         shape_to_string(frame.shape()));
  }
  if (out_h < 1 || out_w < 1) {
    throw ValidationError("resize_nearest target must be positive, got " +
                          std::to_string(out_h) + "x" + std::to_string(out_w));
  }
  const int h = frame.dim(0), w = frame.dim(1);
  Tensor out({out_h, out_w});
  for (int y = 0; y < out_h; ++y) {
    int sy = static_cast<int>((static_cast<long long>(y) * h) / out_h);
    if (sy >= h) sy = h - 1;
    for (int x = 0; x < out_w; ++x) {
      int sx = static_cast<int>((static_cast<long long>(x) * w) / out_w);
      if (sx >= w) sx = w - 1;
      out.at(y, x) = frame.at(sy, sx);
    }
  }
  return out;
}

Tensor difference_frame(const Tensor& current, const Tensor& previous) {
  if (!current.same_shape(previous)) {
    throw DimensionError("difference_frame: shapes " +
                         shape_to_string(current.shape()) + " and " +
                         shape_to_string(previous.shape()) + " differ");
  }
  Tensor out(current.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const float d = current[i] - previous[i];
    out[i] = d > 0.0f ? d : 0.0f;
  }
  return out;
}

namespace {

void require_nonempty(const std::vector<Tensor>& frames, const char* op) {
  if (frames.empty()) {
    throw ValidationError(std::string(op) + " needs at least one frame");
  }
  for (const Tensor& f : frames) {
    if (!f.same_shape(frames.front())) {
      throw DimensionError(std::string(op) + ": frame shapes " +
                           shape_to_string(frames.front().shape()) + " and " +
                           shape_to_string(f.shape()) + " differ");
    }
  }
}

}  // namespace

Tensor preprocess_binary(const std::vector<Tensor>& binary_frames) {
  require_nonempty(binary_frames, "preprocess_binary");
  if (binary_frames.size() > 5) {
    throw ValidationError("preprocess_binary takes at most 5 frames, got " +
                          std::to_string(binary_frames.size()));
  }
  // Pad on the old side by repeating the oldest frame; the padded
  // transitions then contribute nothing.
  const Tensor* frames[5];
  const std::size_t given = binary_frames.size();
  for (std::size_t i = 0; i < 5; ++i) {
    frames[i] = i + given >= 5 ? &binary_frames[i + given - 5]
                               : &binary_frames.front();
  }
  Tensor acc(frames[0]->shape());
  for (int t = 0; t < 4; ++t) {
    const Tensor& cur = *frames[t + 1];
    const Tensor& prev = *frames[t];
    for (std::size_t i = 0; i < acc.size(); ++i) {
      const float d = cur[i] - prev[i];
      if (d > 0.0f) acc[i] += d;
    }
  }
  for (auto& v : acc.values()) v = v >= 1.0f ? 1.0f : 0.0f;
  return acc;
}

Tensor preprocess_grayscale(const std::vector<Tensor>& difference_frames) {
  require_nonempty(difference_frames, "preprocess_grayscale");
  if (difference_frames.size() > 4) {
    throw ValidationError("preprocess_grayscale takes at most 4 frames, got " +
                          std::to_string(difference_frames.size()));
  }
  const std::size_t given = difference_frames.size();
  Tensor acc(difference_frames.front().shape());
  // Newest difference weighs 1.0, then 0.75, 0.5, 0.25 back in time.
  for (std::size_t age = 0; age < given; ++age) {
    const float weight = 1.0f - 0.25f * static_cast<float>(age);
    const Tensor& d = difference_frames[given - 1 - age];
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += weight * d[i];
  }
  return acc;
}

Tensor apply_occlusion(const Tensor& observation, int bar_row) {
  if (observation.rank() != 2) {
    throw DimensionError("apply_occlusion needs a rank-2 observation, got " +
                         shape_to_string(observation.shape()));
  }
  const int h = observation.dim(0);
  if (bar_row < 0 || bar_row + kOcclusionBarHeight > h) {
    throw ValidationError("occlusion bar at row " + std::to_string(bar_row) +
                          " leaves the " + std::to_string(h) + "-row frame");
  }
  Tensor out = observation;
  const int w = observation.dim(1);
  for (int r = bar_row; r < bar_row + kOcclusionBarHeight; ++r) {
    for (int c = 0; c < w; ++c) out.at(r, c) = 0.0f;
  }
  return out;
}

void FrameStack::clear() {
  frames_.clear();
  diffs_.clear();
}

void FrameStack::push(const Tensor& raw_frame) {
  Tensor bin = binarize(raw_frame);
  if (!frames_.empty()) {
    diffs_.push_back(difference_frame(bin, frames_.back()));
    if (diffs_.size() > 4) diffs_.pop_front();
  }
  frames_.push_back(std::move(bin));
  if (frames_.size() > 5) frames_.pop_front();
}

Tensor FrameStack::observation() const {
  if (frames_.empty()) {
    throw ProtocolError("frame stack is empty; push a frame before asking "
                        "for an observation");
  }
  if (mode_ == InputMode::Binary) {
    return preprocess_binary({frames_.begin(), frames_.end()});
  }
  if (diffs_.empty()) return Tensor(frames_.front().shape());
  return preprocess_grayscale({diffs_.begin(), diffs_.end()});
}

}  // namespace snnq
