// Copyright 2026 The eswmv Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ESWMV_DETECTOR_HPP_
#define ESWMV_DETECTOR_HPP_

#include <cstddef>
#include <deque>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "eswmv/signals.hpp"

namespace eswmv {

inline constexpr std::size_t kDefaultWindow = 100;
inline constexpr std::size_t kDefaultPatience = 1000;
inline constexpr double kDefaultAlpha = 0.1;

// Outcome of a detector run. Iterations are 1-based: the first reconstruction
// fed to a detector is iteration 1.
struct Verdict {
  bool stopped = false;
  std::size_t stop_iteration = 0;
  std::size_t best_iteration = 0;
  double best_variance = 0.0;
  std::vector<std::pair<std::size_t, double>> variance_trace;
  Image best_reconstruction;

  bool has_best() const { return best_iteration > 0; }
};

// Mean squared distance of the frames to their elementwise mean,
// (1/W) sum_w ||x_w - mean||^2, computed in two passes.
double windowed_variance(std::span<const Image> frames);
double windowed_variance(const std::deque<Image>& frames);

// Common streaming surface so callers can swap detectors at run time.
class StoppingDetector {
 public:
  virtual ~StoppingDetector() = default;

  // Feeds the next reconstruction. Returns the verdict on the iteration the
  // patience runs out; further steps after that throw std::logic_error.
  virtual std::optional<Verdict> step(const Image& x_next) = 0;

  // Verdict for a stream that ended without triggering (stopped = false,
  // stop_iteration = last iteration seen), or the stopped verdict.
  virtual Verdict finish() const = 0;

  virtual bool stopped() const = 0;
  virtual std::size_t iteration() const = 0;
  // Most recent variance statistic, if one has been computed.
  virtual std::optional<double> last_variance() const = 0;
};

// Windowed moving variance: keeps the last W reconstructions, tracks the
// smallest window variance and stops after P iterations without a strict
// decrease. Patience only counts once the window is full.
class WmvDetector final : public StoppingDetector {
 public:
  explicit WmvDetector(std::size_t window = kDefaultWindow, std::size_t patience = kDefaultPatience);

  std::optional<Verdict> step(const Image& x_next) override;
  Verdict finish() const override;
  bool stopped() const override { return stopped_; }
  std::size_t iteration() const override { return iteration_; }
  std::optional<double> last_variance() const override;

  std::size_t window() const { return window_; }
  std::size_t patience() const { return patience_; }
  std::size_t queue_size() const { return queue_.size(); }
  std::size_t stall() const { return stall_; }
  std::optional<double> variance_min() const { return variance_min_; }
  const std::vector<std::pair<std::size_t, double>>& variance_trace() const { return trace_; }

 private:
  Verdict make_verdict(bool stopped) const;

  std::size_t window_;
  std::size_t patience_;
  std::deque<Image> queue_;
  std::optional<double> variance_min_;
  Image best_;
  std::size_t best_iteration_ = 0;
  std::size_t stall_ = 0;
  std::size_t iteration_ = 0;
  bool stopped_ = false;
  std::vector<std::pair<std::size_t, double>> trace_;
};

// Exponential moving variance with forgetting factor alpha. Memory is one
// running mean frame instead of a window of W frames.
class EmvDetector final : public StoppingDetector {
 public:
  explicit EmvDetector(double alpha = kDefaultAlpha, std::size_t patience = kDefaultPatience);

  std::optional<Verdict> step(const Image& x_next) override;
  Verdict finish() const override;
  bool stopped() const override { return stopped_; }
  std::size_t iteration() const override { return iteration_; }
  std::optional<double> last_variance() const override;

  double alpha() const { return alpha_; }
  std::size_t patience() const { return patience_; }
  const Image& ema() const { return ema_; }
  double emv() const { return emv_; }
  std::size_t stall() const { return stall_; }
  std::optional<double> variance_min() const { return emv_min_; }
  const std::vector<std::pair<std::size_t, double>>& variance_trace() const { return trace_; }

 private:
  Verdict make_verdict(bool stopped) const;

  double alpha_;
  std::size_t patience_;
  Image ema_;
  double emv_ = 0.0;
  std::optional<double> emv_min_;
  Image best_;
  std::size_t best_iteration_ = 0;
  std::size_t stall_ = 0;
  std::size_t iteration_ = 0;
  bool stopped_ = false;
  std::vector<std::pair<std::size_t, double>> trace_;
};

// Streaming exponential moving average starting from a zero mean.
class EmaFilter {
 public:
  explicit EmaFilter(double alpha);
  const Image& push(const Image& x);
  const Image& current() const { return ema_; }

 private:
  double alpha_;
  Image ema_;
};

std::vector<Image> smooth_ema(std::span<const Image> stream, double alpha);

// Windowed variance detection on the EMA-smoothed stream. The best
// reconstruction is the smoothed frame at the best iteration.
class EmaWmvDetector final : public StoppingDetector {
 public:
  EmaWmvDetector(double alpha, std::size_t window, std::size_t patience);

  std::optional<Verdict> step(const Image& x_next) override;
  Verdict finish() const override { return wmv_.finish(); }
  bool stopped() const override { return wmv_.stopped(); }
  std::size_t iteration() const override { return wmv_.iteration(); }
  std::optional<double> last_variance() const override { return wmv_.last_variance(); }

 private:
  EmaFilter filter_;
  WmvDetector wmv_;
};

enum class DetectorKind { kWmv, kEmv, kEmaWmv };

std::string_view to_string(DetectorKind kind);
DetectorKind parse_detector_kind(std::string_view name);

struct DetectorParams {
  DetectorKind kind = DetectorKind::kWmv;
  std::size_t window = kDefaultWindow;
  std::size_t patience = kDefaultPatience;
  double alpha = kDefaultAlpha;
};

std::unique_ptr<StoppingDetector> make_detector(const DetectorParams& params);

}  // namespace eswmv

#endif  // ESWMV_DETECTOR_HPP_
