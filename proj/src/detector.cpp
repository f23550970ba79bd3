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

#include "eswmv/detector.hpp"

namespace eswmv {

namespace {

template <typename Range>
double two_pass_variance(const Range& frames) {
  if (frames.empty()) throw InvalidArgument("windowed_variance: no frames");
  const Image& first = frames.front();
  for (const Image& f : frames) require_same_shape(first, f, "windowed_variance");

  const std::size_t n = first.size();
  const double count = static_cast<double>(frames.size());
  std::vector<double> mean(n, 0.0);
  for (const Image& f : frames) {
    for (std::size_t i = 0; i < n; ++i) mean[i] += f[i];
  }
  for (double& m : mean) m /= count;

  double total = 0.0;
  for (const Image& f : frames) {
    for (std::size_t i = 0; i < n; ++i) {
      const double d = f[i] - mean[i];
      total += d * d;
    }
  }
  return total / count;
}

void check_patience(std::size_t patience) {
  if (patience == 0) throw InvalidArgument("patience must be positive");
}

}  // namespace

double windowed_variance(std::span<const Image> frames) { return two_pass_variance(frames); }
double windowed_variance(const std::deque<Image>& frames) { return two_pass_variance(frames); }

// ---------------------------------------------------------------------------

WmvDetector::WmvDetector(std::size_t window, std::size_t patience)
    : window_(window), patience_(patience) {
  if (window == 0) throw InvalidArgument("window size must be positive");
  check_patience(patience);
}

std::optional<Verdict> WmvDetector::step(const Image& x_next) {
  if (stopped_) throw std::logic_error("WmvDetector: step after stop");
  if (!queue_.empty()) require_same_shape(queue_.back(), x_next, "WmvDetector::step");
  ++iteration_;
  queue_.push_back(x_next);
  if (queue_.size() > window_) queue_.pop_front();
  if (queue_.size() < window_) return std::nullopt;

  const double variance = windowed_variance(queue_);
  trace_.emplace_back(iteration_, variance);
  if (!variance_min_ || variance < *variance_min_) {
    variance_min_ = variance;
    best_ = x_next;
    best_iteration_ = iteration_;
    stall_ = 0;
    return std::nullopt;
  }
  if (++stall_ >= patience_) {
    stopped_ = true;
    return make_verdict(true);
  }
  return std::nullopt;
}

Verdict WmvDetector::finish() const { return make_verdict(stopped_); }

std::optional<double> WmvDetector::last_variance() const {
  if (trace_.empty() || trace_.back().first != iteration_) return std::nullopt;
  return trace_.back().second;
}

Verdict WmvDetector::make_verdict(bool stopped) const {
  Verdict v;
  v.stopped = stopped;
  v.stop_iteration = iteration_;
  v.best_iteration = best_iteration_;
  v.best_variance = variance_min_.value_or(0.0);
  v.variance_trace = trace_;
  v.best_reconstruction = best_;
  return v;
}

// ---------------------------------------------------------------------------

EmvDetector::EmvDetector(double alpha, std::size_t patience) : alpha_(alpha), patience_(patience) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("alpha must lie in (0, 1)");
  check_patience(patience);
}

std::optional<Verdict> EmvDetector::step(const Image& x_next) {
  if (stopped_) throw std::logic_error("EmvDetector: step after stop");
  if (ema_.empty()) {
    if (x_next.empty()) throw InvalidArgument("EmvDetector::step: empty frame");
    ema_ = Image(x_next.height(), x_next.width(), 0.0);
  }
  require_same_shape(ema_, x_next, "EmvDetector::step");
  ++iteration_;

  double dist2 = 0.0;
  for (std::size_t i = 0; i < x_next.size(); ++i) {
    const double d = x_next[i] - ema_[i];
    dist2 += d * d;
    ema_[i] = (1.0 - alpha_) * ema_[i] + alpha_ * x_next[i];
  }
  emv_ = (1.0 - alpha_) * emv_ + alpha_ * (1.0 - alpha_) * dist2;
  trace_.emplace_back(iteration_, emv_);

  if (!emv_min_ || emv_ < *emv_min_) {
    emv_min_ = emv_;
    best_ = x_next;
    best_iteration_ = iteration_;
    stall_ = 0;
    return std::nullopt;
  }
  if (++stall_ >= patience_) {
    stopped_ = true;
    return make_verdict(true);
  }
  return std::nullopt;
}

Verdict EmvDetector::finish() const { return make_verdict(stopped_); }

std::optional<double> EmvDetector::last_variance() const {
  if (trace_.empty()) return std::nullopt;
  return trace_.back().second;
}

Verdict EmvDetector::make_verdict(bool stopped) const {
  Verdict v;
  v.stopped = stopped;
  v.stop_iteration = iteration_;
  v.best_iteration = best_iteration_;
  v.best_variance = emv_min_.value_or(0.0);
  v.variance_trace = trace_;
  v.best_reconstruction = best_;
  return v;
}

// ---------------------------------------------------------------------------

EmaFilter::EmaFilter(double alpha) : alpha_(alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("alpha must lie in (0, 1)");
}

const Image& EmaFilter::push(const Image& x) {
  if (ema_.empty()) {
    if (x.empty()) throw InvalidArgument("EmaFilter::push: empty frame");
    ema_ = Image(x.height(), x.width(), 0.0);
  }
  require_same_shape(ema_, x, "EmaFilter::push");
  for (std::size_t i = 0; i < x.size(); ++i) ema_[i] = (1.0 - alpha_) * ema_[i] + alpha_ * x[i];
  return ema_;
}

std::vector<Image> smooth_ema(std::span<const Image> stream, double alpha) {
  EmaFilter filter(alpha);
  std::vector<Image> out;
  out.reserve(stream.size());
  for (const Image& x : stream) out.push_back(filter.push(x));
  return out;
}

EmaWmvDetector::EmaWmvDetector(double alpha, std::size_t window, std::size_t patience)
    : filter_(alpha), wmv_(window, patience) {}

std::optional<Verdict> EmaWmvDetector::step(const Image& x_next) {
  if (wmv_.stopped()) throw std::logic_error("EmaWmvDetector: step after stop");
  return wmv_.step(filter_.push(x_next));
}

// ---------------------------------------------------------------------------

std::string_view to_string(DetectorKind kind) {
  switch (kind) {
    case DetectorKind::kWmv: return "wmv";
    case DetectorKind::kEmv: return "emv";
    case DetectorKind::kEmaWmv: return "ema-wmv";
  }
  return "?";
}

DetectorKind parse_detector_kind(std::string_view name) {
  for (auto kind : {DetectorKind::kWmv, DetectorKind::kEmv, DetectorKind::kEmaWmv}) {
    if (to_string(kind) == name) return kind;
  }
  throw InvalidArgument("unknown detector '" + std::string(name) + "'");
}

std::unique_ptr<StoppingDetector> make_detector(const DetectorParams& params) {
  switch (params.kind) {
    case DetectorKind::kWmv:
      return std::make_unique<WmvDetector>(params.window, params.patience);
    case DetectorKind::kEmv:
      return std::make_unique<EmvDetector>(params.alpha, params.patience);
    case DetectorKind::kEmaWmv:
      return std::make_unique<EmaWmvDetector>(params.alpha, params.window, params.patience);
  }
  throw InvalidArgument("unknown detector kind");
}

}  // namespace eswmv
