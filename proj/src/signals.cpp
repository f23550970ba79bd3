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

#include "eswmv/signals.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "eswmv/random.hpp"

namespace eswmv {

Image::Image(std::size_t height, std::size_t width, double fill)
    : height_(height), width_(width), data_(height * width, fill) {
  if (height == 0 || width == 0) throw InvalidArgument("image dimensions must be positive");
}

Image::Image(std::size_t height, std::size_t width, std::vector<double> data)
    : height_(height), width_(width), data_(std::move(data)) {
  if (height == 0 || width == 0) throw InvalidArgument("image dimensions must be positive");
  if (data_.size() != height * width) {
    throw InvalidArgument("image data length " + std::to_string(data_.size()) +
                          " != " + std::to_string(height) + "x" + std::to_string(width));
  }
}

Image Image::signal(std::vector<double> samples) {
  const std::size_t n = samples.size();
  return Image(n, 1, std::move(samples));
}

void Image::clip(double lo, double hi) {
  for (double& v : data_) v = std::clamp(v, lo, hi);
}

void require_same_shape(const Image& a, const Image& b, std::string_view what) {
  if (a.empty() || b.empty()) throw InvalidArgument(std::string(what) + ": empty image");
  if (!a.same_shape(b)) {
    throw InvalidArgument(std::string(what) + ": dimension mismatch (" +
                          std::to_string(a.height()) + "x" + std::to_string(a.width()) + " vs " +
                          std::to_string(b.height()) + "x" + std::to_string(b.width()) + ")");
  }
}

// ---------------------------------------------------------------------------
// Noise

std::string_view to_string(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::kGaussian: return "gaussian";
    case NoiseKind::kImpulse: return "impulse";
    case NoiseKind::kSpeckle: return "speckle";
    case NoiseKind::kShot: return "shot";
  }
  return "?";
}

std::string_view to_string(NoiseLevel level) {
  switch (level) {
    case NoiseLevel::kLow: return "low";
    case NoiseLevel::kMedium: return "medium";
    case NoiseLevel::kHigh: return "high";
  }
  return "?";
}

NoiseKind parse_noise_kind(std::string_view name) {
  for (auto kind : {NoiseKind::kGaussian, NoiseKind::kImpulse, NoiseKind::kSpeckle, NoiseKind::kShot}) {
    if (to_string(kind) == name) return kind;
  }
  throw InvalidArgument("unknown noise kind '" + std::string(name) + "'");
}

NoiseLevel parse_noise_level(std::string_view name) {
  for (auto level : {NoiseLevel::kLow, NoiseLevel::kMedium, NoiseLevel::kHigh}) {
    if (to_string(level) == name) return level;
  }
  throw InvalidArgument("unknown noise level '" + std::string(name) + "'");
}

double noise_parameter(NoiseKind kind, NoiseLevel level) {
  static constexpr std::array<double, 3> kGaussianVariance = {0.12, 0.18, 0.26};
  static constexpr std::array<double, 3> kImpulseProbability = {0.3, 0.5, 0.7};
  static constexpr std::array<double, 3> kSpeckleVariance = {0.20, 0.35, 0.45};
  static constexpr std::array<double, 3> kShotRate = {25.0, 12.0, 5.0};
  const auto i = static_cast<std::size_t>(level);
  switch (kind) {
    case NoiseKind::kGaussian: return kGaussianVariance[i];
    case NoiseKind::kImpulse: return kImpulseProbability[i];
    case NoiseKind::kSpeckle: return kSpeckleVariance[i];
    case NoiseKind::kShot: return kShotRate[i];
  }
  return 0.0;
}

double effective_noise_parameter(const NoiseSpec& spec) {
  return spec.parameter.value_or(noise_parameter(spec.kind, spec.level));
}

Image add_noise(const Image& x, const NoiseSpec& spec) {
  if (x.empty()) throw InvalidArgument("add_noise: empty image");
  const double param = effective_noise_parameter(spec);
  if (!(param >= 0.0)) throw InvalidArgument("add_noise: negative noise parameter");
  Rng rng(spec.seed);
  Image y = x;
  switch (spec.kind) {
    case NoiseKind::kGaussian: {
      const double stddev = std::sqrt(param);
      for (double& v : y.samples()) v += rng.normal(0.0, stddev);
      break;
    }
    case NoiseKind::kImpulse:
      for (double& v : y.samples()) {
        // Both draws happen for every pixel so the replacement pattern for a
        // given seed does not depend on p.
        const bool replace = rng.uniform() < param;
        const bool white = rng.bernoulli(0.5);
        if (replace) v = white ? 1.0 : 0.0;
      }
      break;
    case NoiseKind::kSpeckle: {
      const double stddev = std::sqrt(param);
      for (double& v : y.samples()) v *= 1.0 + rng.normal(0.0, stddev);
      break;
    }
    case NoiseKind::kShot:
      if (!(param > 0.0)) throw InvalidArgument("add_noise: shot-noise rate must be positive");
      for (double& v : y.samples()) {
        v = static_cast<double>(rng.poisson(param * std::max(v, 0.0))) / param;
      }
      break;
  }
  if (spec.clip) y.clip();
  return y;
}

// ---------------------------------------------------------------------------
// Trigonometric signals

std::vector<double> trig_basis_function(std::size_t n, std::size_t index) {
  if (n == 0 || index >= n) throw InvalidArgument("trig basis index out of range");
  std::vector<double> phi(n);
  if (index == 0) {
    std::fill(phi.begin(), phi.end(), 1.0 / std::sqrt(static_cast<double>(n)));
    return phi;
  }
  const std::size_t frequency = (index + 1) / 2;
  const bool is_cos = index % 2 == 1;
  double norm2 = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(frequency * j) /
                         static_cast<double>(n);
    phi[j] = is_cos ? std::cos(angle) : std::sin(angle);
    norm2 += phi[j] * phi[j];
  }
  const double scale = 1.0 / std::sqrt(norm2);
  for (double& v : phi) v *= scale;
  return phi;
}

Image make_trig_signal(const TrigBasisSpec& spec) {
  if (spec.n == 0) throw InvalidArgument("make_trig_signal: n must be positive");
  if (spec.p == 0 || spec.p > spec.n) {
    throw InvalidArgument("make_trig_signal: need 1 <= p <= n (p=" + std::to_string(spec.p) +
                          ", n=" + std::to_string(spec.n) + ")");
  }
  if (spec.coefficients.size() != spec.p) {
    throw InvalidArgument("make_trig_signal: expected p coefficients");
  }
  std::vector<double> x(spec.n, 0.0);
  for (std::size_t b = 0; b < spec.p; ++b) {
    const auto phi = trig_basis_function(spec.n, b);
    for (std::size_t j = 0; j < spec.n; ++j) x[j] += spec.coefficients[b] * phi[j];
  }
  const auto [lo_it, hi_it] = std::minmax_element(x.begin(), x.end());
  const double lo = *lo_it;
  const double range = *hi_it - lo;
  // Relative threshold: a pure DC sum has roundoff-level spread only.
  const double scale = std::max(std::abs(lo), std::abs(*hi_it));
  for (double& v : x) {
    v = range > 1e-12 * std::max(scale, 1e-300) ? (v - lo) / range : 0.5;
  }
  return Image::signal(std::move(x));
}

// ---------------------------------------------------------------------------
// Metrics

double mse(const Image& x_ref, const Image& x_test) {
  require_same_shape(x_ref, x_test, "mse");
  double sum = 0.0;
  for (std::size_t i = 0; i < x_ref.size(); ++i) {
    const double d = x_ref[i] - x_test[i];
    sum += d * d;
  }
  return sum / static_cast<double>(x_ref.size());
}

double psnr(const Image& x_ref, const Image& x_test) {
  require_same_shape(x_ref, x_test, "psnr");
  double peak = 0.0;
  for (double v : x_ref.samples()) peak = std::max(peak, std::abs(v));
  if (peak == 0.0) throw InvalidArgument("psnr: all-zero reference");
  const double err = mse(x_ref, x_test);
  if (err == 0.0) return kInfinitePsnr;
  return 10.0 * std::log10(peak * peak / err);
}

namespace {

std::array<double, kSsimWindow> gaussian_taps() {
  std::array<double, kSsimWindow> taps{};
  const double center = static_cast<double>(kSsimWindow / 2);
  double total = 0.0;
  for (std::size_t i = 0; i < kSsimWindow; ++i) {
    const double d = static_cast<double>(i) - center;
    taps[i] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
    total += taps[i];
  }
  for (double& t : taps) t /= total;
  return taps;
}

// Separable "valid" filtering: output is (h - 10) x (w - 10).
std::vector<double> filter_valid(const std::vector<double>& src, std::size_t h, std::size_t w,
                                 const std::array<double, kSsimWindow>& taps) {
  const std::size_t oh = h - kSsimWindow + 1;
  const std::size_t ow = w - kSsimWindow + 1;
  std::vector<double> rows(h * ow, 0.0);
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < ow; ++c) {
      double acc = 0.0;
      for (std::size_t k = 0; k < kSsimWindow; ++k) acc += taps[k] * src[r * w + c + k];
      rows[r * ow + c] = acc;
    }
  }
  std::vector<double> out(oh * ow, 0.0);
  for (std::size_t r = 0; r < oh; ++r) {
    for (std::size_t c = 0; c < ow; ++c) {
      double acc = 0.0;
      for (std::size_t k = 0; k < kSsimWindow; ++k) acc += taps[k] * rows[(r + k) * ow + c];
      out[r * ow + c] = acc;
    }
  }
  return out;
}

}  // namespace

double ssim(const Image& x_ref, const Image& x_test) {
  require_same_shape(x_ref, x_test, "ssim");
  const std::size_t h = x_ref.height();
  const std::size_t w = x_ref.width();
  if (h < kSsimWindow || w < kSsimWindow) {
    throw InvalidArgument("ssim: image smaller than the 11x11 window");
  }
  constexpr double kC1 = 0.01 * 0.01;
  constexpr double kC2 = 0.03 * 0.03;
  const auto taps = gaussian_taps();

  const auto& a = x_ref.data();
  const auto& b = x_test.data();
  std::vector<double> aa(a.size()), bb(a.size()), ab(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    aa[i] = a[i] * a[i];
    bb[i] = b[i] * b[i];
    ab[i] = a[i] * b[i];
  }
  const auto mu_a = filter_valid(a, h, w, taps);
  const auto mu_b = filter_valid(b, h, w, taps);
  const auto e_aa = filter_valid(aa, h, w, taps);
  const auto e_bb = filter_valid(bb, h, w, taps);
  const auto e_ab = filter_valid(ab, h, w, taps);

  double total = 0.0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double var_a = e_aa[i] - mu_a[i] * mu_a[i];
    const double var_b = e_bb[i] - mu_b[i] * mu_b[i];
    const double cov = e_ab[i] - mu_a[i] * mu_b[i];
    const double num = (2.0 * mu_a[i] * mu_b[i] + kC1) * (2.0 * cov + kC2);
    const double den = (mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + kC1) * (var_a + var_b + kC2);
    total += num / den;
  }
  return total / static_cast<double>(mu_a.size());
}

// ---------------------------------------------------------------------------
// Curves

CurveSeries::CurveSeries(std::string name, std::vector<std::pair<std::size_t, double>> points)
    : name_(std::move(name)) {
  points_.reserve(points.size());
  for (const auto& [it, v] : points) push(it, v);
}

void CurveSeries::push(std::size_t iteration, double value) {
  if (!points_.empty() && iteration <= points_.back().first) {
    throw InvalidArgument("CurveSeries '" + name_ + "': iterations must strictly increase");
  }
  points_.emplace_back(iteration, value);
}

std::optional<double> CurveSeries::value_at(std::size_t iteration) const {
  const auto it = std::lower_bound(points_.begin(), points_.end(), iteration,
                                   [](const auto& p, std::size_t key) { return p.first < key; });
  if (it == points_.end() || it->first != iteration) return std::nullopt;
  return it->second;
}

std::size_t CurveSeries::argmax() const {
  if (points_.empty()) throw InvalidArgument("argmax of empty curve");
  const auto it = std::max_element(points_.begin(), points_.end(),
                                   [](const auto& a, const auto& b) { return a.second < b.second; });
  return it->first;
}

std::size_t CurveSeries::argmin() const {
  if (points_.empty()) throw InvalidArgument("argmin of empty curve");
  const auto it = std::min_element(points_.begin(), points_.end(),
                                   [](const auto& a, const auto& b) { return a.second < b.second; });
  return it->first;
}

double CurveSeries::max() const { return *value_at(argmax()); }

double detection_gap(const CurveSeries& trace, std::size_t stop_iter) {
  const auto at_stop = trace.value_at(stop_iter);
  if (!at_stop) {
    throw InvalidArgument("detection_gap: iteration " + std::to_string(stop_iter) +
                          " not in trace");
  }
  const double peak = trace.max();
  // inf - inf when the stop iterate itself is exact.
  if (peak == *at_stop) return 0.0;
  return peak - *at_stop;
}

// ---------------------------------------------------------------------------
// PGM

void write_pgm(const std::filesystem::path& path, const Image& image) {
  if (image.empty()) throw InvalidArgument("write_pgm: empty image");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << "P5\n" << image.width() << ' ' << image.height() << "\n65535\n";
  std::vector<char> bytes(image.size() * 2);
  for (std::size_t i = 0; i < image.size(); ++i) {
    const double v = std::clamp(image[i], 0.0, 1.0);
    const auto q = static_cast<std::uint16_t>(std::lround(v * 65535.0));
    bytes[2 * i] = static_cast<char>(q >> 8);
    bytes[2 * i + 1] = static_cast<char>(q & 0xFF);
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

namespace {

// Next whitespace-delimited header token, skipping '#' comments.
std::string pgm_token(std::istream& in) {
  std::string token;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {}
      continue;
    }
    if (std::isspace(c)) {
      if (!token.empty()) break;
      continue;
    }
    token.push_back(static_cast<char>(c));
  }
  if (token.empty()) throw FormatError("PGM: truncated header");
  return token;
}

std::size_t pgm_number(std::istream& in) {
  const std::string token = pgm_token(in);
  if (!std::all_of(token.begin(), token.end(), [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); })) {
    throw FormatError("PGM: bad header field '" + token + "'");
  }
  return std::stoul(token);
}

}  // namespace

Image read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  if (pgm_token(in) != "P5") throw FormatError("PGM: expected P5 magic in " + path.string());
  const std::size_t width = pgm_number(in);
  const std::size_t height = pgm_number(in);
  const std::size_t maxval = pgm_number(in);
  if (width == 0 || height == 0) throw FormatError("PGM: zero dimension");
  if (maxval == 0 || maxval > 65535) throw FormatError("PGM: maxval out of range");
  const std::size_t bytes_per_sample = maxval > 255 ? 2 : 1;
  std::vector<unsigned char> raw(width * height * bytes_per_sample);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size()) throw FormatError("PGM: truncated pixel data");
  std::vector<double> data(width * height);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const unsigned value = bytes_per_sample == 2 ? (raw[2 * i] << 8) | raw[2 * i + 1] : raw[i];
    data[i] = static_cast<double>(value) / static_cast<double>(maxval);
  }
  return Image(height, width, std::move(data));
}

}  // namespace eswmv
