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

#ifndef ESWMV_SIGNALS_HPP_
#define ESWMV_SIGNALS_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace eswmv {

// Raised when inputs violate an operation's preconditions (dimension
// mismatch, invalid spec, out-of-range index).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised on malformed external data (PGM files, iterate streams).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Row-major grid of real samples. One-dimensional signals use width 1.
class Image {
 public:
  Image() = default;
  Image(std::size_t height, std::size_t width, double fill = 0.0);
  Image(std::size_t height, std::size_t width, std::vector<double> data);

  static Image signal(std::vector<double> samples);

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  bool is_2d() const { return height_ > 1 && width_ > 1; }
  bool same_shape(const Image& other) const {
    return height_ == other.height_ && width_ == other.width_;
  }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& at(std::size_t row, std::size_t col) { return data_[row * width_ + col]; }
  double at(std::size_t row, std::size_t col) const { return data_[row * width_ + col]; }

  std::span<double> samples() { return data_; }
  std::span<const double> samples() const { return data_; }
  const std::vector<double>& data() const { return data_; }

  void clip(double lo = 0.0, double hi = 1.0);

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<double> data_;
};

// Throws InvalidArgument unless both images have the same shape.
void require_same_shape(const Image& a, const Image& b, std::string_view what);

enum class NoiseKind { kGaussian, kImpulse, kSpeckle, kShot };
enum class NoiseLevel { kLow, kMedium, kHigh };

std::string_view to_string(NoiseKind kind);
std::string_view to_string(NoiseLevel level);
NoiseKind parse_noise_kind(std::string_view name);
NoiseLevel parse_noise_level(std::string_view name);

struct NoiseSpec {
  NoiseKind kind = NoiseKind::kGaussian;
  NoiseLevel level = NoiseLevel::kLow;
  std::uint64_t seed = 0;
  bool clip = true;
  // Replaces the level's table value (variance, probability or rate).
  std::optional<double> parameter;
};

// Level table: Gaussian and speckle variances, impulse replacement
// probability, shot-noise rate.
double noise_parameter(NoiseKind kind, NoiseLevel level);
double effective_noise_parameter(const NoiseSpec& spec);

Image add_noise(const Image& x, const NoiseSpec& spec);

struct TrigBasisSpec {
  std::size_t n = 0;
  std::size_t p = 0;
  std::vector<double> coefficients;
};

// Unit-norm real Fourier basis on n points: index 0 is the constant, then
// cos/sin pairs of ascending frequency (cos first). The sine at the Nyquist
// frequency vanishes and is skipped, so exactly n functions exist.
std::vector<double> trig_basis_function(std::size_t n, std::size_t index);

// Sum of the first p basis functions weighted by the coefficients, mapped
// affinely onto [0, 1]. A constant sum maps to 0.5.
Image make_trig_signal(const TrigBasisSpec& spec);

double mse(const Image& x_ref, const Image& x_test);

// Peak signal-to-noise ratio with the reference's largest magnitude as the
// peak. Zero error returns +infinity.
double psnr(const Image& x_ref, const Image& x_test);
inline constexpr double kInfinitePsnr = std::numeric_limits<double>::infinity();

inline constexpr std::size_t kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;

// Mean SSIM over all fully contained 11x11 Gaussian windows.
double ssim(const Image& x_ref, const Image& x_test);

// Named sequence of (iteration, value) pairs with strictly increasing keys.
class CurveSeries {
 public:
  CurveSeries() = default;
  explicit CurveSeries(std::string name) : name_(std::move(name)) {}
  CurveSeries(std::string name, std::vector<std::pair<std::size_t, double>> points);

  void push(std::size_t iteration, double value);

  const std::string& name() const { return name_; }
  const std::vector<std::pair<std::size_t, double>>& points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }

  std::optional<double> value_at(std::size_t iteration) const;
  // Iteration of the first maximum / minimum.
  std::size_t argmax() const;
  std::size_t argmin() const;
  double max() const;

 private:
  std::string name_;
  std::vector<std::pair<std::size_t, double>> points_;
};

// Peak metric value minus the value at stop_iter.
double detection_gap(const CurveSeries& trace, std::size_t stop_iter);

// Binary PGM (P5). Writes maxval 65535, big-endian, samples round(v * 65535)
// after clamping to [0, 1]. Reads maxval 1..65535.
void write_pgm(const std::filesystem::path& path, const Image& image);
Image read_pgm(const std::filesystem::path& path);

}  // namespace eswmv

#endif  // ESWMV_SIGNALS_HPP_
