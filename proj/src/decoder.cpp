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

#include "eswmv/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>

#include "eswmv/random.hpp"

namespace eswmv {

std::vector<std::complex<double>> dft(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<std::complex<double>> out(n);
  for (std::size_t f = 0; f < n; ++f) {
    std::complex<double> acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      // Reduce f*j mod n first so the angle stays accurate for large n.
      const double angle = -2.0 * std::numbers::pi * static_cast<double>((f * j) % n) /
                           static_cast<double>(n);
      acc += x[j] * std::polar(1.0, angle);
    }
    out[f] = acc;
  }
  return out;
}

// ---------------------------------------------------------------------------

UpsamplingKernel::UpsamplingKernel(std::vector<double> taps) : taps_(std::move(taps)) {
  if (taps_.empty()) throw InvalidArgument("upsampling kernel is empty");
  if (!(norm() > 0.0)) throw InvalidArgument("upsampling kernel must be nonzero");
}

UpsamplingKernel UpsamplingKernel::delta(std::size_t n) {
  if (n == 0) throw InvalidArgument("kernel length must be positive");
  std::vector<double> taps(n, 0.0);
  taps[0] = 1.0;
  return UpsamplingKernel(std::move(taps));
}

UpsamplingKernel UpsamplingKernel::triangular(std::size_t n, std::size_t support) {
  if (support == 0 || support % 2 == 0 || support > n) {
    throw InvalidArgument("triangular kernel support must be odd and at most n");
  }
  const std::size_t half = support / 2;
  std::vector<double> taps(n, 0.0);
  double total = 0.0;
  for (std::size_t d = 0; d <= half; ++d) {
    const double w = static_cast<double>(half + 1 - d);
    taps[d] += w;
    if (d > 0) taps[n - d] += w;
    total += d > 0 ? 2.0 * w : w;
  }
  for (double& t : taps) t /= total;
  return UpsamplingKernel(std::move(taps));
}

double UpsamplingKernel::norm() const {
  double s = 0.0;
  for (double t : taps_) s += t * t;
  return std::sqrt(s);
}

Eigen::MatrixXd UpsamplingKernel::circulant() const {
  const auto n = static_cast<Eigen::Index>(taps_.size());
  Eigen::MatrixXd u(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) u(i, j) = taps_[static_cast<std::size_t>((i - j + n) % n)];
  }
  return u;
}

double max_step_size(const UpsamplingKernel& u) {
  double peak = 0.0;
  for (const auto& c : dft(u.taps())) peak = std::max(peak, std::abs(c));
  if (!(peak > 0.0)) throw InvalidArgument("max_step_size: zero kernel");
  return 1.0 / (peak * peak);
}

std::vector<double> spectrum_by_frequency(const UpsamplingKernel& u) {
  const std::size_t n = u.size();
  const auto taps = u.taps();
  const double norm = u.norm();
  const double norm2 = norm * norm;
  std::vector<double> g(n);
  for (std::size_t m = 0; m < n; ++m) {
    double a = 0.0;
    for (std::size_t j = 0; j < n; ++j) a += taps[j] * taps[(j + m) % n];
    a = std::clamp(a / norm2, -1.0, 1.0);
    g[m] = (1.0 - std::acos(a) / std::numbers::pi) * a;
  }
  std::vector<double> sigma(n);
  const auto spectrum = dft(g);
  for (std::size_t f = 0; f < n; ++f) sigma[f] = norm * std::sqrt(std::abs(spectrum[f]));
  return sigma;
}

std::vector<double> spectrum_from_kernel(const UpsamplingKernel& u) {
  auto sigma = spectrum_by_frequency(u);
  std::sort(sigma.begin(), sigma.end(), std::greater<>());
  return sigma;
}

// ---------------------------------------------------------------------------

Eigen::VectorXd sign_vector(std::size_t k) {
  if (k == 0) throw InvalidArgument("decoder width must be positive");
  Eigen::VectorXd v(static_cast<Eigen::Index>(k));
  const std::size_t positive = (k + 1) / 2;
  const double scale = 1.0 / std::sqrt(static_cast<double>(k));
  for (std::size_t j = 0; j < k; ++j) v(static_cast<Eigen::Index>(j)) = j < positive ? scale : -scale;
  return v;
}

Image signal_from(const Eigen::VectorXd& x) {
  return Image::signal(std::vector<double>(x.data(), x.data() + x.size()));
}

Eigen::VectorXd vector_from(const Image& x) {
  return Eigen::Map<const Eigen::VectorXd>(x.data().data(), static_cast<Eigen::Index>(x.size()));
}

namespace {

Eigen::MatrixXd gaussian_seed_matrix(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  const double stddev = 1.0 / std::sqrt(static_cast<double>(n));
  const auto dim = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd b(dim, dim);
  // Row-major fill order so the draw sequence is independent of storage.
  for (Eigen::Index i = 0; i < dim; ++i) {
    for (Eigen::Index j = 0; j < dim; ++j) b(i, j) = rng.normal(0.0, stddev);
  }
  return b;
}

Eigen::VectorXd relu_times(const Eigen::MatrixXd& z, const Eigen::VectorXd& v) {
  return z.cwiseMax(0.0) * v;
}

}  // namespace

TwoLayerDecoder::TwoLayerDecoder(UpsamplingKernel kernel, std::size_t width, std::uint64_t seed)
    : TwoLayerDecoder(kernel, gaussian_seed_matrix(kernel.size(), seed), width) {}

TwoLayerDecoder::TwoLayerDecoder(UpsamplingKernel kernel, Eigen::MatrixXd seed_matrix,
                                 std::size_t width)
    : kernel_(std::move(kernel)),
      n_(kernel_.size()),
      k_(width),
      b_(std::move(seed_matrix)),
      v_(sign_vector(width)) {
  const auto n = static_cast<Eigen::Index>(n_);
  if (b_.rows() != n || b_.cols() != n) {
    throw InvalidArgument("seed matrix must be n x n with n = kernel length");
  }
  ub_ = kernel_.circulant() * b_;
  c_ = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(k_));
}

void TwoLayerDecoder::set_weights(Eigen::MatrixXd c) {
  if (c.rows() != static_cast<Eigen::Index>(n_) || c.cols() != static_cast<Eigen::Index>(k_)) {
    throw InvalidArgument("weights must be n x k");
  }
  c_ = std::move(c);
}

void TwoLayerDecoder::initialize_weights(double omega, std::uint64_t seed) {
  if (!(omega >= 0.0)) throw InvalidArgument("initialization scale must be nonnegative");
  Rng rng(seed);
  for (Eigen::Index i = 0; i < c_.rows(); ++i) {
    for (Eigen::Index j = 0; j < c_.cols(); ++j) c_(i, j) = rng.normal(0.0, omega);
  }
}

Image TwoLayerDecoder::forward() const { return signal_from(relu_times(ub_ * c_, v_)); }

namespace {

LossAndGradient loss_and_grad_at(const Eigen::MatrixXd& ub, const Eigen::VectorXd& v,
                                 const Eigen::MatrixXd& z, const Eigen::VectorXd& y) {
  const Eigen::VectorXd residual = relu_times(z, v) - y;
  // (2 e v^T) masked by the active units.
  const Eigen::MatrixXd upstream =
      ((2.0 * residual) * v.transpose()).cwiseProduct((z.array() > 0.0).cast<double>().matrix());
  return {residual.squaredNorm(), ub.transpose() * upstream};
}

}  // namespace

LossAndGradient TwoLayerDecoder::loss_and_grad(const Image& y) const {
  if (y.size() != n_) throw InvalidArgument("loss_and_grad: observation length != n");
  return loss_and_grad_at(ub_, v_, pre_activation(), vector_from(y));
}

Eigen::MatrixXd TwoLayerDecoder::jacobian() const {
  if (n_ * k_ > kMaxJacobianEntries) {
    throw InvalidArgument("jacobian: n*k = " + std::to_string(n_ * k_) + " exceeds dense limit");
  }
  const Eigen::MatrixXd z = pre_activation();
  const auto n = static_cast<Eigen::Index>(n_);
  const auto k = static_cast<Eigen::Index>(k_);
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n * k);
  for (Eigen::Index j = 0; j < k; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (z(i, j) > 0.0) jac.block(i, j * n, 1, n) = v_(j) * ub_.row(i);
    }
  }
  return jac;
}

// ---------------------------------------------------------------------------

double default_omega(const Image& y) {
  double s = 0.0;
  for (double v : y.samples()) s += v * v;
  return std::sqrt(s) / std::sqrt(static_cast<double>(y.size()));
}

TrainStream::TrainStream(TwoLayerDecoder decoder, Image y, const TrainerConfig& cfg)
    : decoder_(std::move(decoder)), cfg_(cfg) {
  if (y.size() != decoder_.n()) throw InvalidArgument("train: observation length != n");
  if (!(cfg.eta >= 0.0) || !std::isfinite(cfg.eta)) throw InvalidArgument("train: invalid step size");
  omega_ = cfg.omega.value_or(default_omega(y));
  y_ = vector_from(y);
  decoder_.initialize_weights(omega_, cfg.seed);
  z_ = decoder_.pre_activation();
  const Eigen::VectorXd x0 = relu_times(z_, decoder_.output_weights());
  initial_ = signal_from(x0);
  initial_loss_ = (x0 - y_).squaredNorm();
}

std::optional<TrainStep> TrainStream::next() {
  if (iteration_ >= cfg_.max_iters) return std::nullopt;
  const auto grad = loss_and_grad_at(decoder_.mixing(), decoder_.output_weights(), z_, y_).gradient;
  Eigen::MatrixXd c = decoder_.weights() - cfg_.eta * grad;
  decoder_.set_weights(std::move(c));
  z_ = decoder_.pre_activation();
  const Eigen::VectorXd x = relu_times(z_, decoder_.output_weights());
  const double loss = (x - y_).squaredNorm();
  ++iteration_;
  const double limit = kDivergenceFactor * std::max(initial_loss_, std::numeric_limits<double>::min());
  if (!std::isfinite(loss) || loss > limit) {
    throw DivergenceError("training diverged at iteration " + std::to_string(iteration_) +
                          " (loss " + std::to_string(loss) + ", initial " +
                          std::to_string(initial_loss_) + ")");
  }
  return TrainStep{iteration_, loss, signal_from(x)};
}

}  // namespace eswmv
