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

#ifndef ESWMV_DECODER_HPP_
#define ESWMV_DECODER_HPP_

#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "eswmv/signals.hpp"

namespace eswmv {

class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Plain O(n^2) DFT, X_f = sum_j x_j exp(-2 pi i f j / n).
std::vector<std::complex<double>> dft(std::span<const double> x);

// Kernel of the circular convolution that acts as the upsampling operator.
class UpsamplingKernel {
 public:
  explicit UpsamplingKernel(std::vector<double> taps);

  // Unit impulse: the identity operator.
  static UpsamplingKernel delta(std::size_t n);
  // Symmetric triangle of the given odd support centered at index 0 (wrapping
  // around), scaled to unit sum so its DC response is 1.
  static UpsamplingKernel triangular(std::size_t n, std::size_t support);

  std::size_t size() const { return taps_.size(); }
  std::span<const double> taps() const { return taps_; }
  double norm() const;

  // U with (U x)_i = sum_j u_{(i - j) mod n} x_j.
  Eigen::MatrixXd circulant() const;

 private:
  std::vector<double> taps_;
};

// Largest step size for which plain gradient descent is covered by the
// convergence analysis: 1 / max_f |DFT(u)_f|^2.
double max_step_size(const UpsamplingKernel& u);

// Singular values of the reference Jacobian set by the kernel:
// ||u|| * |DFT(g(a))|^{1/2} with a the circular autocorrelation of u
// normalized by ||u||^2 and g(t) = (1 - arccos(t)/pi) t.
// spectrum_by_frequency keeps DFT order; spectrum_from_kernel sorts descending.
std::vector<double> spectrum_by_frequency(const UpsamplingKernel& u);
std::vector<double> spectrum_from_kernel(const UpsamplingKernel& u);

struct LossAndGradient {
  double loss = 0.0;
  Eigen::MatrixXd gradient;  // n x k, same layout as the weights
};

inline constexpr std::size_t kMaxJacobianEntries = std::size_t{1} << 20;

// Two-layer generator x = ReLU(U B C) v. B (n x n) is a fixed Gaussian seed,
// v a fixed +-1/sqrt(k) sign vector, and only C (n x k) is trained.
class TwoLayerDecoder {
 public:
  // B entries are drawn i.i.d. N(0, 1/n) from `seed`.
  TwoLayerDecoder(UpsamplingKernel kernel, std::size_t width, std::uint64_t seed);
  TwoLayerDecoder(UpsamplingKernel kernel, Eigen::MatrixXd seed_matrix, std::size_t width);

  std::size_t n() const { return n_; }
  std::size_t k() const { return k_; }
  const UpsamplingKernel& kernel() const { return kernel_; }
  const Eigen::MatrixXd& seed_matrix() const { return b_; }
  // U * B, the fixed linear map in front of the ReLU.
  const Eigen::MatrixXd& mixing() const { return ub_; }
  const Eigen::VectorXd& output_weights() const { return v_; }

  const Eigen::MatrixXd& weights() const { return c_; }
  void set_weights(Eigen::MatrixXd c);
  // C entries i.i.d. N(0, omega^2).
  void initialize_weights(double omega, std::uint64_t seed);

  Eigen::MatrixXd pre_activation() const { return ub_ * c_; }
  Image forward() const;

  // loss = ||y - G||^2 and its gradient with respect to C.
  LossAndGradient loss_and_grad(const Image& y) const;

  // n x (n k) Jacobian of forward() with respect to C; column a + n j holds
  // the derivative with respect to C(a, j). ReLU'(0) is taken as 0.
  Eigen::MatrixXd jacobian() const;

 private:
  UpsamplingKernel kernel_;
  std::size_t n_;
  std::size_t k_;
  Eigen::MatrixXd b_;
  Eigen::MatrixXd ub_;
  Eigen::VectorXd v_;
  Eigen::MatrixXd c_;
};

Image signal_from(const Eigen::VectorXd& x);
Eigen::VectorXd vector_from(const Image& x);

// Fixed sign vector [1, ..., 1, -1, ..., -1] / sqrt(k) with ceil(k/2) positive
// entries.
Eigen::VectorXd sign_vector(std::size_t k);

struct TrainerConfig {
  double eta = 0.0;
  std::size_t max_iters = 10000;
  std::uint64_t seed = 0;
  // Initialization scale; defaults to ||y||_2 / sqrt(n).
  std::optional<double> omega;
};

double default_omega(const Image& y);

struct TrainStep {
  std::size_t iteration = 0;
  double loss = 0.0;
  Image x;
};

// Plain gradient descent C <- C - eta * grad, yielding the reconstruction
// after each step. Throws DivergenceError once the loss exceeds 1e6 times the
// initial loss or becomes non-finite.
class TrainStream {
 public:
  TrainStream(TwoLayerDecoder decoder, Image y, const TrainerConfig& cfg);

  // Next iterate, or nullopt after max_iters steps.
  std::optional<TrainStep> next();

  const Image& initial() const { return initial_; }
  double initial_loss() const { return initial_loss_; }
  const TwoLayerDecoder& decoder() const { return decoder_; }
  std::size_t iteration() const { return iteration_; }
  double omega() const { return omega_; }

 private:
  TwoLayerDecoder decoder_;
  Eigen::VectorXd y_;
  TrainerConfig cfg_;
  double omega_;
  Eigen::MatrixXd z_;
  Image initial_;
  double initial_loss_ = 0.0;
  std::size_t iteration_ = 0;
};

inline constexpr double kDivergenceFactor = 1e6;

}  // namespace eswmv

#endif  // ESWMV_DECODER_HPP_
