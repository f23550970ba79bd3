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

#ifndef ESWMV_NTK_ORACLE_HPP_
#define ESWMV_NTK_ORACLE_HPP_

#include <cstddef>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "eswmv/signals.hpp"

namespace eswmv {

// Raised when eta * sigma^2 leaves the range a formula is valid for.
class RegimeError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Coefficient of <w_i, y_hat>^2 (1 - xi)^{2t} in the running variance of
// linearized gradient descent, with xi = eta * sigma^2:
//   1/(W^2 xi) * [ W (1 - (1-xi)^{2W}) / (2 - xi) - (1 - (1-xi)^W)^2 / xi ].
// Continuous extension 0 at xi = 0.
double variance_constant(std::size_t window, double eta, double sigma);

// Singular values sigma_i with orthonormal left singular vectors w_i (the
// columns of left_vectors), the residual y_hat = y - G(theta^0) and the step.
struct SpectralModel {
  std::vector<double> sigmas;
  Eigen::MatrixXd left_vectors;
  Eigen::VectorXd y_hat;
  double eta = 0.0;

  std::size_t dimension() const { return static_cast<std::size_t>(y_hat.size()); }
  // Checks shapes, orthonormality to 1e-10, and eta * max sigma^2 <= 1.
  void validate() const;
};

// Exact windowed variance of x^t, ..., x^{t+W-1} under linearized descent.
double closed_form_wmv(const SpectralModel& model, std::size_t window, std::size_t t);

// x^t = sum_i (1 - (1 - eta sigma_i^2)^t) <w_i, y_hat> w_i for t = 0..T,
// evaluated mode by mode (the trajectory of linearized descent from c = 0,
// without the constant offset G(theta^0)).
std::vector<Image> simulate_linearized(const SpectralModel& model, std::size_t steps);

struct BoundInputs {
  Eigen::VectorXd x;        // ground truth
  Eigen::VectorXd noise;    // n, with y = x + n
  Eigen::VectorXd y;
  std::vector<double> sigmas;
  Eigen::MatrixXd left_vectors;
  double eta = 0.0;
  std::size_t gap_index = 1;  // p, 1-based
  double epsilon = 0.0;
  std::size_t window = 1;

  void validate() const;
};

// Three-term upper bound on the windowed variance at iteration t:
//   (12/W) ||x||^2 q^{2t} / (1 - q^2) + 12 sum_i ((1 - xi_i)^{t+W-1} - 1)^2 <w_i, n>^2
//   + 12 eps^2 ||y||^2,  q = 1 - eta sigma_p^2.
double upper_bound_wmv(const BoundInputs& b, std::size_t t);

// sqrt( sum_j ((1 - eta sigma_j^2)^t - 1)^2 <w_j, n>^2 ).
double noise_error_term(const BoundInputs& b, std::size_t t);

// Gradient descent on the first-order surrogate
//   f(delta) = || y_hat - J delta ||^2   from delta = 0,
// returning J delta^t for t = 0..T. The gradient carries the factor 2 of
// the squared norm, so the modal rate is 2 * eta * sigma^2.
std::vector<Image> linearized_descent(const Eigen::MatrixXd& jacobian, const Eigen::VectorXd& y_hat,
                                      double eta, std::size_t steps);

// SpectralModel of a Jacobian via thin SVD, for descent with step eta on the
// surrogate above (model eta is 2 * eta). Singular values below
// rank_tolerance * sigma_max are dropped.
SpectralModel spectral_model_from_jacobian(const Eigen::MatrixXd& jacobian,
                                           const Eigen::VectorXd& y_hat, double eta,
                                           double rank_tolerance = 1e-12);

}  // namespace eswmv

#endif  // ESWMV_NTK_ORACLE_HPP_
