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

#include "eswmv/ntk_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace eswmv {

namespace {

// (1 - xi)^t and 1 - (1 - xi)^t, accurate for small xi.
double decay(double xi, double t) {
  if (t == 0.0) return 1.0;
  return xi >= 1.0 ? 0.0 : std::exp(t * std::log1p(-xi));
}

double fitted_fraction(double xi, double t) {
  if (t == 0.0) return 0.0;
  return xi >= 1.0 ? 1.0 : -std::expm1(t * std::log1p(-xi));
}

// Below this value of W * xi the two bracketed terms cancel badly, so the
// constant is evaluated as the variance of {1 - (1 - xi)^j} directly.
constexpr double kCancellationThreshold = 0.5;

}  // namespace

double variance_constant(std::size_t window, double eta, double sigma) {
  if (window == 0) throw InvalidArgument("variance_constant: window must be >= 1");
  const double xi = eta * sigma * sigma;
  if (!(xi >= 0.0)) throw RegimeError("variance_constant: eta * sigma^2 must be >= 0");
  if (xi > 1.0) throw RegimeError("variance_constant: eta * sigma^2 = " + std::to_string(xi) + " > 1");
  if (xi == 0.0 || window == 1) return 0.0;
  const double w = static_cast<double>(window);
  if (w * xi < kCancellationThreshold) {
    std::vector<double> d(window);
    double mean = 0.0;
    for (std::size_t j = 0; j < window; ++j) {
      d[j] = fitted_fraction(xi, static_cast<double>(j));
      mean += d[j];
    }
    mean /= w;
    double total = 0.0;
    for (double v : d) total += (v - mean) * (v - mean);
    return total / w;
  }
  const double s = fitted_fraction(xi, w);
  const double bracket = w * s * (2.0 - s) / (2.0 - xi) - s * s / xi;
  return bracket / (w * w * xi);
}

void SpectralModel::validate() const {
  const auto n = y_hat.size();
  if (n == 0) throw InvalidArgument("SpectralModel: empty y_hat");
  if (left_vectors.rows() != n || left_vectors.cols() != static_cast<Eigen::Index>(sigmas.size())) {
    throw InvalidArgument("SpectralModel: left_vectors must be n x (number of sigmas)");
  }
  const Eigen::MatrixXd gram = left_vectors.transpose() * left_vectors;
  const double off = (gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
  if (gram.size() > 0 && off > 1e-10) {
    throw InvalidArgument("SpectralModel: left vectors not orthonormal (max deviation " +
                          std::to_string(off) + ")");
  }
  for (double s : sigmas) {
    if (!(s >= 0.0)) throw InvalidArgument("SpectralModel: negative singular value");
    if (eta * s * s > 1.0) {
      throw RegimeError("SpectralModel: eta * sigma^2 = " + std::to_string(eta * s * s) + " > 1");
    }
  }
  if (!(eta >= 0.0)) throw InvalidArgument("SpectralModel: negative step size");
}

double closed_form_wmv(const SpectralModel& model, std::size_t window, std::size_t t) {
  model.validate();
  const Eigen::VectorXd proj = model.left_vectors.transpose() * model.y_hat;
  double total = 0.0;
  for (std::size_t i = 0; i < model.sigmas.size(); ++i) {
    const double sigma = model.sigmas[i];
    const double xi = model.eta * sigma * sigma;
    const double p = proj(static_cast<Eigen::Index>(i));
    total += variance_constant(window, model.eta, sigma) * p * p *
             decay(xi, 2.0 * static_cast<double>(t));
  }
  return total;
}

std::vector<Image> simulate_linearized(const SpectralModel& model, std::size_t steps) {
  model.validate();
  const Eigen::VectorXd proj = model.left_vectors.transpose() * model.y_hat;
  std::vector<Image> out;
  out.reserve(steps + 1);
  const auto modes = static_cast<Eigen::Index>(model.sigmas.size());
  for (std::size_t t = 0; t <= steps; ++t) {
    Eigen::VectorXd coeff(modes);
    for (Eigen::Index i = 0; i < modes; ++i) {
      const double xi = model.eta * model.sigmas[static_cast<std::size_t>(i)] *
                        model.sigmas[static_cast<std::size_t>(i)];
      coeff(i) = fitted_fraction(xi, static_cast<double>(t)) * proj(i);
    }
    const Eigen::VectorXd x = model.left_vectors * coeff;
    out.push_back(Image::signal(std::vector<double>(x.data(), x.data() + x.size())));
  }
  return out;
}

void BoundInputs::validate() const {
  const auto n = x.size();
  if (n == 0 || noise.size() != n || y.size() != n) throw InvalidArgument("BoundInputs: size mismatch");
  if (left_vectors.rows() != n || left_vectors.cols() != static_cast<Eigen::Index>(sigmas.size())) {
    throw InvalidArgument("BoundInputs: left_vectors must be n x (number of sigmas)");
  }
  if (gap_index < 1 || gap_index > sigmas.size()) throw InvalidArgument("BoundInputs: need 1 <= p <= n");
  if (window == 0) throw InvalidArgument("BoundInputs: window must be >= 1");
  if (!(epsilon >= 0.0)) throw InvalidArgument("BoundInputs: epsilon must be nonnegative");
  for (double s : sigmas) {
    if (!(s >= 0.0)) throw InvalidArgument("BoundInputs: negative singular value");
  }
  if (sigmas.front() > 0.0 && epsilon > sigmas[gap_index - 1] / sigmas.front()) {
    throw InvalidArgument("BoundInputs: epsilon must not exceed sigma_p / sigma_1");
  }
}

namespace {

double noise_sum(const BoundInputs& b, double exponent) {
  const Eigen::VectorXd proj = b.left_vectors.transpose() * b.noise;
  double total = 0.0;
  for (std::size_t i = 0; i < b.sigmas.size(); ++i) {
    const double xi = b.eta * b.sigmas[i] * b.sigmas[i];
    const double factor = std::pow(1.0 - xi, exponent) - 1.0;
    const double p = proj(static_cast<Eigen::Index>(i));
    total += factor * factor * p * p;
  }
  return total;
}

}  // namespace

double upper_bound_wmv(const BoundInputs& b, std::size_t t) {
  b.validate();
  const double sigma_p = b.sigmas[b.gap_index - 1];
  const double xi_p = b.eta * sigma_p * sigma_p;
  if (!(xi_p > 0.0 && xi_p < 1.0)) {
    throw RegimeError("upper_bound_wmv: eta * sigma_p^2 must lie in (0, 1)");
  }
  const double q = 1.0 - xi_p;
  const double w = static_cast<double>(b.window);
  const double signal_term =
      12.0 / w * b.x.squaredNorm() * std::pow(q, 2.0 * static_cast<double>(t)) / (1.0 - q * q);
  const double noise_term = 12.0 * noise_sum(b, static_cast<double>(t + b.window - 1));
  const double approx_term = 12.0 * b.epsilon * b.epsilon * b.y.squaredNorm();
  return signal_term + noise_term + approx_term;
}

double noise_error_term(const BoundInputs& b, std::size_t t) {
  b.validate();
  return std::sqrt(noise_sum(b, static_cast<double>(t)));
}

std::vector<Image> linearized_descent(const Eigen::MatrixXd& jacobian, const Eigen::VectorXd& y_hat,
                                      double eta, std::size_t steps) {
  if (jacobian.rows() != y_hat.size()) throw InvalidArgument("linearized_descent: size mismatch");
  Eigen::VectorXd delta = Eigen::VectorXd::Zero(jacobian.cols());
  std::vector<Image> out;
  out.reserve(steps + 1);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(jacobian.rows());
  for (std::size_t t = 0;; ++t) {
    out.push_back(Image::signal(std::vector<double>(x.data(), x.data() + x.size())));
    if (t == steps) break;
    delta -= eta * (2.0 * (jacobian.transpose() * (x - y_hat)));
    x = jacobian * delta;
  }
  return out;
}

SpectralModel spectral_model_from_jacobian(const Eigen::MatrixXd& jacobian,
                                           const Eigen::VectorXd& y_hat, double eta,
                                           double rank_tolerance) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(jacobian, Eigen::ComputeThinU);
  const Eigen::VectorXd& s = svd.singularValues();
  const double cutoff = s.size() > 0 ? rank_tolerance * s(0) : 0.0;
  Eigen::Index rank = 0;
  while (rank < s.size() && s(rank) > cutoff) ++rank;
  SpectralModel model;
  model.sigmas.assign(s.data(), s.data() + rank);
  model.left_vectors = svd.matrixU().leftCols(rank);
  model.y_hat = y_hat;
  model.eta = 2.0 * eta;
  return model;
}

}  // namespace eswmv
