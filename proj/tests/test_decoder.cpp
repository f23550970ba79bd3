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

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "eswmv/decoder.hpp"
#include "eswmv/random.hpp"

using namespace eswmv;

namespace {

Eigen::MatrixXd random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = scale * rng.normal();
  return m;
}

UpsamplingKernel random_kernel(Rng& rng, std::size_t n) {
  std::vector<double> taps(n);
  for (double& t : taps) t = rng.normal();
  return UpsamplingKernel(taps);
}

// x_i = sum_j relu( sum_a U_ia sum_b B_ab C_bj ) v_j with explicit loops.
std::vector<double> naive_forward(const std::vector<double>& u, const Eigen::MatrixXd& b,
                                  const Eigen::MatrixXd& c, const Eigen::VectorXd& v) {
  const std::size_t n = u.size();
  const auto k = std::size_t(c.cols());
  std::vector<double> x(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      double z = 0.0;
      for (std::size_t a = 0; a < n; ++a) {
        double bc = 0.0;
        for (std::size_t q = 0; q < n; ++q) bc += b(Eigen::Index(a), Eigen::Index(q)) * c(Eigen::Index(q), Eigen::Index(j));
        z += u[(i + n - a) % n] * bc;
      }
      x[i] += std::max(z, 0.0) * v(Eigen::Index(j));
    }
  }
  return x;
}

double min_abs_preactivation(const TwoLayerDecoder& dec) {
  return dec.pre_activation().cwiseAbs().minCoeff();
}

}  // namespace

TEST_CASE("dft and step bound") {
  const std::vector<double> x = {1.0, 2.0, 0.0, -1.0};
  const auto f = dft(x);
  // Hand evaluation: X_0 = 2, X_1 = 1 - 2i - 0 + (-1)(i) = 1 - 3i.
  CHECK(f[0].real() == doctest::Approx(2.0));
  CHECK(f[1].real() == doctest::Approx(1.0));
  CHECK(f[1].imag() == doctest::Approx(-3.0));

  CHECK(max_step_size(UpsamplingKernel::delta(16)) == doctest::Approx(1.0).epsilon(1e-14));
  std::vector<double> two_delta(16, 0.0);
  two_delta[0] = 2.0;
  CHECK(max_step_size(UpsamplingKernel(two_delta)) == doctest::Approx(0.25).epsilon(1e-14));
  for (std::size_t n : {5u, 12u, 64u}) {
    CHECK(max_step_size(UpsamplingKernel(std::vector<double>(n, 1.0))) ==
          doctest::Approx(1.0 / double(n * n)).epsilon(1e-12));
  }
  CHECK(max_step_size(UpsamplingKernel::triangular(64, 41)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(UpsamplingKernel(std::vector<double>(8, 0.0)), InvalidArgument);
  CHECK_THROWS_AS(UpsamplingKernel::triangular(8, 4), InvalidArgument);
}

TEST_CASE("circulant matches circular convolution") {
  Rng rng(1);
  const auto u = random_kernel(rng, 7);
  const Eigen::MatrixXd big_u = u.circulant();
  Eigen::VectorXd x(7);
  for (int i = 0; i < 7; ++i) x(i) = rng.normal();
  const Eigen::VectorXd y = big_u * x;
  for (std::size_t i = 0; i < 7; ++i) {
    double conv = 0.0;
    for (std::size_t j = 0; j < 7; ++j) conv += u.taps()[(i + 7 - j) % 7] * x(Eigen::Index(j));
    CHECK(y(Eigen::Index(i)) == doctest::Approx(conv).epsilon(1e-12));
  }
}

TEST_CASE("spectrum_from_kernel") {
  SUBCASE("delta kernel has a flat unit spectrum") {
    for (double s : spectrum_from_kernel(UpsamplingKernel::delta(12))) CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("homogeneous of degree one") {
    Rng rng(4);
    const auto u = random_kernel(rng, 10);
    std::vector<double> scaled(u.taps().begin(), u.taps().end());
    for (double& t : scaled) t *= 3.5;
    const auto a = spectrum_from_kernel(u);
    const auto b = spectrum_from_kernel(UpsamplingKernel(scaled));
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(b[i] == doctest::Approx(3.5 * a[i]).epsilon(1e-8));
  }
  SUBCASE("smoothing kernel decays with gaps between frequency pairs") {
    std::vector<double> taps(16, 0.0);
    taps[0] = 0.5;
    taps[1] = 0.25;
    taps[15] = 0.25;
    const auto sigma = spectrum_from_kernel(UpsamplingKernel(taps));
    for (std::size_t i = 1; i < sigma.size(); ++i) CHECK(sigma[i] <= sigma[i - 1]);
    // cos/sin of one frequency share a singular value; distinct frequencies
    // are separated: gaps at p = 1, 3, 5, ...
    for (std::size_t p = 1; p + 1 < sigma.size(); p += 2) CHECK(sigma[p - 1] / sigma[p] > 1.0);
  }
  SUBCASE("independent evaluation for a random kernel") {
    Rng rng(9);
    const auto u = random_kernel(rng, 9);
    const auto taps = u.taps();
    double norm2 = 0.0;
    for (double t : taps) norm2 += t * t;
    std::vector<double> expected;
    for (std::size_t f = 0; f < 9; ++f) {
      double re = 0.0, im = 0.0;
      for (std::size_t m = 0; m < 9; ++m) {
        double a = 0.0;
        for (std::size_t j = 0; j < 9; ++j) a += taps[j] * taps[(j + m) % 9];
        a /= norm2;
        const double g = (1.0 - std::acos(a) / std::numbers::pi) * a;
        re += g * std::cos(2.0 * std::numbers::pi * double(f * m) / 9.0);
        im -= g * std::sin(2.0 * std::numbers::pi * double(f * m) / 9.0);
      }
      expected.push_back(std::sqrt(norm2) * std::sqrt(std::hypot(re, im)));
    }
    std::sort(expected.rbegin(), expected.rend());
    const auto sigma = spectrum_from_kernel(u);
    for (std::size_t i = 0; i < 9; ++i) CHECK(sigma[i] == doctest::Approx(expected[i]).epsilon(1e-10));
  }
}

TEST_CASE("sign vector") {
  for (std::size_t k : {1u, 2u, 7u, 256u}) {
    const auto v = sign_vector(k);
    CHECK(v.norm() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(std::size_t((v.array() > 0).count()) == (k + 1) / 2);
    CHECK(std::size_t((v.array() < 0).count()) == k / 2);
  }
}

TEST_CASE("forward") {
  Rng rng(11);
  SUBCASE("zero weights give zero output") {
    TwoLayerDecoder dec(UpsamplingKernel::triangular(16, 5), 8, 3);
    const Image x = dec.forward();
    for (double value : x.samples()) CHECK(value == 0.0);
  }
  SUBCASE("delta kernel reduces to ReLU(B C) v") {
    TwoLayerDecoder dec(UpsamplingKernel::delta(6), 5, 4);
    dec.set_weights(random_matrix(rng, 6, 5));
    const Eigen::VectorXd expected = (dec.seed_matrix() * dec.weights()).cwiseMax(0.0) * dec.output_weights();
    const Image x = dec.forward();
    for (Eigen::Index i = 0; i < 6; ++i) CHECK(x[std::size_t(i)] == doctest::Approx(expected(i)).epsilon(1e-14));
  }
  SUBCASE("matches a triple-loop oracle") {
    for (int rep = 0; rep < 5; ++rep) {
      const auto u = random_kernel(rng, 7);
      TwoLayerDecoder dec(u, random_matrix(rng, 7, 7), 6);
      dec.set_weights(random_matrix(rng, 7, 6));
      const auto expected = naive_forward(std::vector<double>(u.taps().begin(), u.taps().end()),
                                          dec.seed_matrix(), dec.weights(), dec.output_weights());
      const Image x = dec.forward();
      for (std::size_t i = 0; i < 7; ++i) CHECK(std::abs(x[i] - expected[i]) <= 1e-10);
    }
  }
  SUBCASE("positively homogeneous in C") {
    TwoLayerDecoder dec(UpsamplingKernel::triangular(12, 3), 10, 5);
    dec.initialize_weights(1.0, 6);
    const Image x = dec.forward();
    dec.set_weights(2.5 * dec.weights());
    const Image y = dec.forward();
    for (std::size_t i = 0; i < 12; ++i) CHECK(y[i] == doctest::Approx(2.5 * x[i]).epsilon(1e-12));
  }
  SUBCASE("seed matrix scale") {
    TwoLayerDecoder dec(UpsamplingKernel::delta(64), 4, 8);
    const double var = dec.seed_matrix().squaredNorm() / (64.0 * 64.0);
    CHECK(var == doctest::Approx(1.0 / 64.0).epsilon(0.1));
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(TwoLayerDecoder(UpsamplingKernel::delta(4), Eigen::MatrixXd::Zero(3, 3), 2), InvalidArgument);
    TwoLayerDecoder dec(UpsamplingKernel::delta(4), 2, 1);
    CHECK_THROWS_AS(dec.set_weights(Eigen::MatrixXd::Zero(4, 3)), InvalidArgument);
    CHECK_THROWS_AS(dec.loss_and_grad(Image::signal({1, 2})), InvalidArgument);
  }
}

TEST_CASE("loss_and_grad") {
  Rng rng(12);
  SUBCASE("zero residual") {
    TwoLayerDecoder dec(UpsamplingKernel::triangular(10, 3), 6, 2);
    dec.initialize_weights(1.0, 3);
    const auto lg = dec.loss_and_grad(dec.forward());
    CHECK(lg.loss == 0.0);
    CHECK(lg.gradient.cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("central finite differences") {
    int checked = 0;
    for (int rep = 0; rep < 10; ++rep) {
      TwoLayerDecoder dec(random_kernel(rng, 6), 5, std::uint64_t(rep));
      dec.initialize_weights(1.0, std::uint64_t(100 + rep));
      if (min_abs_preactivation(dec) < 1e-4) continue;
      Image y = Image::signal(std::vector<double>(6));
      for (double& v : y.samples()) v = rng.normal();
      const auto lg = dec.loss_and_grad(y);
      const double h = 1e-6;
      Eigen::MatrixXd fd(6, 5);
      for (Eigen::Index a = 0; a < 6; ++a) {
        for (Eigen::Index j = 0; j < 5; ++j) {
          Eigen::MatrixXd c = dec.weights();
          TwoLayerDecoder probe = dec;
          c(a, j) += h;
          probe.set_weights(c);
          const double plus = probe.loss_and_grad(y).loss;
          c(a, j) -= 2 * h;
          probe.set_weights(c);
          const double minus = probe.loss_and_grad(y).loss;
          fd(a, j) = (plus - minus) / (2 * h);
        }
      }
      const double rel = (fd - lg.gradient).norm() / std::max(lg.gradient.norm(), 1e-12);
      CHECK(rel <= 1e-5);
      ++checked;
    }
    CHECK(checked >= 5);
  }
  SUBCASE("doubling the residual doubles the gradient") {
    TwoLayerDecoder dec(UpsamplingKernel::triangular(10, 5), 7, 9);
    dec.initialize_weights(0.7, 10);
    const Image g = dec.forward();
    Image y1 = Image::signal(std::vector<double>(10));
    for (double& v : y1.samples()) v = rng.normal();
    Image y2 = y1;
    for (std::size_t i = 0; i < 10; ++i) y2[i] = 2.0 * y1[i] - g[i];  // residual G - y2 = 2 (G - y1)
    const auto a = dec.loss_and_grad(y1);
    const auto b = dec.loss_and_grad(y2);
    CHECK((b.gradient - 2.0 * a.gradient).norm() <= 1e-12 * a.gradient.norm());
    CHECK(b.loss == doctest::Approx(4.0 * a.loss).epsilon(1e-12));
  }
}

TEST_CASE("jacobian") {
  Rng rng(13);
  SUBCASE("dead ReLU gives a zero Jacobian") {
    TwoLayerDecoder dec(UpsamplingKernel::delta(5), Eigen::MatrixXd::Identity(5, 5), 3);
    dec.set_weights(-Eigen::MatrixXd::Ones(5, 3));
    CHECK(dec.jacobian().cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("finite differences, n = 4, k = 3") {
    for (int rep = 0; rep < 5; ++rep) {
      TwoLayerDecoder dec(random_kernel(rng, 4), 3, std::uint64_t(rep + 20));
      dec.initialize_weights(1.0, std::uint64_t(rep + 40));
      if (min_abs_preactivation(dec) < 1e-4) continue;
      const Eigen::MatrixXd jac = dec.jacobian();
      REQUIRE(jac.rows() == 4);
      REQUIRE(jac.cols() == 12);
      const double h = 1e-6;
      for (Eigen::Index j = 0; j < 3; ++j) {
        for (Eigen::Index a = 0; a < 4; ++a) {
          TwoLayerDecoder plus = dec, minus = dec;
          Eigen::MatrixXd c = dec.weights();
          c(a, j) += h;
          plus.set_weights(c);
          c(a, j) -= 2 * h;
          minus.set_weights(c);
          const Image fp = plus.forward(), fm = minus.forward();
          for (std::size_t i = 0; i < 4; ++i) {
            CHECK(std::abs((fp[i] - fm[i]) / (2 * h) - jac(Eigen::Index(i), a + 4 * j)) <= 1e-6);
          }
        }
      }
    }
  }
  SUBCASE("directional derivative") {
    TwoLayerDecoder dec(UpsamplingKernel::triangular(8, 3), 6, 30);
    dec.initialize_weights(1.0, 31);
    REQUIRE(min_abs_preactivation(dec) > 1e-4);
    Eigen::MatrixXd delta = random_matrix(rng, 8, 6);
    delta *= 1e-6 / delta.norm();
    const Eigen::VectorXd predicted = dec.jacobian() * Eigen::Map<const Eigen::VectorXd>(delta.data(), delta.size());
    const Eigen::VectorXd before = vector_from(dec.forward());
    dec.set_weights(dec.weights() + delta);
    const Eigen::VectorXd actual = vector_from(dec.forward()) - before;
    CHECK((actual - predicted).norm() <= 1e-6 * predicted.norm());
  }
  SUBCASE("size guard") {
    TwoLayerDecoder dec(UpsamplingKernel::delta(1024), Eigen::MatrixXd::Identity(1024, 1024), 1025);
    CHECK_THROWS_AS(dec.jacobian(), InvalidArgument);
  }
}

TEST_CASE("TrainStream") {
  const auto kernel = UpsamplingKernel::triangular(16, 5);
  Rng rng(14);
  Image y = Image::signal(std::vector<double>(16));
  for (double& v : y.samples()) v = rng.uniform();

  SUBCASE("zero step size leaves the output unchanged") {
    TrainStream stream(TwoLayerDecoder(kernel, 12, 1), y, {0.0, 20, 2, std::nullopt});
    std::size_t count = 0;
    while (auto step = stream.next()) {
      CHECK(step->x == stream.initial());
      ++count;
    }
    CHECK(count == 20);
  }
  SUBCASE("default omega and determinism") {
    auto run = [&] {
      TrainStream stream(TwoLayerDecoder(kernel, 12, 3), y, {0.3, 50, 4, std::nullopt});
      std::vector<Image> xs;
      while (auto step = stream.next()) xs.push_back(step->x);
      return xs;
    };
    CHECK(run() == run());
    TrainStream stream(TwoLayerDecoder(kernel, 12, 3), y, {0.3, 5, 4, std::nullopt});
    CHECK(stream.omega() == doctest::Approx(default_omega(y)));
  }
  SUBCASE("loss decreases at half the step bound") {
    TrainStream stream(TwoLayerDecoder(kernel, 64, 5), y, {0.5 * max_step_size(kernel), 200, 6, std::nullopt});
    double first = 0.0, last = 0.0;
    while (auto step = stream.next()) {
      if (step->iteration == 1) first = step->loss;
      last = step->loss;
      CHECK(std::isfinite(step->loss));
    }
    CHECK(last < first);
    CHECK(first <= stream.initial_loss());
  }
  SUBCASE("divergence guard") {
    TrainStream stream(TwoLayerDecoder(kernel, 12, 7), y, {1e4, 100, 8, std::nullopt});
    auto drain = [&] {
      while (stream.next()) {}
    };
    CHECK_THROWS_AS(drain(), DivergenceError);
  }
}
