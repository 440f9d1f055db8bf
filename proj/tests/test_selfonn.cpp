#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "ecgr/errors.hpp"
#include "ecgr/selfonn.hpp"
#include "oracles.hpp"

using namespace ecgr;

namespace {

OperationalConvLayer random_conv_layer(std::mt19937_64& rng, std::size_t q) {
  const std::size_t cin = 1 + rng() % 4, cout = 1 + rng() % 4, k = 1 + rng() % 7;
  OperationalConvLayer l(cin, cout, q, k, 1 + rng() % 3, rng() % k);
  l.weights = oracle::random_kernel(cout, cin, q, k, rng);
  l.bias = oracle::random_vector(cout, rng);
  return l;
}

OperationalTransposedConvLayer random_tconv_layer(std::mt19937_64& rng, std::size_t q) {
  const std::size_t cin = 1 + rng() % 4, cout = 1 + rng() % 4, k = 1 + rng() % 7;
  const std::size_t stride = 1 + rng() % 3;
  OperationalTransposedConvLayer l(cin, cout, q, k, stride, rng() % k, stride > 1 ? rng() % stride : 0);
  l.weights = oracle::random_kernel(cout, cin, q, k, rng);
  l.bias = oracle::random_vector(cout, rng);
  return l;
}

}  // namespace

TEST_CASE("generative conv equals the direct double sum up to Q=5, K=7") {
  std::mt19937_64 rng(21);
  for (std::size_t trial = 0; trial < 40; ++trial) {
    const std::size_t q = 1 + trial % 5;
    const auto layer = random_conv_layer(rng, q);
    const auto x = oracle::random_map(2, layer.in_channels(), 8 + rng() % 24, rng);
    const auto y = op_forward(layer, x);
    const auto ref = oracle::generative_conv(x, layer.weights, layer.bias, layer.geometry);
    REQUIRE(y.same_shape(ref));
    for (std::size_t i = 0; i < y.size(); ++i) CHECK(std::abs(y.values()[i] - ref.values()[i]) < 1e-10);
  }
}

TEST_CASE("generative tconv equals the direct scatter up to Q=5") {
  std::mt19937_64 rng(22);
  for (std::size_t trial = 0; trial < 40; ++trial) {
    const std::size_t q = 1 + trial % 5;
    const auto layer = random_tconv_layer(rng, q);
    const auto x = oracle::random_map(2, layer.in_channels(), 3 + rng() % 12, rng);
    const auto y = op_tconv_forward(layer, x);
    const auto ref = oracle::generative_tconv(x, layer.weights, layer.bias, layer.geometry);
    REQUIRE(y.same_shape(ref));
    for (std::size_t i = 0; i < y.size(); ++i) CHECK(std::abs(y.values()[i] - ref.values()[i]) < 1e-10);
  }
}

TEST_CASE("Q=1 layers reduce to the plain convolution primitives") {
  std::mt19937_64 rng(23);
  for (std::size_t trial = 0; trial < 20; ++trial) {
    const auto layer = random_conv_layer(rng, 1);
    const auto x = oracle::random_map(2, layer.in_channels(), 10 + rng() % 20, rng);
    const auto y = op_forward(layer, x);
    CHECK(y == conv1d(x, layer.weights, layer.bias, layer.geometry));
    const auto u = oracle::random_map(2, layer.out_channels(), y.length(), rng);
    const LayerGrads a = op_backward(layer, x, u);
    const ConvGrads b = conv1d_backward(x, layer.weights, u, layer.geometry);
    CHECK(a.grad_x == b.grad_x);
    CHECK(a.grad_w == b.grad_w);
    CHECK(a.grad_bias == b.grad_bias);
  }
}

TEST_CASE("layer gradients pass the finite-difference check") {
  std::mt19937_64 rng(24);
  for (std::size_t q : {1, 2, 3, 5}) {
    const auto conv = random_conv_layer(rng, q);
    const auto xc = oracle::random_map(2, conv.in_channels(), 20, rng);
    const auto rc = grad_check(conv, xc, 100);
    CHECK(rc.checked > 0);
    CHECK(rc.passed(1e-4));

    const auto tconv = random_tconv_layer(rng, q);
    const auto xt = oracle::random_map(2, tconv.in_channels(), 9, rng);
    const auto rt = grad_check(tconv, xt, 100);
    CHECK(rt.checked > 0);
    CHECK(rt.passed(1e-4));
  }
}

TEST_CASE("initialisation bounds shrink with the power") {
  OperationalConvLayer l(4, 3, 3, 5, 1, 2);
  std::mt19937_64 rng(25);
  initialize_layer(l.weights, l.bias, rng);
  const double a = std::sqrt(3.0 / 20.0);
  for (std::size_t o = 0; o < 3; ++o)
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t q = 1; q <= 3; ++q)
        for (std::size_t r = 0; r < 5; ++r) CHECK(std::abs(l.weights.at(o, i, q, r)) <= a / static_cast<double>(q));
  for (double b : l.bias) CHECK(std::abs(b) <= 1.0 / std::sqrt(20.0));
}

TEST_CASE("non-finite layer output raises NumericError") {
  OperationalConvLayer l(1, 1, 3, 1, 1, 0);
  l.weights.at(0, 0, 3, 0) = 1.0;
  FeatureMap x(1, 1, 2, std::vector<double>{1e200, 0.0});
  CHECK_THROWS_AS(op_forward(l, x), NumericError);
  FeatureMap nan(1, 1, 2, std::vector<double>{std::numeric_limits<double>::quiet_NaN(), 0.0});
  CHECK_THROWS_AS(op_forward(l, nan), NumericError);
}

TEST_CASE("transposed layer rejects output padding >= stride") {
  CHECK_THROWS_AS(OperationalTransposedConvLayer(1, 1, 1, 4, 2, 1, 2), ConfigError);
  CHECK_NOTHROW(OperationalTransposedConvLayer(1, 1, 1, 4, 2, 1, 1));
}

TEST_CASE("relative error floor") {
  CHECK(relative_error(1.0, 1.0) == 0.0);
  CHECK(relative_error(0.0, 1e-12) == doctest::Approx(1e-4));
  CHECK(relative_error(2.0, 1.0) == doctest::Approx(0.5));
}
