#include <cmath>

#include "bbnet/error.hpp"
#include "bbnet/graph.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace bbnet;
using T = nn::Tensor<double>;

TEST_CASE("renormalize: hand-evaluated cases") {
  AdjacencyMatrix a;
  a.weights = Matrix::Zero(2, 2);
  CHECK(renormalize(a).matrix == Matrix::Identity(2, 2));

  a.weights = Matrix::Ones(2, 2);
  const Matrix op = renormalize(a).matrix;
  CHECK(op(0, 0) == doctest::Approx(2.0 / 3).epsilon(1e-15));
  CHECK(op(0, 1) == doctest::Approx(1.0 / 3).epsilon(1e-15));
  CHECK(op(1, 1) == doctest::Approx(2.0 / 3).epsilon(1e-15));

  // Negative weights contribute through their magnitude.
  a.weights << 0, -1, -1, 0;
  const Matrix neg = renormalize(a).matrix;
  CHECK(neg(0, 1) == doctest::Approx(-0.5).epsilon(1e-15));
  CHECK(neg(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK_THROWS_AS(renormalize(a, DegreeMode::Signed), DegenerateGraphError);

  a.weights = -Matrix::Identity(2, 2);
  CHECK_THROWS_AS(renormalize(a), DegenerateGraphError);

  a.weights = Matrix::Ones(2, 3);
  CHECK_THROWS(renormalize(a));
}

TEST_CASE("renormalize: symmetric with spectral radius at most one") {
  Rng rng(21);
  for (int rep = 0; rep < 20; ++rep) {
    Matrix m = oracle::random_matrix(rng, 16, 16, 0.0, 1.0);
    m = (m + m.transpose()).eval();
    AdjacencyMatrix a{m, Measure::COR};
    const Matrix op = renormalize(a).matrix;
    CHECK(op == op.transpose());
    CHECK(oracle::spectral_radius(op) <= 1.0 + 1e-8);
    // D^-1/2 (A+I) D^-1/2 entry by entry.
    for (Eigen::Index k = 0; k < 16; ++k) {
      for (Eigen::Index l = 0; l < 16; ++l) {
        double dk = 0, dl = 0;
        for (Eigen::Index j = 0; j < 16; ++j) {
          dk += std::abs(m(k, j) + (k == j));
          dl += std::abs(m(l, j) + (l == j));
        }
        CHECK(op(k, l) == doctest::Approx((m(k, l) + (k == l)) / std::sqrt(dk * dl)).epsilon(1e-13));
      }
    }
  }
}

TEST_CASE("gcn layer: identity propagation and ReLU") {
  Matrix h(3, 2);
  h << 1, 2, 0, 3, 4, 0.5;
  const T id3 = to_tensor<double>(Matrix::Identity(3, 3));
  const T id2 = to_tensor<double>(Matrix::Identity(2, 2));
  CHECK(to_matrix(gcn_layer_forward(id3, to_tensor<double>(h), id2)) == h);
  h(1, 0) = -2;
  Matrix clipped = h;
  clipped(1, 0) = 0;
  CHECK(to_matrix(gcn_layer_forward(id3, to_tensor<double>(h), id2)) == clipped);
  CHECK_THROWS_AS(gcn_layer_forward(id3, to_tensor<double>(h), id3), ShapeError);
}

TEST_CASE("gcn layer matches a triple-loop product") {
  Rng rng(5);
  const Matrix op = oracle::random_matrix(rng, 4, 4);
  const Matrix h = oracle::random_matrix(rng, 4, 3);
  const Matrix w = oracle::random_matrix(rng, 3, 2);
  const Matrix expect = oracle::matmul(oracle::matmul(op, h), w).cwiseMax(0.0);
  const Matrix got = to_matrix(gcn_layer_forward(to_tensor<double>(op), to_tensor<double>(h), to_tensor<double>(w)));
  CHECK((got - expect).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("identity graph reduces to a per-node dense layer") {
  Rng rng(6);
  const Matrix op = renormalize(identity_adjacency(5)).matrix;
  const Matrix h = oracle::random_matrix(rng, 5, 4);
  const Matrix w = oracle::random_matrix(rng, 4, 3);
  const Matrix got = to_matrix(gcn_layer_forward(to_tensor<double>(op), to_tensor<double>(h), to_tensor<double>(w)));
  for (Eigen::Index n = 0; n < 5; ++n) {
    for (Eigen::Index j = 0; j < 3; ++j) {
      double acc = 0;
      for (Eigen::Index i = 0; i < 4; ++i) acc += h(n, i) * w(i, j);
      CHECK(std::abs(got(n, j) - std::max(acc, 0.0)) <= 1e-12);
    }
  }
}

TEST_CASE("gcn layer gradients match finite differences") {
  Rng rng(7);
  const T op = to_tensor<double>(oracle::random_matrix(rng, 4, 4));
  T h = to_tensor<double>(oracle::random_matrix(rng, 4, 3), true);
  T w = to_tensor<double>(oracle::random_matrix(rng, 3, 2), true);
  const double err = oracle::gradient_error<double>(
      [&] { return nn::sum(nn::square(gcn_layer_forward(op, h, w))); }, {h, w});
  CHECK(err <= 1e-4);
}

TEST_CASE("batched graph convolution equals per-graph layers") {
  Rng rng(8);
  GraphConv<double> layer("g", 3, 2, rng);
  const Matrix op0 = oracle::random_matrix(rng, 4, 4);
  const Matrix op1 = oracle::random_matrix(rng, 4, 4);
  const Matrix h0 = oracle::random_matrix(rng, 4, 3);
  const Matrix h1 = oracle::random_matrix(rng, 4, 3);
  std::vector<double> ops, hs;
  for (const Matrix* m : {&op0, &op1}) ops.insert(ops.end(), m->data(), m->data() + m->size());
  for (const Matrix* m : {&h0, &h1}) hs.insert(hs.end(), m->data(), m->data() + m->size());
  const T out = layer.forward(T::from_values({2, 4, 4}, ops), T::from_values({2, 4, 3}, hs));
  const Matrix w = to_matrix(layer.weight().tensor);
  const Matrix e0 = oracle::matmul(oracle::matmul(op0, h0), w).cwiseMax(0.0);
  const Matrix e1 = oracle::matmul(oracle::matmul(op1, h1), w).cwiseMax(0.0);
  for (Eigen::Index i = 0; i < 8; ++i) {
    CHECK(std::abs(out[std::size_t(i)] - e0.data()[i]) <= 1e-12);
    CHECK(std::abs(out[std::size_t(8 + i)] - e1.data()[i]) <= 1e-12);
  }
}
