#pragma once

#include <cstdint>

#include "bbnet/connectivity.hpp"
#include "bbnet/nn/layers.hpp"

namespace bbnet {

enum class DegreeMode : std::uint8_t {
  Absolute,  // D[k][k] = sum_l |A_hat[k][l]|, always positive once self-loops are added
  Signed,    // literal row sums; fails on non-positive degrees
};

/// D^-1/2 (A + I) D^-1/2, immutable once built.
struct NormalizedOperator {
  Matrix matrix;

  std::size_t size() const { return static_cast<std::size_t>(matrix.rows()); }
};

NormalizedOperator renormalize(const AdjacencyMatrix& adj, DegreeMode mode = DegreeMode::Absolute);

template <typename S>
nn::Tensor<S> to_tensor(const Matrix& m, bool requires_grad = false) {
  std::vector<S> v(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) v[static_cast<std::size_t>(r * m.cols() + c)] = static_cast<S>(m(r, c));
  }
  return nn::Tensor<S>::from_values({static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())},
                                    std::move(v), requires_grad);
}

template <typename S>
Matrix to_matrix(const nn::Tensor<S>& t) {
  if (t.rank() != 2) throw ShapeError("to_matrix expects a rank-2 tensor, got " + nn::shape_string(t.shape()));
  Matrix m(static_cast<Eigen::Index>(t.dim(0)), static_cast<Eigen::Index>(t.dim(1)));
  for (std::size_t i = 0; i < t.size(); ++i) m.data()[i] = static_cast<double>(t[i]);
  return m;
}

/// relu(op * h * w) for one graph. op: [N,N], h: [N,F_in], w: [F_in,F_out].
template <typename S>
nn::Tensor<S> gcn_layer_forward(const nn::Tensor<S>& op, const nn::Tensor<S>& h, const nn::Tensor<S>& w) {
  if (op.rank() != 2 || op.dim(0) != op.dim(1)) throw ShapeError("gcn layer: operator must be square");
  if (h.rank() != 2 || h.dim(0) != op.dim(0)) {
    throw ShapeError("gcn layer: node features " + nn::shape_string(h.shape()) + " do not match operator " +
                     nn::shape_string(op.shape()));
  }
  if (w.rank() != 2 || w.dim(0) != h.dim(1)) {
    throw ShapeError("gcn layer: weights " + nn::shape_string(w.shape()) + " do not match features " +
                     nn::shape_string(h.shape()));
  }
  return nn::relu(nn::matmul(op, nn::matmul(h, w)));
}

/// Graph convolution over a batch of graphs that share weights:
/// relu(op[b] * h[b] * W) with op: [B,N,N], h: [B,N,F_in].
template <typename S>
class GraphConv {
 public:
  GraphConv() = default;
  GraphConv(std::string name, std::size_t in, std::size_t out, Rng& rng)
      : weight_{name + ".weight", nn::glorot_uniform<S>({in, out}, in, out, rng)} {}

  nn::Tensor<S> forward(const nn::Tensor<S>& op, const nn::Tensor<S>& h) const {
    if (h.rank() != 3 || op.rank() != 3 || op.dim(0) != h.dim(0) || op.dim(2) != h.dim(1)) {
      throw ShapeError("graph conv: operator " + nn::shape_string(op.shape()) + " incompatible with features " +
                       nn::shape_string(h.shape()));
    }
    // (H W) first: F_out is much smaller than F_in for the first layer.
    return nn::relu(nn::batched_matmul(op, nn::linear(h, weight_.tensor, nn::Tensor<S>{})));
  }

  std::size_t in_features() const { return weight_.tensor.dim(0); }
  std::size_t out_features() const { return weight_.tensor.dim(1); }
  nn::Parameter<S>& weight() { return weight_; }
  void collect(std::vector<nn::Parameter<S>*>& out) { out.push_back(&weight_); }

 private:
  nn::Parameter<S> weight_;
};

}  // namespace bbnet
