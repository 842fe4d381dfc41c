#include "bbnet/graph.hpp"

#include <cmath>

namespace bbnet {

NormalizedOperator renormalize(const AdjacencyMatrix& adj, DegreeMode mode) {
  const Matrix& a = adj.weights;
  if (a.rows() != a.cols()) throw ShapeError("adjacency must be square");
  if (!a.allFinite()) throw InputError("adjacency contains non-finite entries");
  if (a != a.transpose()) throw InputError("adjacency must be symmetric");

  const Eigen::Index n = a.rows();
  const Matrix a_hat = a + Matrix::Identity(n, n);
  Vector inv_sqrt_degree(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double degree = mode == DegreeMode::Absolute ? a_hat.row(k).cwiseAbs().sum() : a_hat.row(k).sum();
    if (!(degree > 0.0)) {
      throw DegenerateGraphError("node " + std::to_string(k) + " has non-positive degree " + std::to_string(degree));
    }
    inv_sqrt_degree(k) = 1.0 / std::sqrt(degree);
  }
  // a_kl * (d_k * d_l): the product of the two scalings commutes exactly, so the
  // result is symmetric bit-for-bit when a is.
  NormalizedOperator op;
  op.matrix.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    for (Eigen::Index l = 0; l < n; ++l) {
      op.matrix(k, l) = a_hat(k, l) * (inv_sqrt_degree(k) * inv_sqrt_degree(l));
    }
  }
  return op;
}

}  // namespace bbnet
