#pragma once

#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "sphereot/common.hpp"

namespace sphereot::ad {

/// Minimal reverse-mode tape over dense matrices. Supports exactly the
/// operations the weighting networks need; nodes are identified by index
/// and the creation order is a topological order, so the backward pass is
/// a reverse sweep.
class Tape {
 public:
  int var(Mat value) {
    nodes_.push_back(Node{std::move(value), Mat(), {}});
    return static_cast<int>(nodes_.size()) - 1;
  }

  const Mat& value(int id) const { return nodes_[id].value; }
  const Mat& grad(int id) const { return nodes_[id].grad; }

  /// C = A * B
  int matmul(int a, int b) {
    const Mat& va = value(a);
    const Mat& vb = value(b);
    if (va.cols() != vb.rows()) throw ShapeMismatch("matmul shape mismatch");
    int c = var(va * vb);
    nodes_[c].back = [this, a, b, c] {
      nodes_[a].grad += nodes_[c].grad * nodes_[b].value.transpose();
      nodes_[b].grad += nodes_[a].value.transpose() * nodes_[c].grad;
    };
    return c;
  }

  /// C = A * B^T
  int matmul_nt(int a, int b) {
    const Mat& va = value(a);
    const Mat& vb = value(b);
    if (va.cols() != vb.cols()) throw ShapeMismatch("matmul_nt shape mismatch");
    int c = var(va * vb.transpose());
    nodes_[c].back = [this, a, b, c] {
      nodes_[a].grad += nodes_[c].grad * nodes_[b].value;
      nodes_[b].grad += nodes_[c].grad.transpose() * nodes_[a].value;
    };
    return c;
  }

  /// C = A + row broadcast of the 1 x cols (or 1 x 1) node b.
  int add_broadcast(int a, int b) {
    const Mat& va = value(a);
    const Mat& vb = value(b);
    if (vb.rows() != 1 || (vb.cols() != va.cols() && vb.cols() != 1))
      throw ShapeMismatch("broadcast bias shape mismatch");
    Mat out = va;
    if (vb.cols() == 1)
      out.array() += vb(0, 0);
    else
      out.rowwise() += vb.row(0);
    int c = var(std::move(out));
    nodes_[c].back = [this, a, b, c] {
      nodes_[a].grad += nodes_[c].grad;
      if (nodes_[b].value.cols() == 1)
        nodes_[b].grad(0, 0) += nodes_[c].grad.sum();
      else
        nodes_[b].grad.row(0) += nodes_[c].grad.colwise().sum();
    };
    return c;
  }

  int scale(int a, double s) {
    int c = var(value(a) * s);
    nodes_[c].back = [this, a, c, s] { nodes_[a].grad += s * nodes_[c].grad; };
    return c;
  }

  int sigmoid(int a) {
    Mat out = value(a).unaryExpr(
        [](double x) { return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                                       : std::exp(x) / (1.0 + std::exp(x)); });
    int c = var(std::move(out));
    nodes_[c].back = [this, a, c] {
      const Mat& s = nodes_[c].value;
      nodes_[a].grad.array() +=
          nodes_[c].grad.array() * s.array() * (1.0 - s.array());
    };
    return c;
  }

  /// Row-wise softmax with max shift.
  int softmax_rows(int a) {
    Mat out = value(a);
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
      double mx = out.row(i).maxCoeff();
      out.row(i) = (out.row(i).array() - mx).exp();
      out.row(i) /= out.row(i).sum();
    }
    int c = var(std::move(out));
    nodes_[c].back = [this, a, c] {
      const Mat& s = nodes_[c].value;
      const Mat& g = nodes_[c].grad;
      for (Eigen::Index i = 0; i < s.rows(); ++i) {
        double inner = g.row(i).dot(s.row(i));
        nodes_[a].grad.row(i).array() +=
            s.row(i).array() * (g.row(i).array() - inner);
      }
    };
    return c;
  }

  /// Softmax over a column vector node.
  int softmax_vec(int a) {
    const Mat& va = value(a);
    if (va.cols() != 1) throw ShapeMismatch("softmax_vec expects a column");
    Mat out = va;
    double mx = out.col(0).maxCoeff();
    out.col(0) = (out.col(0).array() - mx).exp();
    out.col(0) /= out.col(0).sum();
    int c = var(std::move(out));
    nodes_[c].back = [this, a, c] {
      const Mat& s = nodes_[c].value;
      const Mat& g = nodes_[c].grad;
      double inner = g.col(0).dot(s.col(0));
      nodes_[a].grad.col(0).array() +=
          s.col(0).array() * (g.col(0).array() - inner);
    };
    return c;
  }

  /// Column means over rows; result is cols x 1.
  int mean_rows(int a) {
    const Mat& va = value(a);
    Mat out = va.colwise().mean().transpose();
    int c = var(std::move(out));
    double inv_r = 1.0 / static_cast<double>(va.rows());
    nodes_[c].back = [this, a, c, inv_r] {
      nodes_[a].grad.array().rowwise() +=
          inv_r * nodes_[c].grad.col(0).transpose().array();
    };
    return c;
  }

  /// Scalar node: sum of the elementwise product (same shapes).
  int dot(int a, int b) {
    const Mat& va = value(a);
    const Mat& vb = value(b);
    if (va.rows() != vb.rows() || va.cols() != vb.cols())
      throw ShapeMismatch("dot shape mismatch");
    Mat out(1, 1);
    out(0, 0) = (va.array() * vb.array()).sum();
    int c = var(std::move(out));
    nodes_[c].back = [this, a, b, c] {
      double g = nodes_[c].grad(0, 0);
      nodes_[a].grad += g * nodes_[b].value;
      nodes_[b].grad += g * nodes_[a].value;
    };
    return c;
  }

  /// Seed the scalar loss node and run the reverse sweep.
  void backward(int loss) {
    const Mat& lv = value(loss);
    if (lv.rows() != 1 || lv.cols() != 1)
      throw ShapeMismatch("backward expects a scalar loss node");
    for (auto& n : nodes_) n.grad = Mat::Zero(n.value.rows(), n.value.cols());
    nodes_[loss].grad(0, 0) = 1.0;
    for (int id = loss; id >= 0; --id)
      if (nodes_[id].back) nodes_[id].back();
  }

 private:
  struct Node {
    Mat value;
    Mat grad;
    std::function<void()> back;
  };
  std::vector<Node> nodes_;
};

}  // namespace sphereot::ad
