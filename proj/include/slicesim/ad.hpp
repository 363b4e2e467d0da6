#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "slicesim/types.hpp"

// Reverse-mode automatic differentiation over dense Eigen matrices. A Tape
// records one forward computation as an append-only node list; backward()
// walks it in reverse, accumulating gradients into every node and into any
// bound Param leaves. Graphs here are small (a few hundred nodes per policy
// evaluation), so the tape is rebuilt per sample.

namespace slicesim::ad {

using Mat = Eigen::MatrixXd;

// A trainable tensor with its gradient accumulator and Adam moments. Owned by
// model structs; bound into tapes by Tape::param().
struct Param {
  std::string name;
  Mat value;
  Mat grad;
  Mat m, v;  // optimizer moments

  Param() = default;
  Param(std::string n, Mat val)
      : name(std::move(n)), value(std::move(val)) {
    grad = Mat::Zero(value.rows(), value.cols());
    m = Mat::Zero(value.rows(), value.cols());
    v = Mat::Zero(value.rows(), value.cols());
  }
  void zero_grad() { grad.setZero(); }
};

class Tape;

class Var {
 public:
  Var() = default;
  Var(Tape* tape, int index) : tape_(tape), index_(index) {}

  const Mat& val() const;
  double scalar() const;  // value of a 1x1 node
  int rows() const;
  int cols() const;
  Tape* tape() const { return tape_; }
  int index() const { return index_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  int index_ = -1;
};

class Tape {
 public:
  Var constant(Mat value);
  Var scalar(double v);
  Var param(Param& p);

  // Seeds d(loss)/d(loss) = seed and propagates; loss must be 1x1. Param
  // gradients accumulate (callers zero them between minibatches).
  void backward(const Var& loss, double seed = 1.0);

  size_t size() const { return nodes_.size(); }

  // -- internal node access (used by the op implementations) --
  struct Node {
    Mat value;
    Mat grad;
    std::function<void(Tape&)> backprop;
    Param* bound = nullptr;
  };
  Node& node(int i) { return nodes_[i]; }
  const Node& node(int i) const { return nodes_[i]; }
  Var emplace(Mat value, std::function<void(Tape&)> backprop);

 private:
  std::vector<Node> nodes_;
};

// ---- operations -----------------------------------------------------------

Var add(Var a, Var b);
Var add(Var a, double b);
Var sub(Var a, Var b);
Var neg(Var a);
Var scale(Var a, double k);
Var cmul(Var a, Var b);                    // elementwise product
Var cmul(Var a, const Mat& mask);          // elementwise product by a constant
Var matmul(Var a, Var b);
Var transpose(Var a);
Var hcat(Var a, Var b);
Var vcat(Var a, Var b);
Var gather_rows(Var a, std::vector<int> rows);
Var block_cols(Var a, int start, int len);
Var reshape(Var a, int rows, int cols);    // column-major relabeling, size-preserving
Var add_rowvec(Var a, Var rv);             // broadcast a 1 x c row over all rows
Var mul_rowvec(Var a, Var rv);             // scale each column by a 1 x c row
Var outer_sum(Var col_a, Var col_b);       // a * 1^T + 1 * b^T, inputs n x 1
Var sigmoid(Var a);
Var tanh_(Var a);
Var relu(Var a);
Var leaky_relu(Var a, double slope = 0.2);
Var softplus(Var a);
Var exp_(Var a);
Var log_(Var a);
Var square(Var a);
Var clamp(Var a, double lo, double hi);    // gradient is 1 strictly inside [lo, hi]
Var min_(Var a, Var b);                    // elementwise; ties route gradient to a
Var sum(Var a);        // 1x1
Var mean(Var a);       // 1x1
Var row_sums(Var a);   // n x m -> n x 1
Var col_means(Var a);  // n x m -> 1 x m
Var dot(Var a, Var b);

// Row-wise softmax restricted to entries where mask != 0; masked-out entries
// get probability exactly 0. Rows whose mask is all-zero come back all-zero.
Var row_softmax_masked(Var a, const Mat& mask);

}  // namespace slicesim::ad
