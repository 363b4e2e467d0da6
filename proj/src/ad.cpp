#include "slicesim/ad.hpp"

#include <cmath>

namespace slicesim::ad {

namespace {

void check_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw InputError(std::string(op) + ": shape mismatch (" + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                     std::to_string(b.cols()) + ")");
  }
  if (a.tape() != b.tape()) throw InputError(std::string(op) + ": operands on different tapes");
}

Tape& tape_of(const Var& v, const char* op) {
  if (!v.valid()) throw InputError(std::string(op) + ": invalid operand");
  return *v.tape();
}

}  // namespace

const Mat& Var::val() const { return tape_->node(index_).value; }

double Var::scalar() const {
  const Mat& m = val();
  if (m.size() != 1) throw InputError("Var::scalar: node is not 1x1");
  return m(0, 0);
}

int Var::rows() const { return static_cast<int>(val().rows()); }
int Var::cols() const { return static_cast<int>(val().cols()); }

Var Tape::emplace(Mat value, std::function<void(Tape&)> backprop) {
  nodes_.push_back(Node{std::move(value), Mat(), std::move(backprop), nullptr});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::constant(Mat value) { return emplace(std::move(value), nullptr); }

Var Tape::scalar(double v) {
  Mat m(1, 1);
  m(0, 0) = v;
  return constant(std::move(m));
}

Var Tape::param(Param& p) {
  Var v = emplace(p.value, nullptr);
  nodes_[v.index()].bound = &p;
  return v;
}

void Tape::backward(const Var& loss, double seed) {
  if (loss.tape() != this) throw InputError("Tape::backward: loss from a different tape");
  if (loss.val().size() != 1) throw InputError("Tape::backward: loss must be 1x1");

  for (auto& n : nodes_) {
    n.grad.setZero(n.value.rows(), n.value.cols());
  }
  nodes_[loss.index()].grad(0, 0) = seed;

  for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
    if (nodes_[i].backprop) nodes_[i].backprop(*this);
  }
  for (auto& n : nodes_) {
    if (n.bound) n.bound->grad += n.grad;
  }
}

// ---- ops --------------------------------------------------------------------

Var add(Var a, Var b) {
  check_same_shape(a, b, "add");
  Tape& t = tape_of(a, "add");
  const int ia = a.index(), ib = b.index();
  Var out = t.emplace(a.val() + b.val(), nullptr);
  const int io = out.index();
  t.node(io).backprop = [ia, ib, io](Tape& tp) {
    tp.node(ia).grad += tp.node(io).grad;
    tp.node(ib).grad += tp.node(io).grad;
  };
  return out;
}

Var add(Var a, double b) {
  Tape& t = tape_of(a, "add");
  const int ia = a.index();
  Var out = t.emplace(a.val().array() + b, nullptr);
  const int io = out.index();
  t.node(io).backprop = [ia, io](Tape& tp) { tp.node(ia).grad += tp.node(io).grad; };
  return out;
}

Var sub(Var a, Var b) {
  check_same_shape(a, b, "sub");
  Tape& t = tape_of(a, "sub");
  const int ia = a.index(), ib = b.index();
  Var out = t.emplace(a.val() - b.val(), nullptr);
  const int io = out.index();
  t.node(io).backprop = [ia, ib, io](Tape& tp) {
    tp.node(ia).grad += tp.node(io).grad;
    tp.node(ib).grad -= tp.node(io).grad;
  };
  return out;
}

Var neg(Var a) { return scale(a, -1.0); }

Var scale(Var a, double k) {
  Tape& t = tape_of(a, "scale");
  const int ia = a.index();
  Var out = t.emplace(a.val() * k, nullptr);
  const int io = out.index();
  t.node(io).backprop = [ia, io, k](Tape& tp) { tp.node(ia).grad += k * tp.node(io).grad; };
  return out;
}

Var cmul(Var a, Var b) {
  check_same_shape(a, b, "cmul");
  Tape& t = tape_of(a, "cmul");
  const int ia = a.index(), ib = b.index();
  Var out = t.emplace(a.val().cwiseProduct(b.val()), nullptr);
  const int io = out.index();
  t.node(io).backprop = [ia, ib, io](Tape& tp) {
    tp.node(ia).grad += tp.node(io).grad.cwiseProduct(tp.node(ib).value);
    tp.node(ib).grad += tp.node(io).grad.cwiseProduct(tp.node(ia).value);
  };
  return out;
}

Var cmul(Var a, const Mat& mask) {
  Tape& t = tape_of(a, "cmul");
  if (a.rows() != mask.rows() || a.cols() != mask.cols()) {
    throw InputError("cmul(mask): shape mismatch");
  }
  const int ia = a.index();
  Var out = t.emplace(a.val().cwiseProduct(mask), nullptr);
  const int io = out.index();
  Mat mask_copy = mask;
  t.node(io).backprop = [ia, io, mask_copy](Tape& tp) {
    tp.node(ia).grad += tp.node(io).grad.cwiseProduct(mask_copy);
  };
  return out;
}

Var matmul(Var a, Var b) {
  Tape& t = tape_of(a, "matmul");
  if (a.cols() != b.rows()) {
    throw InputError("matmul: inner dimensions disagree (" + std::to_string(a.cols()) + " vs " +
                     std::to_string(b.rows()) + ")");
  }
  const int ia = a.index(), ib = b.index();
  Var out = t.emplace(a.val() * b.val(), nullptr);
  const int io = out.index();
  t.node(io).backprop = [ia, ib, io](Tape& tp) {
    tp.node(ia).grad += tp.node(io).grad * tp.node(ib).value.transpose();
    tp.node(ib).grad += tp.node(ia).value.transpose() * tp.node(io).grad;
  };
  return out;
}

Var transpose(Var a) {
  Tape& t = tape_of(a, "transpose");
  const int ia = a.index();
  Var out = t.emplace(a.val().transpose(), nullptr);
  const int io = out.index();
  t.node(io).backprop = [ia, io](Tape& tp) {
    tp.node(ia).grad += tp.node(io).grad.transpose();
  };
  return out;
}

Var hcat(Var a, Var b) {
  Tape& t = tape_of(a, "hcat");
  if (a.rows() != b.rows()) throw InputError("hcat: row counts disagree");
  Mat v(a.rows(), a.cols() + b.cols());
  v << a.val(), b.val();
  const int ia = a.index(), ib = b.index(), ca = a.cols(), cb = b.cols();
  Var out = t.emplace(std::move(v), nullptr);
  const int io = out.index();
  t.node(io).backprop = [ia, ib, io, ca, cb](Tape& tp) {
    tp.node(ia).grad += tp.node(io).grad.leftCols(ca);
    tp.node(ib).grad += tp.node(io).grad.rightCols(cb);
  };
  return out;
}

Var vcat(Var a, Var b) {
  Tape& t = tape_of(a, "vcat");
  if (a.cols() != b.cols()) throw InputError("vcat: column counts disagree");
  Mat v(a.rows() + b.rows(), a.cols());
  v << a.val(), b.val();
  const int ia = a.index(), ib = b.index(), ra = a.rows(), rb = b.rows();
  Var out = t.emplace(std::move(v), nullptr);
  const int io = out.index();
  t.node(io).backprop = [ia, ib, io, ra, rb](Tape& tp) {
    tp.node(ia).grad += tp.node(io).grad.topRows(ra);
    tp.node(ib).grad += tp.node(io).grad.bottomRows(rb);
  };
  return out;
}

Var gather_rows(Var a, std::vector<int> rows) {
  Tape& t = tape_of(a, "gather_rows");
  Mat v(static_cast<int>(rows.size()), a.cols());
  for (size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] < 0 || rows[k] >= a.rows()) throw InputError("gather_rows: row out of range");
    v.row(static_cast<int>(k)) = a.val().row(rows[k]);
  }
  const int ia = a.index();
  Var out = t.emplace(std::move(v), nullptr);
  const int io = out.index();
  t.node(io).backprop = [ia, io, rows](Tape& tp) {
    for (size_t k = 0; k < rows.size(); ++k) {
      tp.node(ia).grad.row(rows[k]) += tp.node(io).grad.row(static_cast<int>(k));
    }
  };
  return out;
}

Var block_cols(Var a, int start, int len) {
  Tape& t = tape_of(a, "block_cols");
  if (start < 0 || len < 0 || start + len > a.cols()) throw InputError("block_cols: out of range");
  const int ia = a.index();
  Var out = t.emplace(a.val().middleCols(start, len), nullptr);
  const int io = out.index();
  t.node(io).backprop = [ia, io, start, len](Tape& tp) {
    tp.node(ia).grad.middleCols(start, len) += tp.node(io).grad;
  };
  return out;
}

Var reshape(Var a, int rows, int cols) {
  Tape& t = tape_of(a, "reshape");
  if (rows * cols != a.rows() * a.cols()) throw InputError("reshape: element count changes");
  Mat v = Eigen::Map<const Mat>(a.val().data(), rows, cols);
  const int ia = a.index();
  Var out = t.emplace(std::move(v), nullptr);
  const int io = out.index();
  t.node(io).backprop = [ia, io](Tape& tp) {
    const Mat& g = tp.node(io).grad;
    Mat& ga = tp.node(ia).grad;
    ga += Eigen::Map<const Mat>(g.data(), ga.rows(), ga.cols());
  };
  return out;
}

Var add_rowvec(Var a, Var rv) {
  Tape& t = tape_of(a, "add_rowvec");
  if (rv.rows() != 1 || rv.cols() != a.cols()) throw InputError("add_rowvec: need 1 x cols(a)");
  const int ia = a.index(), ir = rv.index();
  Var out = t.emplace(a.val().rowwise() + rv.val().row(0), nullptr);
  const int io = out.index();
  t.node(io).backprop = [ia, ir, io](Tape& tp) {
    tp.node(ia).grad += tp.node(io).grad;
    tp.node(ir).grad += tp.node(io).grad.colwise().sum();
  };
  return out;
}

Var mul_rowvec(Var a, Var rv) {
  Tape& t = tape_of(a, "mul_rowvec");
  if (rv.rows() != 1 || rv.cols() != a.cols()) throw InputError("mul_rowvec: need 1 x cols(a)");
  const int ia = a.index(), ir = rv.index();
  Mat v = a.val().array().rowwise() * rv.val().row(0).array();
  Var out = t.emplace(std::move(v), nullptr);
  const int io = out.index();
  t.node(io).backprop = [ia, ir, io](Tape& tp) {
    const Mat& g = tp.node(io).grad;
    tp.node(ia).grad += (g.array().rowwise() * tp.node(ir).value.row(0).array()).matrix();
    tp.node(ir).grad += g.cwiseProduct(tp.node(ia).value).colwise().sum();
  };
  return out;
}

Var clamp(Var a, double lo, double hi) {
  Tape& t = tape_of(a, "clamp");
  const int ia = a.index();
  Var out = t.emplace(a.val().cwiseMax(lo).cwiseMin(hi), nullptr);
  const int io = out.index();
  t.node(io).backprop = [ia, io, lo, hi](Tape& tp) {
    const Mat& x = tp.node(ia).value;
    const Mat pass = ((x.array() > lo) && (x.array() < hi)).cast<double>().matrix();
    tp.node(ia).grad += tp.node(io).grad.cwiseProduct(pass);
  };
  return out;
}

Var min_(Var a, Var b) {
  check_same_shape(a, b, "min");
  Tape& t = tape_of(a, "min");
  const int ia = a.index(), ib = b.index();
  Var out = t.emplace(a.val().cwiseMin(b.val()), nullptr);
  const int io = out.index();
  t.node(io).backprop = [ia, ib, io](Tape& tp) {
    const Mat& av = tp.node(ia).value;
    const Mat& bv = tp.node(ib).value;
    const Mat pick_a = (av.array() <= bv.array()).cast<double>().matrix();
    tp.node(ia).grad += tp.node(io).grad.cwiseProduct(pick_a);
    tp.node(ib).grad +=
        tp.node(io).grad.cwiseProduct((1.0 - pick_a.array()).matrix());
  };
  return out;
}

Var outer_sum(Var col_a, Var col_b) {
  Tape& t = tape_of(col_a, "outer_sum");
  if (col_a.cols() != 1 || col_b.cols() != 1 || col_a.rows() != col_b.rows()) {
    throw InputError("outer_sum: expects two equal-length column vectors");
  }
  const int n = col_a.rows();
  Mat v = col_a.val().replicate(1, n) + col_b.val().transpose().replicate(n, 1);
  const int ia = col_a.index(), ib = col_b.index();
  Var out = t.emplace(std::move(v), nullptr);
  const int io = out.index();
  t.node(io).backprop = [ia, ib, io](Tape& tp) {
    tp.node(ia).grad += tp.node(io).grad.rowwise().sum();
    tp.node(ib).grad += tp.node(io).grad.colwise().sum().transpose();
  };
  return out;
}

namespace {

template <typename Fwd, typename Bwd>
Var unary_op(Var a, const char* name, Fwd fwd, Bwd local_grad) {
  Tape& t = tape_of(a, name);
  const int ia = a.index();
  Var out = t.emplace(fwd(a.val()), nullptr);
  const int io = out.index();
  t.node(io).backprop = [ia, io, local_grad](Tape& tp) {
    tp.node(ia).grad +=
        tp.node(io).grad.cwiseProduct(local_grad(tp.node(ia).value, tp.node(io).value));
  };
  return out;
}

}  // namespace

Var sigmoid(Var a) {
  return unary_op(
      a, "sigmoid",
      [](const Mat& x) -> Mat { return (1.0 / (1.0 + (-x.array()).exp())).matrix(); },
      [](const Mat&, const Mat& y) -> Mat { return (y.array() * (1.0 - y.array())).matrix(); });
}

Var tanh_(Var a) {
  return unary_op(
      a, "tanh", [](const Mat& x) -> Mat { return x.array().tanh().matrix(); },
      [](const Mat&, const Mat& y) -> Mat { return (1.0 - y.array().square()).matrix(); });
}

Var relu(Var a) {
  return unary_op(
      a, "relu", [](const Mat& x) -> Mat { return x.cwiseMax(0.0); },
      [](const Mat& x, const Mat&) -> Mat {
        return (x.array() > 0.0).cast<double>().matrix();
      });
}

Var leaky_relu(Var a, double slope) {
  return unary_op(
      a, "leaky_relu",
      [slope](const Mat& x) -> Mat {
        return x.array().max(x.array() * slope).matrix();
      },
      [slope](const Mat& x, const Mat&) -> Mat {
        return (x.array() > 0.0).select(Mat::Ones(x.rows(), x.cols()),
                                        Mat::Constant(x.rows(), x.cols(), slope));
      });
}

Var softplus(Var a) {
  return unary_op(
      a, "softplus",
      [](const Mat& x) -> Mat {
        // max(x,0) + log1p(exp(-|x|)) is stable on both tails
        return (x.array().max(0.0) + (-x.array().abs()).exp().log1p()).matrix();
      },
      [](const Mat& x, const Mat&) -> Mat {
        return (1.0 / (1.0 + (-x.array()).exp())).matrix();
      });
}

Var exp_(Var a) {
  return unary_op(
      a, "exp", [](const Mat& x) -> Mat { return x.array().exp().matrix(); },
      [](const Mat&, const Mat& y) -> Mat { return y; });
}

Var log_(Var a) {
  return unary_op(
      a, "log", [](const Mat& x) -> Mat { return x.array().log().matrix(); },
      [](const Mat& x, const Mat&) -> Mat { return x.array().inverse().matrix(); });
}

Var square(Var a) {
  return unary_op(
      a, "square", [](const Mat& x) -> Mat { return x.array().square().matrix(); },
      [](const Mat& x, const Mat&) -> Mat { return 2.0 * x; });
}

Var sum(Var a) {
  Tape& t = tape_of(a, "sum");
  const int ia = a.index();
  Mat v(1, 1);
  v(0, 0) = a.val().sum();
  Var out = t.emplace(std::move(v), nullptr);
  const int io = out.index();
  t.node(io).backprop = [ia, io](Tape& tp) {
    tp.node(ia).grad.array() += tp.node(io).grad(0, 0);
  };
  return out;
}

Var mean(Var a) {
  Tape& t = tape_of(a, "mean");
  const int ia = a.index();
  const double n = static_cast<double>(a.val().size());
  Mat v(1, 1);
  v(0, 0) = a.val().mean();
  Var out = t.emplace(std::move(v), nullptr);
  const int io = out.index();
  t.node(io).backprop = [ia, io, n](Tape& tp) {
    tp.node(ia).grad.array() += tp.node(io).grad(0, 0) / n;
  };
  return out;
}

Var row_sums(Var a) {
  Tape& t = tape_of(a, "row_sums");
  const int ia = a.index(), m = a.cols();
  Var out = t.emplace(a.val().rowwise().sum(), nullptr);
  const int io = out.index();
  t.node(io).backprop = [ia, io, m](Tape& tp) {
    tp.node(ia).grad += tp.node(io).grad.replicate(1, m);
  };
  return out;
}

Var col_means(Var a) {
  Tape& t = tape_of(a, "col_means");
  const int ia = a.index(), n = a.rows();
  Var out = t.emplace(a.val().colwise().mean(), nullptr);
  const int io = out.index();
  t.node(io).backprop = [ia, io, n](Tape& tp) {
    tp.node(ia).grad += tp.node(io).grad.replicate(n, 1) / static_cast<double>(n);
  };
  return out;
}

Var dot(Var a, Var b) { return sum(cmul(a, b)); }

Var row_softmax_masked(Var a, const Mat& mask) {
  Tape& t = tape_of(a, "row_softmax_masked");
  if (mask.rows() != a.rows() || mask.cols() != a.cols()) {
    throw InputError("row_softmax_masked: mask shape mismatch");
  }
  const Mat& x = a.val();
  Mat y = Mat::Zero(x.rows(), x.cols());
  for (int r = 0; r < x.rows(); ++r) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < x.cols(); ++c) {
      if (mask(r, c) != 0.0) mx = std::max(mx, x(r, c));
    }
    if (!std::isfinite(mx)) continue;  // fully masked row stays zero
    double z = 0;
    for (int c = 0; c < x.cols(); ++c) {
      if (mask(r, c) != 0.0) {
        y(r, c) = std::exp(x(r, c) - mx);
        z += y(r, c);
      }
    }
    if (z > 0) y.row(r) /= z;
  }
  const int ia = a.index();
  Var out = t.emplace(std::move(y), nullptr);
  const int io = out.index();
  t.node(io).backprop = [ia, io](Tape& tp) {
    const Mat& yv = tp.node(io).value;
    const Mat& g = tp.node(io).grad;
    for (int r = 0; r < yv.rows(); ++r) {
      const double gy = g.row(r).dot(yv.row(r));
      tp.node(ia).grad.row(r) +=
          (yv.row(r).array() * (g.row(r).array() - gy)).matrix();
    }
  };
  return out;
}

}  // namespace slicesim::ad
