#pragma once

#include <Eigen/Dense>
#include <cassert>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace hdp::ad {

using Mat = Eigen::MatrixXd;

// Learnable tensor with gradient accumulator and Adam moments.
struct Param {
  Mat value;
  Mat grad;
  Mat m, v;  // Adam state
  long adam_step = 0;

  Param() = default;
  explicit Param(Mat init) : value(std::move(init)) {
    grad = Mat::Zero(value.rows(), value.cols());
    m = grad;
    v = grad;
  }
  void zero_grad() { grad.setZero(); }
};

// Tape-based reverse-mode autodiff over batched matrices (rows = batch).
// One Tape per loss evaluation; nodes are built forward and replayed in
// reverse by backward(). Parameter gradients accumulate into Param::grad
// unless the op was recorded with train_params = false (frozen evaluation,
// e.g. a critic used only to steer a policy).
class Tape {
 public:
  struct Var {
    int idx = -1;
  };

  struct Node {
    Mat value;
    Mat grad;  // allocated lazily on first accumulation
    bool needs_grad = false;
    std::function<void(Tape&, const Mat&)> back;  // receives this node's grad
  };

  void clear() { nodes_.clear(); }
  int size() const { return static_cast<int>(nodes_.size()); }

  const Mat& val(Var v) const { return nodes_[v.idx].value; }
  double scalar(Var v) const { return nodes_[v.idx].value(0, 0); }
  bool needs_grad(Var v) const { return nodes_[v.idx].needs_grad; }

  // gradient of the root w.r.t. a node (valid after backward)
  Mat grad_of(Var v) const {
    const Node& n = nodes_[v.idx];
    if (n.grad.size() == 0) return Mat::Zero(n.value.rows(), n.value.cols());
    return n.grad;
  }

  Var constant(Mat v) {
    nodes_.push_back(Node{std::move(v), {}, false, nullptr});
    return Var{size() - 1};
  }

  // Leaf backed by a Param; value is snapshotted.
  Var leaf(Param& p, bool train = true) {
    Node n;
    n.value = p.value;
    n.needs_grad = true;
    if (train) {
      Param* pp = &p;
      n.back = [pp](Tape&, const Mat& g) { pp->grad += g; };
    }
    nodes_.push_back(std::move(n));
    return Var{size() - 1};
  }

  // y = x * W^T + 1 b^T ;  x: B×in, W: out×in, b: out×1
  Var linear(Var x, Param& w, Param& b, bool train_params = true) {
    const Mat& xv = val(x);
    Mat y = (xv * w.value.transpose()).rowwise() + b.value.col(0).transpose();
    Node n;
    n.value = std::move(y);
    n.needs_grad = true;
    Param* pw = &w;
    Param* pb = &b;
    int xi = x.idx;
    bool xg = nodes_[xi].needs_grad;
    n.back = [pw, pb, xi, xg, train_params](Tape& t, const Mat& g) {
      if (train_params) {
        pw->grad.noalias() += g.transpose() * t.nodes_[xi].value;
        pb->grad.col(0) += g.colwise().sum().transpose();
      }
      if (xg) t.accumulate(xi, g * pw->value);
    };
    nodes_.push_back(std::move(n));
    return Var{size() - 1};
  }

  // rows of an embedding table selected per batch element
  Var gather_rows(Param& table, std::vector<int> idx, bool train_params = true) {
    Mat y(static_cast<int>(idx.size()), table.value.cols());
    for (size_t b = 0; b < idx.size(); ++b) y.row(b) = table.value.row(idx[b]);
    Node n;
    n.value = std::move(y);
    n.needs_grad = true;
    if (train_params) {
      Param* pt = &table;
      n.back = [pt, idx = std::move(idx)](Tape&, const Mat& g) {
        for (size_t b = 0; b < idx.size(); ++b) pt->grad.row(idx[b]) += g.row(b);
      };
    }
    nodes_.push_back(std::move(n));
    return Var{size() - 1};
  }

  Var tanh_(Var x) {
    Mat y = val(x).array().tanh();
    return unary(x, std::move(y), [](const Mat& yv, const Mat& g) {
      return (g.array() * (1.0 - yv.array().square())).matrix();
    });
  }

  Var relu(Var x) {
    Mat y = val(x).cwiseMax(0.0);
    return unary(x, std::move(y), [](const Mat& yv, const Mat& g) {
      return (g.array() * (yv.array() > 0.0).cast<double>()).matrix();
    });
  }

  // hard clamp; gradient passes only where the input is strictly interior
  Var clamp(Var x, double lo, double hi) {
    Mat xv = val(x);
    Mat y = xv.cwiseMax(lo).cwiseMin(hi);
    int xi = x.idx;
    Node n;
    n.value = std::move(y);
    n.needs_grad = nodes_[xi].needs_grad;
    if (n.needs_grad)
      n.back = [xi, xv = std::move(xv), lo, hi](Tape& t, const Mat& g) {
        Mat mask = ((xv.array() > lo) && (xv.array() < hi)).cast<double>();
        t.accumulate(xi, (g.array() * mask.array()).matrix());
      };
    nodes_.push_back(std::move(n));
    return Var{size() - 1};
  }

  Var add(Var a, Var b) {
    Mat y = val(a) + val(b);
    return binary(a, b, std::move(y),
                  [](const Mat& g) { return g; },
                  [](const Mat& g) { return g; });
  }

  Var sub(Var a, Var b) {
    Mat y = val(a) - val(b);
    return binary(a, b, std::move(y),
                  [](const Mat& g) { return g; },
                  [](const Mat& g) { return Mat(-g); });
  }

  Var add_const(Var x, const Mat& c) {
    Mat y = val(x) + c;
    return unary(x, std::move(y), [](const Mat&, const Mat& g) { return g; });
  }

  Var scale(Var x, double c) {
    Mat y = c * val(x);
    return unary(x, std::move(y),
                 [c](const Mat&, const Mat& g) { return Mat(c * g); });
  }

  Var mul_const(Var x, const Mat& c) {
    Mat y = val(x).cwiseProduct(c);
    Mat cc = c;
    return unary(x, std::move(y), [cc = std::move(cc)](const Mat&, const Mat& g) {
      return Mat(g.cwiseProduct(cc));
    });
  }

  Var concat_cols(const std::vector<Var>& parts) {
    assert(!parts.empty());
    int rows = static_cast<int>(val(parts[0]).rows());
    int cols = 0;
    for (Var p : parts) cols += static_cast<int>(val(p).cols());
    Mat y(rows, cols);
    std::vector<std::pair<int, int>> spans;  // (node idx, col offset)
    int off = 0;
    bool ng = false;
    for (Var p : parts) {
      int w = static_cast<int>(val(p).cols());
      y.middleCols(off, w) = val(p);
      spans.emplace_back(p.idx, off);
      ng = ng || nodes_[p.idx].needs_grad;
      off += w;
    }
    Node n;
    n.value = std::move(y);
    n.needs_grad = ng;
    if (ng)
      n.back = [spans = std::move(spans)](Tape& t, const Mat& g) {
        for (auto [idx, o] : spans) {
          int w = static_cast<int>(t.nodes_[idx].value.cols());
          if (t.nodes_[idx].needs_grad) t.accumulate(idx, g.middleCols(o, w));
        }
      };
    nodes_.push_back(std::move(n));
    return Var{size() - 1};
  }

  Var slice_cols(Var x, int c0, int w) {
    Mat y = val(x).middleCols(c0, w);
    int xi = x.idx;
    Node n;
    n.value = std::move(y);
    n.needs_grad = nodes_[xi].needs_grad;
    if (n.needs_grad)
      n.back = [xi, c0, w](Tape& t, const Mat& g) {
        Mat full = Mat::Zero(t.nodes_[xi].value.rows(), t.nodes_[xi].value.cols());
        full.middleCols(c0, w) = g;
        t.accumulate(xi, full);
      };
    nodes_.push_back(std::move(n));
    return Var{size() - 1};
  }

  Var min_elem(Var a, Var b) {
    Mat av = val(a), bv = val(b);
    Mat mask = (av.array() <= bv.array()).cast<double>();
    Mat y = av.cwiseMin(bv);
    Mat m2 = mask;
    return binary(a, b, std::move(y),
                  [mask = std::move(mask)](const Mat& g) {
                    return Mat(g.cwiseProduct(mask));
                  },
                  [m2 = std::move(m2)](const Mat& g) {
                    return Mat(g.cwiseProduct(Mat(Mat::Ones(m2.rows(), m2.cols()) - m2)));
                  });
  }

  Var square(Var x) {
    Mat xv = val(x);
    Mat y = xv.array().square();
    return unary_keep_input(x, std::move(y), [xv = std::move(xv)](const Mat& g) {
      return Mat(2.0 * g.cwiseProduct(xv));
    });
  }

  // mean over all elements -> 1×1
  Var mean_all(Var x) {
    const Mat& xv = val(x);
    double n = static_cast<double>(xv.size());
    Mat y(1, 1);
    y(0, 0) = xv.sum() / n;
    int xi = x.idx;
    int rows = static_cast<int>(xv.rows()), cols = static_cast<int>(xv.cols());
    Node nd;
    nd.value = std::move(y);
    nd.needs_grad = nodes_[xi].needs_grad;
    if (nd.needs_grad)
      nd.back = [xi, rows, cols, n](Tape& t, const Mat& g) {
        t.accumulate(xi, Mat::Constant(rows, cols, g(0, 0) / n));
      };
    nodes_.push_back(std::move(nd));
    return Var{size() - 1};
  }

  // mean over all elements of (pred - target)^2 -> 1×1
  Var mse(Var pred, const Mat& target) {
    Var d = add_const(pred, -target);
    return mean_all(square(d));
  }

  void backward(Var root) {
    Node& r = nodes_[root.idx];
    if (r.value.size() != 1)
      throw std::logic_error("backward: root must be scalar");
    accumulate(root.idx, Mat::Ones(1, 1));
    for (int i = root.idx; i >= 0; --i) {
      Node& n = nodes_[i];
      if (n.needs_grad && n.grad.size() != 0 && n.back) n.back(*this, n.grad);
    }
  }

  void accumulate(int idx, const Mat& g) {
    Node& n = nodes_[idx];
    if (n.grad.size() == 0)
      n.grad = g;
    else
      n.grad += g;
  }

  std::vector<Node> nodes_;

 private:
  template <class F>
  Var unary(Var x, Mat y, F dback) {
    int xi = x.idx;
    Node n;
    Mat yv = y;  // kept for activation backward
    n.value = std::move(y);
    n.needs_grad = nodes_[xi].needs_grad;
    if (n.needs_grad)
      n.back = [xi, yv = std::move(yv), dback](Tape& t, const Mat& g) {
        t.accumulate(xi, dback(yv, g));
      };
    nodes_.push_back(std::move(n));
    return Var{size() - 1};
  }

  template <class F>
  Var unary_keep_input(Var x, Mat y, F dback) {
    int xi = x.idx;
    Node n;
    n.value = std::move(y);
    n.needs_grad = nodes_[xi].needs_grad;
    if (n.needs_grad)
      n.back = [xi, dback](Tape& t, const Mat& g) { t.accumulate(xi, dback(g)); };
    nodes_.push_back(std::move(n));
    return Var{size() - 1};
  }

  template <class FA, class FB>
  Var binary(Var a, Var b, Mat y, FA da, FB db) {
    int ai = a.idx, bi = b.idx;
    Node n;
    n.value = std::move(y);
    n.needs_grad = nodes_[ai].needs_grad || nodes_[bi].needs_grad;
    if (n.needs_grad)
      n.back = [ai, bi, da, db](Tape& t, const Mat& g) {
        if (t.nodes_[ai].needs_grad) t.accumulate(ai, da(g));
        if (t.nodes_[bi].needs_grad) t.accumulate(bi, db(g));
      };
    nodes_.push_back(std::move(n));
    return Var{size() - 1};
  }
};

using Var = Tape::Var;

}  // namespace hdp::ad
