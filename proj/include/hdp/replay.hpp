#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <unordered_set>
#include <vector>

#include "hdp/autodiff.hpp"
#include "hdp/rng.hpp"

namespace hdp {

// One replay record: latent e is the discrete policy's pre-quantization,
// post-clamp output; k is stored for diagnostics and the no-codebook head.
struct Transition {
  Eigen::VectorXd s;
  Eigen::VectorXd e;
  int k = 0;
  Eigen::VectorXd a_c;
  double r = 0.0;
  Eigen::VectorXd s_next;
  bool done = false;
};

// Column-batched minibatch view.
struct Batch {
  ad::Mat s, e, a_c, s_next;
  Eigen::VectorXd r, done;
  std::vector<int> k;

  int size() const { return static_cast<int>(r.size()); }
};

class ReplayBuffer {
 public:
  explicit ReplayBuffer(size_t capacity) : capacity_(capacity) {
    if (capacity < 1) throw std::invalid_argument("replay capacity must be >= 1");
  }

  size_t size() const { return data_.size(); }
  size_t capacity() const { return capacity_; }

  void push(Transition t) {
    if (data_.size() < capacity_) {
      data_.push_back(std::move(t));
    } else {
      data_[next_] = std::move(t);
      next_ = (next_ + 1) % capacity_;
    }
  }

  const Transition& at(size_t i) const { return data_[i]; }

  // uniform without replacement within the batch
  Batch sample(int batch_size, Rng& rng) const {
    if (static_cast<size_t>(batch_size) > data_.size())
      throw std::runtime_error("replay sample: insufficient buffer");
    std::vector<int> idx;
    idx.reserve(batch_size);
    std::unordered_set<int> seen;
    while (static_cast<int>(idx.size()) < batch_size) {
      int i = rng.uniform_int(0, static_cast<int>(data_.size()) - 1);
      if (seen.insert(i).second) idx.push_back(i);
    }
    return gather(idx);
  }

  Batch gather(const std::vector<int>& idx) const {
    Batch b;
    int n = static_cast<int>(idx.size());
    const Transition& t0 = data_[idx[0]];
    b.s.resize(n, t0.s.size());
    b.e.resize(n, t0.e.size());
    b.a_c.resize(n, t0.a_c.size());
    b.s_next.resize(n, t0.s_next.size());
    b.r.resize(n);
    b.done.resize(n);
    b.k.resize(n);
    for (int r = 0; r < n; ++r) {
      const Transition& t = data_[idx[r]];
      b.s.row(r) = t.s.transpose();
      b.e.row(r) = t.e.transpose();
      b.a_c.row(r) = t.a_c.transpose();
      b.s_next.row(r) = t.s_next.transpose();
      b.r(r) = t.r;
      b.done(r) = t.done ? 1.0 : 0.0;
      b.k[r] = t.k;
    }
    return b;
  }

 private:
  size_t capacity_;
  size_t next_ = 0;
  std::vector<Transition> data_;
};

}  // namespace hdp
