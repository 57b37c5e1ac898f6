#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "hdp/autodiff.hpp"
#include "hdp/rng.hpp"

namespace hdp {

// Learnable K×d_e embedding table. Rows double as the discrete action's
// embedding and the continuous policy's condition. The table learns only
// from Q gradients that arrive through gather_rows during the joint
// continuous/codebook update; the nearest-neighbour selection itself is a
// fixed (non-differentiable) choice.
struct Codebook {
  ad::Param entries;  // K × d_e
  int k_count = 0;
  int dim = 0;

  Codebook() = default;

  int k() const { return k_count; }
  int d_e() const { return dim; }

  Eigen::VectorXd row(int k) const { return entries.value.row(k).transpose(); }
};

inline Codebook init_codebook(int k, int d_e, Rng& rng) {
  if (k < 1 || d_e < 1) throw std::invalid_argument("init_codebook: invalid dimensions");
  double bound = 1.0 / std::sqrt(static_cast<double>(d_e));
  ad::Mat table = rng.rand_uniform_mat(k, d_e, -bound, bound);
  // re-draw any exact duplicate rows (vanishingly rare, but the contract
  // requires all-distinct entries)
  for (int a = 0; a < k; ++a) {
    bool dup = true;
    while (dup) {
      dup = false;
      for (int b = 0; b < a; ++b) {
        if ((table.row(a) - table.row(b)).cwiseAbs().maxCoeff() == 0.0) {
          table.row(a) = rng.rand_uniform_mat(1, d_e, -bound, bound);
          dup = true;
          break;
        }
      }
    }
  }
  Codebook cb;
  cb.entries = ad::Param(std::move(table));
  cb.k_count = k;
  cb.dim = d_e;
  return cb;
}

// Nearest codeword by squared Euclidean distance; ties break to the
// lowest index.
inline int quantize_index(const Codebook& cb, const Eigen::VectorXd& e) {
  if (e.size() != cb.dim) throw std::invalid_argument("quantize: dimension mismatch");
  Eigen::VectorXd d2 =
      (cb.entries.value.rowwise() - e.transpose()).rowwise().squaredNorm();
  int best = 0;
  for (int k = 1; k < cb.k_count; ++k)
    if (d2(k) < d2(best)) best = k;
  return best;
}

inline std::pair<int, Eigen::VectorXd> quantize(const Codebook& cb,
                                                const Eigen::VectorXd& e) {
  int k = quantize_index(cb, e);
  return {k, cb.row(k)};
}

inline std::vector<int> quantize_batch(const Codebook& cb, const ad::Mat& latents) {
  std::vector<int> idx(latents.rows());
  for (int r = 0; r < latents.rows(); ++r)
    idx[r] = quantize_index(cb, latents.row(r).transpose());
  return idx;
}

inline ad::Mat gather_raw(const Codebook& cb, const std::vector<int>& idx) {
  ad::Mat m(static_cast<int>(idx.size()), cb.dim);
  for (size_t r = 0; r < idx.size(); ++r) m.row(r) = cb.entries.value.row(idx[r]);
  return m;
}

}  // namespace hdp
