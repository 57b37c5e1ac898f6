#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>

namespace hdp {

// Deterministic random source. All draws are derived from a mt19937_64
// stream through fixed transforms (no std::*_distribution, whose output
// is implementation-defined), so identical seeds give identical streams
// everywhere and the engine state round-trips through checkpoints.
class Rng {
 public:
  explicit Rng(uint64_t seed = 0) : gen_(seed) {}

  // uniform in [0, 1), 53-bit resolution
  double uniform() { return (gen_() >> 11) * (1.0 / 9007199254740992.0); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // inclusive bounds
  int uniform_int(int lo, int hi) {
    return lo + static_cast<int>(gen_() % static_cast<uint64_t>(hi - lo + 1));
  }

  // Box-Muller, one value per two uniforms (no cached spare state)
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  Eigen::VectorXd randn_vec(int n) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = normal();
    return v;
  }

  // filled row by row so a 1-row matrix draws the same sequence as a vector
  Eigen::MatrixXd randn_mat(int rows, int cols) {
    Eigen::MatrixXd m(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) m(r, c) = normal();
    return m;
  }

  Eigen::MatrixXd rand_uniform_mat(int rows, int cols, double lo, double hi) {
    Eigen::MatrixXd m(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) m(r, c) = uniform(lo, hi);
    return m;
  }

  std::string save_state() const {
    std::ostringstream os;
    os << gen_;
    return os.str();
  }

  void load_state(const std::string& s) {
    std::istringstream is(s);
    is >> gen_;
  }

  std::mt19937_64& engine() { return gen_; }

 private:
  std::mt19937_64 gen_;
};

}  // namespace hdp
