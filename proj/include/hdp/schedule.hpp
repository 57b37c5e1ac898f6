#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>

namespace hdp {

enum class ScheduleKind { kLinear, kVariancePreserving };

inline std::string to_string(ScheduleKind k) {
  return k == ScheduleKind::kLinear ? "linear" : "variance_preserving";
}
inline ScheduleKind schedule_kind_from_string(const std::string& s) {
  if (s == "linear") return ScheduleKind::kLinear;
  if (s == "variance_preserving") return ScheduleKind::kVariancePreserving;
  throw std::invalid_argument("unknown schedule kind: " + s);
}

// Noise schedule tables. Indexing is 1-based in formulas; beta(i) etc.
// take i in [1, N].
struct NoiseSchedule {
  Eigen::VectorXd betas;
  Eigen::VectorXd alphas;
  Eigen::VectorXd alpha_bars;

  int n() const { return static_cast<int>(betas.size()); }
  double beta(int i) const { return betas(i - 1); }
  double alpha(int i) const { return alphas(i - 1); }
  double alpha_bar(int i) const { return alpha_bars(i - 1); }

  static NoiseSchedule from_betas(const Eigen::VectorXd& betas) {
    NoiseSchedule s;
    s.betas = betas;
    s.alphas = 1.0 - betas.array();
    s.alpha_bars.resize(betas.size());
    double prod = 1.0;
    for (int i = 0; i < betas.size(); ++i) {
      prod *= s.alphas(i);
      s.alpha_bars(i) = prod;
    }
    return s;
  }
};

// Run-level schedule settings; N lives in TrainConfig.
struct ScheduleConfig {
  ScheduleKind kind = ScheduleKind::kVariancePreserving;
  double beta_start = 0.1;
  double beta_end = 10.0;  // VP endpoints act as integrated noise rates
};

// Builds a schedule of N steps.
//   linear:               beta_i interpolates [beta_start, beta_end]
//   variance_preserving:  beta_i = 1 - exp(-b0/N - (b1-b0)(2i-1)/(2N^2)),
//                         endpoints act as integrated noise rates
inline NoiseSchedule make_schedule(int n, double beta_start, double beta_end,
                                   ScheduleKind kind) {
  if (n < 1) throw std::invalid_argument("make_schedule: N must be >= 1");
  if (!(beta_start > 0.0) || !(beta_start <= beta_end))
    throw std::invalid_argument("make_schedule: need 0 < beta_start <= beta_end");
  Eigen::VectorXd betas(n);
  if (kind == ScheduleKind::kLinear) {
    if (!(beta_end < 1.0))
      throw std::invalid_argument("make_schedule: linear endpoints must lie in (0,1)");
    for (int i = 1; i <= n; ++i) {
      double f = n == 1 ? 0.0 : static_cast<double>(i - 1) / (n - 1);
      betas(i - 1) = beta_start + f * (beta_end - beta_start);
    }
  } else {
    double nn = static_cast<double>(n);
    for (int i = 1; i <= n; ++i) {
      double expo = -beta_start / nn -
                    (beta_end - beta_start) * (2.0 * i - 1.0) / (2.0 * nn * nn);
      betas(i - 1) = 1.0 - std::exp(expo);
    }
    if (betas(n - 1) >= 1.0 || betas(0) <= 0.0)
      throw std::invalid_argument("make_schedule: VP rates give beta outside (0,1)");
  }
  return NoiseSchedule::from_betas(betas);
}

}  // namespace hdp
