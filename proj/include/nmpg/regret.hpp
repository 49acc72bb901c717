#pragma once

#include <Eigen/Dense>
#include <vector>

namespace nmpg {

/// NE-gaps at evaluated iterations: gaps(k, i) is agent i's gap at iterations[k].
struct RegretSeries {
  std::vector<int> iterations;
  Eigen::MatrixXd gaps;

  int points() const { return static_cast<int>(gaps.rows()); }
  int agents() const { return static_cast<int>(gaps.cols()); }
  void append(int m, const std::vector<double>& row);
};

/// Mean of agent i's gaps over the first `prefix` evaluated points; agent < 0 gives the max over agents.
double avg_nash_regret(const RegretSeries& series, int agent, int prefix);
/// Mean over the first `prefix` points of the per-point maximum gap.
double nash_regret(const RegretSeries& series, int prefix);

/// Curves for every prefix 1..points().
std::vector<double> avg_nash_regret_curve(const RegretSeries& series);
std::vector<double> nash_regret_curve(const RegretSeries& series);

/// Largest violation of (1/n) NR <= ANR <= NR over all prefixes (0 when it holds).
double sandwich_violation(const RegretSeries& series);

}  // namespace nmpg
