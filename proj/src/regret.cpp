#include "nmpg/regret.hpp"

#include <algorithm>
#include <stdexcept>

namespace nmpg {

void RegretSeries::append(int m, const std::vector<double>& row) {
  if (gaps.rows() > 0 && static_cast<Eigen::Index>(row.size()) != gaps.cols())
    throw std::invalid_argument("RegretSeries: agent count changed");
  for (double g : row)
    if (!(g >= 0.0)) throw std::invalid_argument("RegretSeries: gaps must be non-negative");
  gaps.conservativeResize(gaps.rows() + 1, static_cast<Eigen::Index>(row.size()));
  for (std::size_t i = 0; i < row.size(); ++i) gaps(gaps.rows() - 1, static_cast<Eigen::Index>(i)) = row[i];
  iterations.push_back(m);
}

namespace {
void check_prefix(const RegretSeries& s, int prefix) {
  if (s.points() == 0) throw std::invalid_argument("regret: empty series");
  if (prefix <= 0 || prefix > s.points()) throw std::out_of_range("regret: prefix out of range");
}
}  // namespace

double avg_nash_regret(const RegretSeries& series, int agent, int prefix) {
  check_prefix(series, prefix);
  const auto top = series.gaps.topRows(prefix);
  if (agent >= 0) return top.col(agent).sum() / prefix;
  return top.colwise().sum().maxCoeff() / prefix;
}

double nash_regret(const RegretSeries& series, int prefix) {
  check_prefix(series, prefix);
  return series.gaps.topRows(prefix).rowwise().maxCoeff().sum() / prefix;
}

std::vector<double> avg_nash_regret_curve(const RegretSeries& series) {
  std::vector<double> out;
  Eigen::RowVectorXd sums = Eigen::RowVectorXd::Zero(series.agents());
  for (int k = 0; k < series.points(); ++k) {
    sums += series.gaps.row(k);
    out.push_back(sums.maxCoeff() / (k + 1));
  }
  return out;
}

std::vector<double> nash_regret_curve(const RegretSeries& series) {
  std::vector<double> out;
  double sum = 0.0;
  for (int k = 0; k < series.points(); ++k) {
    sum += series.gaps.row(k).maxCoeff();
    out.push_back(sum / (k + 1));
  }
  return out;
}

double sandwich_violation(const RegretSeries& series) {
  const auto anr = avg_nash_regret_curve(series);
  const auto nr = nash_regret_curve(series);
  const double n = series.agents();
  double worst = 0.0;
  for (std::size_t k = 0; k < anr.size(); ++k) {
    worst = std::max(worst, nr[k] / n - anr[k]);
    worst = std::max(worst, anr[k] - nr[k]);
  }
  return worst;
}

}  // namespace nmpg
