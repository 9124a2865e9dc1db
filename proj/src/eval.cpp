#include "asw/eval.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace asw {

Assignment solve_assignment(const Matrix& cost) {
  const Eigen::Index n = cost.rows();
  if (cost.cols() != n) throw ContractViolation("solve_assignment: cost matrix must be square");
  if (n == 0) return {};
  if (!cost.allFinite()) throw NumericalFailure("solve_assignment: non-finite cost");

  // Shortest augmenting paths with row/column potentials; index 0 is a sentinel column.
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<Eigen::Index> row_of_col(n + 1, 0), way(n + 1, 0);
  std::vector<double> minv(n + 1);
  std::vector<char> used(n + 1);

  for (Eigen::Index i = 1; i <= n; ++i) {
    row_of_col[0] = i;
    Eigen::Index j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const Eigen::Index i0 = row_of_col[j0];
      double delta = kInf;
      Eigen::Index j1 = 0;
      for (Eigen::Index j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (Eigen::Index j = 0; j <= n; ++j) {
        if (used[j]) {
          u[row_of_col[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (row_of_col[j0] != 0);
    do {
      const Eigen::Index j1 = way[j0];
      row_of_col[j0] = row_of_col[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  Assignment out;
  out.col_of_row.assign(static_cast<std::size_t>(n), 0);
  for (Eigen::Index j = 1; j <= n; ++j) out.col_of_row[row_of_col[j] - 1] = j - 1;
  // Re-sum from the matrix rather than trusting the potentials.
  for (Eigen::Index i = 0; i < n; ++i) out.cost += cost(i, out.col_of_row[i]);
  return out;
}

Matrix ground_cost(const Matrix& x, const Matrix& y, Order p) {
  if (x.cols() != y.cols()) throw ContractViolation("ground_cost: dimension mismatch");
  Matrix c(x.rows(), y.rows());
  for (Eigen::Index j = 0; j < y.rows(); ++j) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const auto diff = (x.row(i) - y.row(j)).array().abs();
      c(i, j) = p == Order::kOne ? diff.sum() : diff.square().sum();
    }
  }
  return c;
}

double exact_wasserstein(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, Order p) {
  if (mu.d() != nu.d()) throw ContractViolation("exact_wasserstein: dimension mismatch");
  if (mu.m() != nu.m()) throw Unsupported("exact_wasserstein: measures must have equal size");
  if (mu.m() > kExactOracleMaxSize) {
    throw Unsupported("exact_wasserstein: m=" + std::to_string(mu.m()) + " exceeds the cap of " +
                      std::to_string(kExactOracleMaxSize));
  }
  const Assignment a = solve_assignment(ground_cost(mu.points(), nu.points(), p));
  const double s = std::max(0.0, a.cost / static_cast<double>(mu.m()));
  return p == Order::kOne ? s : std::sqrt(s);
}

GridMaxSw grid_max_sw(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, Order p,
                      Eigen::Index n_angles) {
  if (mu.d() != 2 || nu.d() != 2) throw Unsupported("grid_max_sw: only d = 2 is supported");
  if (n_angles < 3) throw ContractViolation("grid_max_sw: n_angles must be >= 3");
  GridMaxSw best;
  best.value = -1.0;
  Vector theta(2);
  for (Eigen::Index k = 0; k < n_angles; ++k) {
    const double angle = std::numbers::pi * static_cast<double>(k) / static_cast<double>(n_angles);
    theta << std::cos(angle), std::sin(angle);
    const auto u = make_projected(mu.points() * theta);
    const auto v = make_projected(nu.points() * theta);
    const double w = wasserstein_1d(u, v, p);
    if (w > best.value) {
      best.value = w;
      best.angle = angle;
      best.theta = theta;
    }
  }
  return best;
}

MonteCarloEstimate summarize(std::vector<double> samples) {
  MonteCarloEstimate est;
  const auto n = static_cast<double>(samples.size());
  if (samples.empty()) return est;
  double sum = 0.0;
  for (double s : samples) sum += s;
  est.mean = sum / n;
  if (samples.size() > 1) {
    double ss = 0.0;
    for (double s : samples) ss += (s - est.mean) * (s - est.mean);
    est.std_error = std::sqrt(ss / (n - 1.0) / n);
  }
  est.samples = std::move(samples);
  return est;
}

std::vector<MinibatchPair> sample_pairs(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                                        Eigen::Index m, Eigen::Index n_pairs, Rng& rng) {
  std::vector<MinibatchPair> pairs;
  pairs.reserve(static_cast<std::size_t>(n_pairs));
  for (Eigen::Index i = 0; i < n_pairs; ++i) {
    auto x = sample_minibatch(mu, m, rng);
    auto y = sample_minibatch(nu, m, rng);
    pairs.push_back({std::move(x), std::move(y)});
  }
  return pairs;
}

MonteCarloEstimate m_max_sw_on_pairs(const std::vector<MinibatchPair>& pairs, Order p,
                                     Eigen::Index n_angles) {
  std::vector<double> values;
  values.reserve(pairs.size());
  for (const auto& pair : pairs) values.push_back(grid_max_sw(pair.x, pair.y, p, n_angles).value);
  return summarize(std::move(values));
}

MonteCarloEstimate m_max_sw_oracle(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                                   Eigen::Index m, Eigen::Index n_pairs, Eigen::Index n_angles,
                                   Rng& rng, Order p) {
  if (mu.d() != 2 || nu.d() != 2) throw Unsupported("m_max_sw_oracle: only d = 2 is supported");
  if (n_pairs < 1) throw ContractViolation("m_max_sw_oracle: n_pairs must be >= 1");
  return m_max_sw_on_pairs(sample_pairs(mu, nu, m, n_pairs, rng), p, n_angles);
}

}  // namespace asw
