#pragma once

#include <vector>

#include "asw/common.hpp"
#include "asw/measures.hpp"

namespace asw {

/// Largest support size the exact (cubic) oracle accepts.
inline constexpr Eigen::Index kExactOracleMaxSize = 1024;

struct Assignment {
  std::vector<Eigen::Index> col_of_row;
  double cost = 0.0;
};

/// Minimum-cost perfect matching on a square cost matrix (Hungarian method with
/// potentials, O(n^3)).
Assignment solve_assignment(const Matrix& cost);

/// Pairwise ground cost C(i, j) = Σ_k |x_ik - y_jk|^p.
Matrix ground_cost(const Matrix& x, const Matrix& y, Order p);

/// Exact W_p between equal-size uniform measures via optimal assignment.
double exact_wasserstein(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, Order p);

struct GridMaxSw {
  double value = 0.0;
  double angle = 0.0;  // in [0, pi)
  Vector theta;        // (cos angle, sin angle)
};

/// Brute-force Max-SW on the circle: n_angles evenly spaced angles in [0, pi).
GridMaxSw grid_max_sw(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, Order p,
                      Eigen::Index n_angles);

/// Sample mean with its standard error.
struct MonteCarloEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::vector<double> samples;
};

MonteCarloEstimate summarize(std::vector<double> samples);

struct MinibatchPair {
  EmpiricalMeasure x;
  EmpiricalMeasure y;
};

/// n_pairs i.i.d. mini-batch pairs (X ~ mu^m, Y ~ nu^m).
std::vector<MinibatchPair> sample_pairs(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                                        Eigen::Index m, Eigen::Index n_pairs, Rng& rng);

/// Mini-batch Max-SW with grid inner maximization over a fixed pair stream.
MonteCarloEstimate m_max_sw_on_pairs(const std::vector<MinibatchPair>& pairs, Order p,
                                     Eigen::Index n_angles);

/// Mini-batch Max-SW reference value (d = 2 only).
MonteCarloEstimate m_max_sw_oracle(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                                   Eigen::Index m, Eigen::Index n_pairs, Eigen::Index n_angles,
                                   Rng& rng, Order p = Order::kTwo);

}  // namespace asw
