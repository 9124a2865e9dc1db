#include "asw/suites.hpp"

#include <algorithm>

#include "asw/eval.hpp"
#include "asw/slicers.hpp"
#include "asw/trainer.hpp"

namespace asw {
namespace {

// Gaussian cloud with a random center and per-axis scale.
EmpiricalMeasure random_cloud(Eigen::Index n, Rng& rng) {
  std::uniform_real_distribution<double> center(-2.0, 2.0);
  std::uniform_real_distribution<double> scale(0.2, 1.5);
  Matrix pts = standard_normal(n, 2, rng);
  for (Eigen::Index j = 0; j < 2; ++j) {
    pts.col(j) = pts.col(j) * scale(rng) + Vector::Constant(n, center(rng));
  }
  return EmpiricalMeasure(std::move(pts));
}

}  // namespace

std::vector<LowerBoundRow> lower_bound_suite(const LowerBoundConfig& cfg) {
  if (cfg.max_batch < 2 || cfg.max_batch > cfg.support) {
    throw ContractViolation("lower-bound suite: max_batch must be in [2, support]");
  }
  std::vector<LowerBoundRow> rows;
  for (int i = 0; i < cfg.instances; ++i) {
    Rng rng = child_rng(cfg.seed, static_cast<std::uint64_t>(i));
    const EmpiricalMeasure mu = random_cloud(cfg.support, rng);
    const EmpiricalMeasure nu = random_cloud(cfg.support, rng);
    const Eigen::Index m = std::uniform_int_distribution<Eigen::Index>(2, cfg.max_batch)(rng);
    const std::uint64_t fit_seed = rng();
    const std::vector<MinibatchPair> pairs = sample_pairs(mu, nu, m, cfg.n_pairs, rng);
    const MonteCarloEstimate oracle = m_max_sw_on_pairs(pairs, cfg.p, cfg.n_angles);
    for (ModelKind kind : cfg.kinds) {
      AswFitConfig fc;
      fc.kind = kind;
      fc.m = m;
      fc.iters = cfg.fit_iters;
      fc.lr = cfg.fit_lr;
      fc.p = cfg.p;
      fc.seed = fit_seed;
      const AswFit fit = fit_amortized_slicer(mu, nu, fc);
      const MonteCarloEstimate a = asw_objective(fit.psi, pairs, cfg.p);
      LowerBoundRow row;
      row.instance = i;
      row.kind = kind;
      row.m = m;
      row.a_sw = a.mean;
      row.a_sw_se = a.std_error;
      row.m_max_sw = oracle.mean;
      row.m_max_sw_se = oracle.std_error;
      row.slack = 2.0 * oracle.std_error;
      row.pass = row.a_sw <= row.m_max_sw + row.slack;
      rows.push_back(row);
    }
  }
  return rows;
}

std::vector<ContractionRow> contraction_suite(const ContractionConfig& cfg) {
  std::vector<ContractionRow> rows;
  for (int i = 0; i < cfg.instances; ++i) {
    Rng rng = child_rng(cfg.seed, static_cast<std::uint64_t>(i));
    ContractionRow row;
    row.instance = i;
    row.p = i % 2 == 0 ? Order::kTwo : Order::kOne;
    row.m = std::uniform_int_distribution<Eigen::Index>(2, 24)(rng);
    const EmpiricalMeasure mu = random_cloud(row.m, rng);
    const EmpiricalMeasure nu = random_cloud(row.m, rng);
    row.exact = exact_wasserstein(mu, nu, row.p);

    for (Eigen::Index l = 0; l < cfg.n_slices; ++l) {
      const Direction theta = sample_sphere(2, rng);
      row.max_projected =
          std::max(row.max_projected, wasserstein_1d(project(mu, theta), project(nu, theta), row.p));
    }
    SliceOptConfig sc;
    sc.max_iters = 100;
    sc.seed = rng();
    row.max_sw = max_sw(mu, nu, sc, row.p).value;
    row.prw = prw(mu, nu, 1, sc, row.p).value;
    // Full-width frames only contract under the Euclidean cost, i.e. p = 2.
    if (row.p == Order::kTwo) row.prw = std::max(row.prw, prw(mu, nu, 2, sc, row.p).value);

    const double bound = row.exact + cfg.tol;
    row.pass = row.max_projected <= bound && row.max_sw <= bound && row.prw <= bound;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace asw
