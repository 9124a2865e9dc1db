#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "asw/grad.hpp"

namespace asw {

// Finite-difference suite over seeded random instances. Each objective value
// is recomputed from the forward code path (projection, sort, power mean), so
// the analytic gradients are checked against something they do not share.
struct GradSuiteConfig {
  int instances = 50;  // per operation
  std::uint64_t seed = 0;
  FdOptions fd;
  std::vector<std::string> ops;  // empty = all of gradcheck_ops()
};

const std::vector<std::string>& gradcheck_ops();

FdReport gradcheck_instance(const std::string& op, std::uint64_t instance_seed, const FdOptions& fd);

std::vector<FdReport> gradcheck_suite(const GradSuiteConfig& cfg);

}  // namespace asw
