#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "iswsst/tensor.hpp"

namespace iswsst {

struct GradCheckResult {
  std::string block;
  double max_rel_error = 0.0;  // max |g - g_fd| / max(1, |g_fd|)
  std::size_t checked = 0;     // elements compared
  bool passed = false;
};

struct GradCheckOptions {
  double step = 1e-4;
  double tolerance = 1e-4;
  // Elements sampled per leaf; 0 checks every element.
  std::size_t max_per_leaf = 0;
  std::uint64_t seed = 0;
};

// Compares backward() of loss() against central differences on each leaf.
// Leaves must be 64-bit and require gradients.
GradCheckResult check_gradients(const std::string& block, const std::function<Tensor()>& loss,
                                const std::vector<Tensor>& leaves, const GradCheckOptions& options = {});

// wave_block, mhsa_block, channel_attend, superpose_soft, index_logits,
// lwped (encode, process, decode) and the full model on a 16x16 input.
std::vector<GradCheckResult> run_block_gradchecks(std::uint64_t seed = 0);

}  // namespace iswsst
