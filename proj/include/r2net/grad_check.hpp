#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "r2net/tensor.hpp"

namespace r2net {

struct GradCheckOptions {
    double eps = 1e-5;
    // Cap on probed coordinates per tensor (0 = all). Chosen coordinates are
    // a seeded random subset.
    std::size_t max_coords_per_tensor = 0;
    std::uint64_t seed = 0;
    // Drop coordinates whose central difference at eps disagrees with the
    // one at eps/2 by more than 1e-5 relative: the probe straddled a kink
    // (relu, max pool, hinge).
    bool skip_nonsmooth = false;
};

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::size_t checked = 0;
    std::size_t skipped = 0;
    std::string worst;  // "<tensor index>[<coordinate>]" of the largest error
};

// |analytic - numeric| / max(|analytic|, |numeric|, 1e-6).
double relative_error(double analytic, double numeric);

// Compares the gradient of the scalar produced by `loss_fn` with respect to
// each tensor in `params` against central differences. `params` must be
// leaves; their values are perturbed in place and restored.
GradCheckResult grad_check(const std::function<Tensor()>& loss_fn, std::vector<Tensor> params,
                           const GradCheckOptions& options = {});

}  // namespace r2net
