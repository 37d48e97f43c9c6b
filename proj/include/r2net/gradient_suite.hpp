#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "r2net/grad_check.hpp"

namespace r2net {

// A loss over freshly drawn leaves, rebuilt for every seed.
struct GradientProblem {
    std::function<Tensor()> loss;
    std::vector<Tensor> params;
    GradCheckOptions options;
};

struct GradientCase {
    std::string name;
    std::function<GradientProblem(std::uint64_t seed)> build;
};

struct GradientCaseReport {
    std::string name;
    double max_rel_error = 0.0;
    std::size_t checked = 0;
    std::size_t skipped = 0;
};

// Every primitive op, the encoder and head compositions, and the composite
// loss over a two-triplet batch of a small model.
std::vector<GradientCase> gradient_cases();

// Runs each case for seeds 0..seeds-1 and keeps the worst error per case.
std::vector<GradientCaseReport> run_gradient_suite(std::size_t seeds = 10, double eps = 1e-5);

double worst_error(const std::vector<GradientCaseReport>& reports);

}  // namespace r2net
