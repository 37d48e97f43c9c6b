#include "r2net/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "r2net/errors.hpp"
#include "r2net/rng.hpp"

namespace r2net {

double relative_error(double analytic, double numeric) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
    return std::abs(analytic - numeric) / denom;
}

namespace {

constexpr double kKinkTolerance = 1e-5;

double evaluate(const std::function<Tensor()>& loss_fn) {
    NoGradGuard guard;
    return loss_fn().item();
}

double central_difference(const std::function<Tensor()>& loss_fn, double& slot, double eps) {
    const double original = slot;
    slot = original + eps;
    const double up = evaluate(loss_fn);
    slot = original - eps;
    const double down = evaluate(loss_fn);
    slot = original;
    return (up - down) / (2.0 * eps);
}

}  // namespace

GradCheckResult grad_check(const std::function<Tensor()>& loss_fn, std::vector<Tensor> params,
                           const GradCheckOptions& options) {
    if (options.eps <= 0.0) throw ContractError("grad_check: eps must be positive");
    for (Tensor& p : params) {
        if (!p.is_leaf() || !p.requires_grad()) throw ContractError("grad_check: params must be leaves requiring grad");
        p.zero_grad();
    }
    backward(loss_fn());

    std::vector<std::vector<double>> analytic;
    for (const Tensor& p : params) {
        if (p.has_grad()) {
            analytic.emplace_back(p.grad().begin(), p.grad().end());
        } else {
            analytic.emplace_back(p.size(), 0.0);
        }
    }

    Rng rng(options.seed);
    GradCheckResult result;
    for (std::size_t t = 0; t < params.size(); ++t) {
        auto values = params[t].mutable_values();
        std::vector<std::size_t> coords(values.size());
        std::iota(coords.begin(), coords.end(), std::size_t{0});
        if (options.max_coords_per_tensor && coords.size() > options.max_coords_per_tensor) {
            rng.shuffle(coords);
            coords.resize(options.max_coords_per_tensor);
            std::sort(coords.begin(), coords.end());
        }
        for (std::size_t c : coords) {
            const double numeric = central_difference(loss_fn, values[c], options.eps);
            if (options.skip_nonsmooth) {
                const double half = central_difference(loss_fn, values[c], options.eps / 2.0);
                if (relative_error(numeric, half) > kKinkTolerance) {
                    ++result.skipped;
                    continue;
                }
            }
            const double err = relative_error(analytic[t][c], numeric);
            ++result.checked;
            if (result.worst.empty() || err > result.max_rel_error) {
                result.max_rel_error = err;
                result.worst = std::to_string(t) + "[" + std::to_string(c) + "]";
            }
        }
    }
    return result;
}

}  // namespace r2net
