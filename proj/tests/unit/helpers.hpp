#pragma once

#include <doctest.h>

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "r2net/rng.hpp"
#include "r2net/tensor.hpp"

namespace testing {

inline r2net::Tensor random_tensor(r2net::Rng& rng, r2net::Shape shape, bool requires_grad = true, double lo = -1.0,
                                   double hi = 1.0) {
    std::vector<double> v(r2net::element_count(shape));
    for (double& x : v) x = rng.uniform(lo, hi);
    return r2net::Tensor(std::move(shape), std::move(v), requires_grad);
}

inline std::vector<double> to_vector(std::span<const double> s) { return {s.begin(), s.end()}; }

// Owning copies, safe on temporaries.
inline std::vector<double> values(const r2net::Tensor& t) { return to_vector(t.values()); }
inline std::vector<double> grad(const r2net::Tensor& t) { return to_vector(t.grad()); }

inline void check_close(std::span<const double> actual, const std::vector<double>& expected, double tol) {
    REQUIRE(actual.size() == expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) {
        INFO("index " << i);
        CHECK(std::abs(actual[i] - expected[i]) <= tol);
    }
}

}  // namespace testing
