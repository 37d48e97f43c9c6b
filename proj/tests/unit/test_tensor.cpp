#include <doctest.h>

#include "helpers.hpp"
#include "r2net/errors.hpp"
#include "r2net/ops.hpp"

using namespace r2net;

TEST_CASE("construction validates shape against values") {
    CHECK_THROWS_AS(Tensor({2, 2}, {1, 2, 3}), DimensionError);
    CHECK_THROWS_AS(Tensor({0, 3}, {}), DimensionError);
    const Tensor t({2, 3}, {1, 2, 3, 4, 5, 6});
    CHECK(t.size() == 6);
    CHECK(t.rank() == 2);
    CHECK(t.at(1, 2) == 6);
    CHECK(element_count({2, 3, 4}) == 24);
    CHECK(shape_string({2, 3}) == "[2x3]");
}

TEST_CASE("sum of a parameter has all-ones gradient") {
    Tensor p = Tensor::vector({1, -2, 3}, true);
    backward(sum(p));
    testing::check_close(p.grad(), {1, 1, 1}, 0.0);
}

TEST_CASE("sum of p*p at [1,2] has gradient [2,4]") {
    Tensor p = Tensor::vector({1, 2}, true);
    backward(sum(p * p));
    testing::check_close(p.grad(), {2, 4}, 0.0);
}

TEST_CASE("repeated backward accumulates until zero_grad") {
    Tensor p = Tensor::vector({1, 2}, true);
    backward(sum(p * p));
    backward(sum(p * p));
    testing::check_close(p.grad(), {4, 8}, 0.0);
    p.zero_grad();
    testing::check_close(p.grad(), {0, 0}, 0.0);
    backward(sum(p));
    testing::check_close(p.grad(), {1, 1}, 0.0);
}

TEST_CASE("a node feeding two consumers sums both contributions") {
    Tensor p = Tensor::vector({0.5, -1.5}, true);
    const Tensor h = scale(p, 3.0);
    backward(sum(h * h + h));  // d/dp = 3 * (2h + 1)
    const auto hv = h.values();
    testing::check_close(p.grad(), {3 * (2 * hv[0] + 1), 3 * (2 * hv[1] + 1)}, 1e-12);
}

TEST_CASE("backward visits a shared subgraph once per path, not once per visit") {
    // x used k times through one intermediate; gradient must be exactly k.
    Tensor x = Tensor::scalar(2.0, true);
    const Tensor y = scale(x, 1.0);
    Tensor acc = y;
    for (int i = 0; i < 9; ++i) acc = acc + y;
    backward(acc);
    CHECK(x.grad()[0] == 10.0);
}

TEST_CASE("backward rejects non-scalar roots") {
    Tensor p = Tensor::vector({1, 2}, true);
    CHECK_THROWS_AS(backward(p * p), ContractError);
    CHECK_THROWS_AS(backward(Tensor()), ContractError);
}

TEST_CASE("gradients reach only requires_grad leaves") {
    Tensor p = Tensor::vector({1, 2}, true);
    Tensor c = Tensor::vector({3, 4}, false);
    backward(sum(p * c));
    testing::check_close(p.grad(), {3, 4}, 0.0);
    CHECK_FALSE(c.has_grad());
}

TEST_CASE("no-grad mode records no lineage") {
    Tensor p = Tensor::vector({1, 2}, true);
    {
        NoGradGuard guard;
        CHECK_FALSE(grad_enabled());
        const Tensor y = sum(p * p);
        CHECK(y.is_leaf());
        CHECK_FALSE(y.requires_grad());
    }
    CHECK(grad_enabled());
    CHECK_FALSE(sum(p * p).is_leaf());
}

TEST_CASE("detach cuts the graph but keeps values") {
    Tensor p = Tensor::vector({1, 2}, true);
    const Tensor d = (p * p).detach();
    testing::check_close(d.values(), {1, 4}, 0.0);
    CHECK(d.is_leaf());
    CHECK_FALSE(d.requires_grad());
}

TEST_CASE("intermediate tensors cannot be mutated in place") {
    Tensor p = Tensor::vector({1, 2}, true);
    Tensor y = p * p;
    CHECK_THROWS_AS(y.mutable_values(), ContractError);
    CHECK_NOTHROW(p.mutable_values());
}

TEST_CASE("item requires a single element") {
    CHECK(Tensor::scalar(3.5).item() == 3.5);
    CHECK_THROWS_AS(Tensor::vector({1, 2}).item(), ContractError);
}
