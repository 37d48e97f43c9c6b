#include <doctest.h>

#include <algorithm>

#include "helpers.hpp"
#include "r2net/encoder_local.hpp"
#include "r2net/errors.hpp"
#include "r2net/grad_check.hpp"

using namespace r2net;
using testing::check_close;

namespace {

LocalEncoderConfig config(std::size_t d, std::vector<std::size_t> widths, std::size_t channels, std::size_t out) {
    return {d, std::move(widths), channels, out, 0.6};
}

}  // namespace

TEST_CASE("window mask keeps windows fully on real tokens") {
    const Mask real{true, true, true, true, false, false};
    CHECK(window_mask(real, 1) == Mask{true, true, true, true, false, false});
    // width 2: t sees t, t+1
    CHECK(window_mask(real, 2) == Mask{true, true, true, false, false, false});
    // width 3: t sees t-1, t, t+1
    CHECK(window_mask(real, 3) == Mask{false, true, true, false, false, false});
}

TEST_CASE("default kernel widths give a 6*d_out concat") {
    ParamStore store;
    Rng rng(1);
    const LocalEncoder enc(store, config(4, {1, 2, 3}, 5, 7), rng);
    const Tensor H = testing::random_tensor(rng, {6, 4}, false);
    const LocalFeatures f = enc.encode(H, Mask(6, true));
    CHECK(f.h_concat.shape() == Shape{30});
    CHECK(f.v_l.shape() == Shape{7});
    for (double v : f.v_l.values()) CHECK(v >= 0.0);
}

TEST_CASE("constant-over-time input pools to equal max and avg") {
    ParamStore store;
    Rng rng(2);
    const LocalEncoder enc(store, config(3, {1, 2, 3}, 4, 4), rng);
    std::vector<double> h;
    for (int t = 0; t < 5; ++t) h.insert(h.end(), {0.3, -0.7, 1.1});
    const LocalFeatures f = enc.encode(Tensor({5, 3}, h), Mask(5, true));
    for (std::size_t k = 0; k < 3; ++k) check_close(f.max_pooled[k].values(), testing::to_vector(f.avg_pooled[k].values()), 1e-12);
}

TEST_CASE("hand-set 3x2 input with one width-2 kernel matches a loop oracle") {
    ParamStore store;
    Rng rng(3);
    const LocalEncoder enc(store, config(2, {2}, 2, 2), rng);
    const std::vector<double> h{1.0, -2.0, 0.5, 3.0, -1.5, 0.25};
    const Tensor H({3, 2}, h);
    const LocalFeatures f = enc.encode(H, Mask(3, true));

    const auto w = enc.kernels()[0].values();
    const auto b = store.get("local.conv2.bias").values();
    // Windows fully inside the sequence: t=0 (rows 0,1) and t=1 (rows 1,2).
    std::vector<std::vector<double>> conv;
    for (std::size_t t = 0; t < 2; ++t) {
        std::vector<double> o(2);
        for (std::size_t oc = 0; oc < 2; ++oc) {
            double acc = b[oc];
            for (std::size_t j = 0; j < 2; ++j) {
                for (std::size_t c = 0; c < 2; ++c) acc += h[(t + j) * 2 + c] * w[(j * 2 + c) * 2 + oc];
            }
            o[oc] = acc;
        }
        conv.push_back(o);
    }
    const std::vector<double> concat_expected{std::max(conv[0][0], conv[1][0]), std::max(conv[0][1], conv[1][1]),
                                              (conv[0][0] + conv[1][0]) / 2, (conv[0][1] + conv[1][1]) / 2};
    check_close(f.h_concat.values(), concat_expected, 1e-14);
    const auto pw = enc.projection().values();
    const auto pb = store.get("local.b").values();
    std::vector<double> v_l(2);
    for (std::size_t o = 0; o < 2; ++o) {
        double acc = pb[o];
        for (std::size_t i = 0; i < 4; ++i) acc += concat_expected[i] * pw[i * 2 + o];
        v_l[o] = std::max(acc, 0.0);
    }
    check_close(f.v_l.values(), v_l, 1e-14);
}

TEST_CASE("appending PAD rows leaves v_l bit-identical") {
    ParamStore store;
    Rng rng(4);
    const LocalEncoder enc(store, config(3, {1, 2, 3}, 4, 5), rng);
    const Tensor H = testing::random_tensor(rng, {5, 3}, false);
    const LocalFeatures base = enc.encode(H, Mask(5, true));
    std::vector<double> padded = testing::to_vector(H.values());
    for (int i = 0; i < 9; ++i) padded.push_back(rng.uniform(-5, 5));
    Mask mask(8, false);
    std::fill(mask.begin(), mask.begin() + 5, true);
    const LocalFeatures p = enc.encode(Tensor({8, 3}, padded), mask);
    CHECK(testing::to_vector(p.v_l.values()) == testing::to_vector(base.v_l.values()));
    CHECK(testing::to_vector(p.h_concat.values()) == testing::to_vector(base.h_concat.values()));
}

TEST_CASE("max pooling dominates average pooling, concat order is max then avg by width") {
    ParamStore store;
    Rng rng(5);
    const LocalEncoder enc(store, config(3, {3, 1, 2}, 2, 3), rng);
    CHECK(enc.config().kernel_widths == std::vector<std::size_t>{1, 2, 3});
    const Tensor H = testing::random_tensor(rng, {6, 3}, false);
    const LocalFeatures f = enc.encode(H, Mask(6, true));
    const auto c = f.h_concat.values();
    for (std::size_t k = 0; k < 3; ++k) {
        const auto mx = f.max_pooled[k].values(), av = f.avg_pooled[k].values();
        for (std::size_t j = 0; j < 2; ++j) {
            CHECK(mx[j] >= av[j]);
            CHECK(c[k * 4 + j] == mx[j]);
            CHECK(c[k * 4 + 2 + j] == av[j]);
        }
    }
}

TEST_CASE("short sequences are degenerate") {
    ParamStore store;
    Rng rng(6);
    const LocalEncoder enc(store, config(2, {1, 2, 3}, 2, 2), rng);
    CHECK_THROWS_AS(enc.encode(testing::random_tensor(rng, {2, 2}, false), Mask(2, true)), DegenerateInputError);
    CHECK_THROWS_AS(enc.encode(testing::random_tensor(rng, {4, 2}, false), Mask{true, true, false, false}),
                    DegenerateInputError);
    CHECK_THROWS_AS(LocalEncoder(store, config(2, {2, 2}, 2, 2), rng), ContractError);
}

TEST_CASE("fuse concatenates and slices back") {
    check_close(testing::values(fuse(Tensor::vector({1, 2}), Tensor::vector({3}))), {1, 2, 3}, 0.0);
    const Tensor v = fuse(Tensor::vector({4, 5}), Tensor::zeros({3}));
    check_close(testing::values(slice(v, 0, 0, 2)), {4, 5}, 0.0);
    check_close(testing::values(slice(v, 0, 2, 5)), {0, 0, 0}, 0.0);
}

TEST_CASE("fused gradient reaches both operands") {
    Rng rng(7);
    Tensor g = testing::random_tensor(rng, {3}), l = testing::random_tensor(rng, {2});
    const Tensor probe = testing::random_tensor(rng, {5}, false);
    backward(sum(fuse(g, l) * probe));
    check_close(g.grad(), testing::to_vector(testing::values(slice(probe, 0, 0, 3))), 0.0);
    check_close(l.grad(), testing::to_vector(testing::values(slice(probe, 0, 3, 5))), 0.0);
    // Detaching v_l leaves the v_g gradient unchanged.
    Tensor g2 = Tensor::vector(testing::to_vector(g.values()), true);
    backward(sum(fuse(g2, l.detach()) * probe));
    CHECK(testing::to_vector(g2.grad()) == testing::to_vector(g.grad()));
    const auto r = grad_check([&] { return sum(fuse(g, l) * probe); }, {g, l});
    CHECK(r.max_rel_error < 1e-9);
}
