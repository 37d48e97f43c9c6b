#include <doctest.h>

#include <sstream>

#include "helpers.hpp"
#include "r2net/checkpoint.hpp"
#include "r2net/errors.hpp"
#include "r2net/params.hpp"
#include "r2net/train_config.hpp"

using namespace r2net;

namespace {

ParamStore make_store(std::uint64_t seed) {
    ParamStore store;
    Rng rng(seed);
    store.add_uniform("a.w", {3, 2}, rng, 0.05);
    store.add_constant("a.gamma", {2}, 1.0);
    store.add_uniform("b.v", {4}, rng, 1e-7);
    return store;
}

}  // namespace

TEST_CASE("uniform initialization stays in range and is seeded") {
    ParamStore store;
    Rng rng(1);
    const Tensor t = store.add_uniform("w", {50, 4}, rng, 0.05);
    for (double v : t.values()) CHECK(std::abs(v) <= 0.05);
    CHECK(t.requires_grad());
    CHECK(make_store(3).checksum() == make_store(3).checksum());
    CHECK(make_store(3).checksum() != make_store(4).checksum());
    CHECK(make_store(3).parameter_count() == 12);
    CHECK_THROWS_AS(store.add_constant("w", {1}, 0.0), ContractError);
    CHECK_THROWS(store.get("missing"));
}

TEST_CASE("checkpoint round trip is bit exact") {
    ParamStore src = make_store(5);
    std::ostringstream out;
    write_checkpoint(src, out);
    ParamStore dst = make_store(6);
    std::istringstream in(out.str());
    read_checkpoint(dst, in);
    CHECK(dst.checksum() == src.checksum());
    std::ostringstream again;
    write_checkpoint(dst, again);
    CHECK(again.str() == out.str());
    CHECK(out.str().rfind("r2net-checkpoint 1\n3\na.w 2 3 2\n", 0) == 0);
}

TEST_CASE("checkpoint mismatches are parse errors and leave the model untouched") {
    ParamStore src = make_store(5);
    std::ostringstream out;
    write_checkpoint(src, out);
    const std::string text = out.str();

    ParamStore dst = make_store(7);
    const auto before = dst.checksum();
    auto attempt = [&](std::string bad) {
        std::istringstream in(bad);
        CHECK_THROWS_AS(read_checkpoint(dst, in), ParseError);
        CHECK(dst.checksum() == before);
    };
    attempt("not-a-checkpoint 1\n");
    attempt("r2net-checkpoint 2\n3\n");
    std::string renamed = text;
    renamed.replace(renamed.find("b.v"), 3, "b.x");
    attempt(renamed);
    std::string truncated = text.substr(0, text.rfind('\n', text.size() - 2) + 1);
    attempt(truncated);
    std::string reshaped = text;
    reshaped.replace(reshaped.find("a.w 2 3 2"), 9, "a.w 2 2 3");
    attempt(reshaped);
}

TEST_CASE("snapshot and restore") {
    ParamStore store = make_store(8);
    const auto snap = store.snapshot();
    const auto sum_before = store.checksum();
    for (auto [name, t] : store.entries()) {
        for (double& v : t.mutable_values()) v += 1.0;
    }
    CHECK(store.checksum() != sum_before);
    store.restore(snap);
    CHECK(store.checksum() == sum_before);
    CHECK_THROWS(store.restore({{1.0}}));
}

TEST_CASE("config defaults and validation") {
    const TrainConfig c;
    CHECK(c.margin == 0.2);
    CHECK(c.adam_beta1 == 0.9);
    CHECK(c.adam_beta2 == 0.999);
    CHECK(c.kernel_widths == std::vector<std::size_t>{1, 2, 3});
    CHECK_NOTHROW(c.validate());
    auto bad = [](auto mutate) {
        TrainConfig x;
        mutate(x);
        CHECK_THROWS_AS(x.validate(), ContractError);
    };
    bad([](TrainConfig& x) { x.beta = 1.5; });
    bad([](TrainConfig& x) { x.beta = -0.1; });
    bad([](TrainConfig& x) { x.margin = -1; });
    bad([](TrainConfig& x) { x.dim = 0; });
    bad([](TrainConfig& x) { x.dim = 30; });  // not divisible by 4 heads
    bad([](TrainConfig& x) { x.kernel_widths = {}; });
    bad([](TrainConfig& x) { x.kernel_widths = {2, 2}; });
    bad([](TrainConfig& x) { x.batch_size = 0; });
    CHECK(variant_name({}) == "full");
    CHECK(variant_name({false, true, false}) == "no_r2");
}

TEST_CASE("config text round trip and merging") {
    TrainConfig c;
    c.beta = 0.25;
    c.kernel_widths = {1, 3};
    c.ablation.no_triplet = true;
    c.task = Task::pi;
    CHECK(parse_config(format_config(c)) == c);
    TrainConfig m;
    merge_config(m, "# comment\nbeta = 0.75\n\nepochs=3  # trailing\n");
    CHECK(m.beta == 0.75);
    CHECK(m.epochs == 3);
    try {
        merge_config(m, "beta=0.5\nbogus=1\n", "cfg");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
    }
    CHECK_THROWS_AS(merge_config(m, "epochs=many\n"), ParseError);
    CHECK_THROWS_AS(merge_config(m, "no equals sign\n"), ParseError);
}
