#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "r2net/errors.hpp"
#include "r2net/synthetic.hpp"
#include "r2net/trainer.hpp"
#include "small_config.hpp"

using namespace r2net;

namespace {

struct Fixture {
    Dataset data;
    TrainConfig config;
    R2Net model;
    std::vector<InputSequence> inputs;
    TripletBatch batch;

    explicit Fixture(std::uint64_t seed, TrainConfig cfg = testing::small_config())
        : data(generate_synthetic(24, Task::nli, seed)),
          config(cfg),
          model(build(data, cfg, seed)) {
        for (const auto& p : data.pairs) inputs.push_back(model.input_for(p));
        TripletSampler sampler(data, seed + 1);
        Rng rng(seed + 2);
        batch = draw_batch(sampler, rng, 4);
    }

    static R2Net build(const Dataset& d, const TrainConfig& c, std::uint64_t seed) {
        const auto tokens = d.all_tokens();
        Vocabulary vocab = Vocabulary::from_tokens(tokens);
        const auto mc = make_model_config(c, vocab.size());
        return R2Net(mc, std::move(vocab), seed);
    }

    BatchLoss loss() const { return batch_loss(model, config, inputs, data, batch); }
};

std::vector<std::vector<double>> grads(const ParamStore& store) {
    std::vector<std::vector<double>> out;
    for (const Tensor& t : store.tensors()) {
        out.push_back(t.has_grad() ? testing::to_vector(t.grad()) : std::vector<double>(t.size(), 0.0));
    }
    return out;
}

}  // namespace

TEST_CASE("Adam matches a hand-rolled update") {
    Tensor p = Tensor::vector({1.0, -2.0}, true);
    Adam adam({p}, 0.1, 0.9, 0.999, 1e-8);
    double m[2] = {0, 0}, v[2] = {0, 0}, x[2] = {1.0, -2.0};
    for (int t = 1; t <= 3; ++t) {
        p.zero_grad();
        backward(sum(p * p));
        adam.step();
        for (int i = 0; i < 2; ++i) {
            const double g = 2 * x[i];
            m[i] = 0.9 * m[i] + 0.1 * g;
            v[i] = 0.999 * v[i] + 0.001 * g * g;
            const double mh = m[i] / (1 - std::pow(0.9, t)), vh = v[i] / (1 - std::pow(0.999, t));
            x[i] -= 0.1 * mh / (std::sqrt(vh) + 1e-8);
        }
        testing::check_close(p.values(), {x[0], x[1]}, 1e-15);
    }
    CHECK(adam.steps() == 3);
}

TEST_CASE("one small step on a frozen batch lowers the loss") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        Fixture f(seed);
        const BatchLoss before = f.loss();
        backward(before.total);
        Adam adam(f.model.params().tensors(), 1e-4);
        adam.step();
        const BatchLoss after = f.loss();
        INFO("seed " << seed);
        CHECK(after.total.item() < before.total.item());
    }
}

TEST_CASE("batch loss shares parameters and matches its breakdown") {
    Fixture f(3);
    const auto sum_before = f.model.params().checksum();
    const BatchLoss l = f.loss();
    CHECK(f.model.params().checksum() == sum_before);
    CHECK(l.terms.size() == 4);
    CHECK(std::abs(l.total.item() - total_loss(l.parts, f.config.beta)) <= 1e-12);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(std::abs(l.parts[i].triplet - triplet_loss(l.d_ap[i], l.d_an[i], f.config.margin)) <= 1e-12);
        for (double x : l.parts[i].matching) CHECK(x >= 0.0);
        CHECK(l.parts[i].total >= 0.0);
    }
}

TEST_CASE("no_r2 gradients equal the full gradients minus the R2 terms") {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        TrainConfig ablated = testing::small_config();
        ablated.ablation.no_r2 = true;
        Fixture f(seed, ablated);
        backward(f.loss().total);
        const auto g_ablated = grads(f.model.params());
        f.model.params().zero_grad();

        TrainConfig full = ablated;
        full.ablation.no_r2 = false;
        const BatchLoss l = batch_loss(f.model, full, f.inputs, f.data, f.batch);
        Tensor r2_sum;
        for (const auto& t : l.terms) {
            const Tensor pair = scale(t.r2[0] + t.r2[1], 0.5);
            r2_sum = r2_sum.defined() ? r2_sum + pair : pair;
        }
        const double n = static_cast<double>(l.terms.size());
        backward(l.total - scale(r2_sum, (1.0 - full.beta) / n));
        const auto g_manual = grads(f.model.params());
        for (std::size_t i = 0; i < g_manual.size(); ++i) {
            for (std::size_t j = 0; j < g_manual[i].size(); ++j) {
                CHECK(std::abs(g_manual[i][j] - g_ablated[i][j]) <= 1e-12);
            }
        }
    }
}

TEST_CASE("beta one leaves relation heads without gradient") {
    TrainConfig c = testing::small_config();
    c.beta = 1.0;
    Fixture f(4, c);
    backward(f.loss().total);
    for (const auto& [name, t] : f.model.params().entries()) {
        if (name.rfind("heads.relation", 0) == 0 || name.rfind("heads.r2_mlp", 0) == 0 ||
            name.rfind("heads.distance", 0) == 0) {
            INFO(name);
            if (t.has_grad()) {
                for (double g : t.grad()) CHECK(g == 0.0);
            }
        }
    }
}

TEST_CASE("ablation flags remove the local encoder and loss terms") {
    TrainConfig c = testing::small_config();
    c.ablation = {true, true, true};
    Fixture f(5, c);
    CHECK(f.model.local() == nullptr);
    CHECK(f.model.config().representation_dim() == c.dim);
    const BatchLoss l = f.loss();
    for (const auto& t : l.terms) {
        CHECK_FALSE(t.r2[0].defined());
        CHECK_FALSE(t.triplet.defined());
    }
    CHECK(l.d_ap.size() == 4);
    CHECK(std::abs(l.total.item() - total_loss(l.parts, c.beta)) <= 1e-12);
}

TEST_CASE("training is deterministic and its log is self-consistent") {
    const Dataset d = generate_synthetic(24, Task::nli, 6);
    TrainConfig c = testing::small_config();
    c.epochs = 3;
    const TrainResult a = train(c, d);
    const TrainResult b = train(c, d);
    CHECK(a.log.to_jsonl() == b.log.to_jsonl());
    CHECK(a.model.params().checksum() == b.model.params().checksum());
    REQUIRE(a.log.steps.size() == 3 * 6);
    REQUIRE(a.log.epochs.size() == 3);
    for (std::size_t i = 0; i < a.log.steps.size(); ++i) {
        const StepRecord& s = a.log.steps[i];
        CHECK(s.step == i);
        CHECK(std::abs(combine(s.loss, s.loss.beta) - s.loss.total) <= 1e-10);
    }
    c.seed = 8;
    CHECK(train(c, d).log.to_jsonl() != a.log.to_jsonl());
}

TEST_CASE("metrics log records are JSON lines") {
    const Dataset d = generate_synthetic(24, Task::nli, 6);
    TrainConfig c = testing::small_config();
    c.epochs = 1;
    const std::string text = train(c, d).log.to_jsonl();
    CHECK(text.rfind("{\"type\":\"step\",\"step\":0,\"epoch\":1,\"matching\":[", 0) == 0);
    CHECK(text.find("\"type\":\"epoch\"") != std::string::npos);
    CHECK(text.find("\"r2_accuracy\"") != std::string::npos);
}

TEST_CASE("validation picks the best epoch and callbacks can stop early") {
    const Dataset d = generate_synthetic(24, Task::nli, 9);
    const Dataset v = generate_synthetic(12, Task::nli, 10);
    TrainConfig c = testing::small_config();
    c.epochs = 4;
    std::size_t calls = 0;
    const TrainResult r = train(c, d, &v, [&](const EpochRecord&) { return ++calls < 2; });
    CHECK(calls == 2);
    CHECK(r.log.epochs.size() == 2);
    CHECK(r.log.epochs[0].valid_accuracy.has_value());
}

TEST_CASE("non-finite losses abort with the step index") {
    const Dataset d = generate_synthetic(24, Task::nli, 9);
    TrainConfig c = testing::small_config();
    c.init_scale = 1e300;
    try {
        train(c, d);
        FAIL("expected divergence");
    } catch (const TrainingDiverged& e) {
        CHECK(e.step() == 0);
    }
}

TEST_CASE("accuracy helper") {
    const std::vector<std::size_t> gold{0, 1, 2, 1};
    CHECK(accuracy(gold, gold) == 1.0);
    CHECK(accuracy(std::vector<std::size_t>{0, 0, 0, 0}, gold) == 0.25);
    CHECK_THROWS_AS(accuracy(std::vector<std::size_t>{0}, gold), ContractError);
    Rng rng(3);
    std::vector<std::size_t> g, p;
    for (int i = 0; i < 30000; ++i) {
        g.push_back(rng.below(3));
        p.push_back(rng.below(3));
    }
    const double sigma = std::sqrt(1.0 / 3 * 2.0 / 3 / 30000);
    CHECK(std::abs(accuracy(p, g) - 1.0 / 3) <= 3 * sigma);
}

TEST_CASE("fresh parameters score near chance") {
    const Dataset d = generate_synthetic(300, Task::nli, 12);
    const double sigma = std::sqrt(1.0 / 3 * 2.0 / 3 / 300);
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const R2Net model = Fixture::build(d, TrainConfig{}, seed);
        const EvalResult r = evaluate(model, d, 5);
        CHECK(std::abs(r.matching_accuracy - 1.0 / 3) <= 3 * sigma);
        CHECK(r.groups == 600);
    }
}

TEST_CASE("evaluation is repeatable") {
    const Dataset d = generate_synthetic(30, Task::nli, 13);
    const R2Net model = Fixture::build(d, testing::small_config(), 1);
    const EvalResult a = evaluate(model, d, 5), b = evaluate(model, d, 5);
    CHECK(a.mean_d_ap == b.mean_d_ap);
    CHECK(a.r2_accuracy == b.r2_accuracy);
}
