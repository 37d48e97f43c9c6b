#include "r2net/gradient_suite.hpp"

#include <algorithm>
#include <memory>
#include <stdexcept>

#include "r2net/encoder_global.hpp"
#include "r2net/encoder_local.hpp"
#include "r2net/heads.hpp"
#include "r2net/losses.hpp"
#include "r2net/model.hpp"
#include "r2net/ops.hpp"
#include "r2net/rng.hpp"
#include "r2net/sampling.hpp"
#include "r2net/synthetic.hpp"
#include "r2net/trainer.hpp"

namespace r2net {

namespace {

Tensor random_leaf(Rng& rng, Shape shape, double lo = -1.0, double hi = 1.0) {
    std::vector<double> v(element_count(shape));
    for (double& x : v) x = rng.uniform(lo, hi);
    return Tensor(std::move(shape), std::move(v), true);
}

Tensor random_probe(Rng& rng, const Shape& shape) {
    std::vector<double> v(element_count(shape));
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
    return Tensor(shape, std::move(v));
}

// Contracts an op's output with a fixed random probe so every output
// coordinate carries a distinct weight.
GradientProblem probed(Rng& rng, std::vector<Tensor> params, std::function<Tensor()> op) {
    Shape shape;
    {
        NoGradGuard guard;
        shape = op().shape();
    }
    const Tensor probe = random_probe(rng, shape);
    return {[op, probe] { return sum(op() * probe); }, std::move(params), {}};
}

using Builder = std::function<GradientProblem(Rng&)>;

GradientCase make_case(std::string name, Builder builder) {
    return {std::move(name), [builder](std::uint64_t seed) {
                Rng rng(derive_seed(seed, 0x67726164));
                return builder(rng);
            }};
}

Mask random_mask(Rng& rng, std::size_t n, std::size_t min_true) {
    Mask m(n, false);
    for (std::size_t i = 0; i < n; ++i) m[i] = rng.below(2) == 1;
    for (std::size_t i = 0; i < min_true; ++i) m[i] = true;
    return m;
}

// Leaves away from relu/max kinks: magnitudes at least 0.05.
Tensor kink_free_leaf(Rng& rng, Shape shape) {
    Tensor t = random_leaf(rng, std::move(shape), 0.05, 1.0);
    for (double& x : t.mutable_values()) {
        if (rng.below(2) == 0) x = -x;
    }
    return t;
}

TransformerBlockParams block_with(ParamStore& store, std::size_t dim, std::size_t heads, std::size_t ff, Rng& rng) {
    TransformerBlockParams p = make_block_params(store, "block", dim, heads, ff, rng, 0.5);
    for (auto [name, t] : store.entries()) {
        if (name.find("gamma") != std::string::npos) {
            for (double& x : t.mutable_values()) x = rng.uniform(0.5, 1.5);
        }
    }
    return p;
}

GradientProblem full_loss_problem(std::uint64_t seed) {
    auto train_set = std::make_shared<Dataset>(generate_synthetic(12, Task::nli, derive_seed(seed, 1)));
    TrainConfig config;
    config.dim = 8;
    config.heads = 2;
    config.ff_dim = 16;
    config.layers = 2;
    config.mlp_dim = 8;
    config.init_scale = 0.5;
    config.batch_size = 2;
    config.seed = seed;
    const auto tokens = train_set->all_tokens();
    auto model = std::make_shared<R2Net>(make_model_config(config, Vocabulary::from_tokens(tokens).size()),
                                         Vocabulary::from_tokens(tokens), derive_seed(seed, 2));
    auto inputs = std::make_shared<std::vector<InputSequence>>();
    for (const auto& pair : train_set->pairs) inputs->push_back(model->input_for(pair));
    TripletSampler sampler(*train_set, derive_seed(seed, 3));
    Rng group_rng(derive_seed(seed, 4));
    auto batch = std::make_shared<TripletBatch>(draw_batch(sampler, group_rng, 2));
    GradientProblem problem;
    problem.params = model->params().tensors();
    problem.loss = [model, config, inputs, train_set, batch] {
        return batch_loss(*model, config, *inputs, *train_set, *batch).total;
    };
    problem.options.max_coords_per_tensor = 12;
    problem.options.skip_nonsmooth = true;
    return problem;
}

}  // namespace

std::vector<GradientCase> gradient_cases() {
    std::vector<GradientCase> cases;
    cases.push_back(make_case("matmul", [](Rng& rng) {
        Tensor a = random_leaf(rng, {3, 4}), b = random_leaf(rng, {4, 2});
        return probed(rng, {a, b}, [a, b] { return matmul(a, b); });
    }));
    cases.push_back(make_case("transpose", [](Rng& rng) {
        Tensor a = random_leaf(rng, {3, 4});
        return probed(rng, {a}, [a] { return transpose(a); });
    }));
    cases.push_back(make_case("reshape", [](Rng& rng) {
        Tensor a = random_leaf(rng, {3, 4});
        return probed(rng, {a}, [a] { return reshape(a, {2, 6}); });
    }));
    cases.push_back(make_case("linear", [](Rng& rng) {
        Tensor x = random_leaf(rng, {5}), w = random_leaf(rng, {5, 3}), b = random_leaf(rng, {3});
        return probed(rng, {x, w, b}, [x, w, b] { return linear(x, w, b); });
    }));
    cases.push_back(make_case("add", [](Rng& rng) {
        Tensor a = random_leaf(rng, {2, 3}), b = random_leaf(rng, {2, 3});
        return probed(rng, {a, b}, [a, b] { return a + b; });
    }));
    cases.push_back(make_case("sub", [](Rng& rng) {
        Tensor a = random_leaf(rng, {2, 3}), b = random_leaf(rng, {2, 3});
        return probed(rng, {a, b}, [a, b] { return a - b; });
    }));
    cases.push_back(make_case("mul", [](Rng& rng) {
        Tensor a = random_leaf(rng, {2, 3}), b = random_leaf(rng, {2, 3});
        return probed(rng, {a, b}, [a, b] { return a * b; });
    }));
    cases.push_back(make_case("add_bias", [](Rng& rng) {
        Tensor x = random_leaf(rng, {4, 3}), b = random_leaf(rng, {3});
        return probed(rng, {x, b}, [x, b] { return add_bias(x, b); });
    }));
    cases.push_back(make_case("scale", [](Rng& rng) {
        Tensor x = random_leaf(rng, {4});
        return probed(rng, {x}, [x] { return scale(x, -1.7); });
    }));
    cases.push_back(make_case("add_scalar", [](Rng& rng) {
        Tensor x = random_leaf(rng, {4});
        return probed(rng, {x}, [x] { return add_scalar(x, 0.3); });
    }));
    cases.push_back(make_case("scale_by", [](Rng& rng) {
        Tensor x = random_leaf(rng, {2, 3}), s = random_leaf(rng, {1});
        return probed(rng, {x, s}, [x, s] { return scale_by(x, s); });
    }));
    cases.push_back(make_case("relu", [](Rng& rng) {
        Tensor x = kink_free_leaf(rng, {3, 4});
        return probed(rng, {x}, [x] { return relu(x); });
    }));
    cases.push_back(make_case("log", [](Rng& rng) {
        Tensor x = random_leaf(rng, {5}, 0.2, 2.0);
        return probed(rng, {x}, [x] { return log(x); });
    }));
    cases.push_back(make_case("clamped_log", [](Rng& rng) {
        Tensor x = random_leaf(rng, {5}, 0.2, 2.0);
        return probed(rng, {x}, [x] { return clamped_log(x, 1e-12); });
    }));
    cases.push_back(make_case("sum", [](Rng& rng) {
        Tensor x = random_leaf(rng, {2, 3});
        return probed(rng, {x}, [x] { return sum(x); });
    }));
    cases.push_back(make_case("mean", [](Rng& rng) {
        Tensor x = random_leaf(rng, {2, 3});
        return probed(rng, {x}, [x] { return mean(x); });
    }));
    cases.push_back(make_case("pick", [](Rng& rng) {
        Tensor x = random_leaf(rng, {2, 3});
        return probed(rng, {x}, [x] { return pick(x, 4); });
    }));
    cases.push_back(make_case("softmax_rows", [](Rng& rng) {
        Tensor x = random_leaf(rng, {3, 4}, -2.0, 2.0);
        return probed(rng, {x}, [x] { return softmax(x, 1); });
    }));
    cases.push_back(make_case("softmax_columns", [](Rng& rng) {
        Tensor x = random_leaf(rng, {3, 4}, -2.0, 2.0);
        return probed(rng, {x}, [x] { return softmax(x, 0); });
    }));
    cases.push_back(make_case("softmax_vector", [](Rng& rng) {
        Tensor x = random_leaf(rng, {5}, -2.0, 2.0);
        return probed(rng, {x}, [x] { return softmax(x, 0); });
    }));
    cases.push_back(make_case("masked_softmax", [](Rng& rng) {
        Tensor x = random_leaf(rng, {3, 5}, -2.0, 2.0);
        const Mask keep = random_mask(rng, 5, 1);
        return probed(rng, {x}, [x, keep] { return masked_softmax(x, keep); });
    }));
    cases.push_back(make_case("layer_norm", [](Rng& rng) {
        Tensor x = random_leaf(rng, {3, 6}), g = random_leaf(rng, {6}, 0.5, 1.5), b = random_leaf(rng, {6});
        return probed(rng, {x, g, b}, [x, g, b] { return layer_norm(x, g, b, 1e-5); });
    }));
    cases.push_back(make_case("embedding_lookup", [](Rng& rng) {
        Tensor table = random_leaf(rng, {5, 3});
        const std::vector<int> ids{4, 0, 2, 0};
        return probed(rng, {table}, [table, ids] { return embedding_lookup(table, ids); });
    }));
    cases.push_back(make_case("concat_rows", [](Rng& rng) {
        Tensor a = random_leaf(rng, {2, 3}), b = random_leaf(rng, {1, 3});
        return probed(rng, {a, b}, [a, b] { return concat({a, b}, 0); });
    }));
    cases.push_back(make_case("concat_columns", [](Rng& rng) {
        Tensor a = random_leaf(rng, {2, 3}), b = random_leaf(rng, {2, 2});
        return probed(rng, {a, b}, [a, b] { return concat({a, b}, 1); });
    }));
    cases.push_back(make_case("slice", [](Rng& rng) {
        Tensor x = random_leaf(rng, {4, 5});
        return probed(rng, {x}, [x] { return slice(x, 1, 1, 4); });
    }));
    cases.push_back(make_case("row", [](Rng& rng) {
        Tensor x = random_leaf(rng, {4, 3});
        return probed(rng, {x}, [x] { return row(x, 2); });
    }));
    for (std::size_t k : {1, 2, 3}) {
        cases.push_back(make_case("conv1d_k" + std::to_string(k), [k](Rng& rng) {
            Tensor x = random_leaf(rng, {5, 3}), w = random_leaf(rng, {k, 3, 2}), b = random_leaf(rng, {2});
            return probed(rng, {x, w, b}, [x, w, b] { return conv1d(x, w, b); });
        }));
    }
    cases.push_back(make_case("masked_max_pool", [](Rng& rng) {
        Tensor x = random_leaf(rng, {6, 3});
        const Mask valid = random_mask(rng, 6, 1);
        return probed(rng, {x}, [x, valid] { return masked_max_pool(x, valid); });
    }));
    cases.push_back(make_case("masked_avg_pool", [](Rng& rng) {
        Tensor x = random_leaf(rng, {6, 3});
        const Mask valid = random_mask(rng, 6, 1);
        return probed(rng, {x}, [x, valid] { return masked_avg_pool(x, valid); });
    }));
    cases.push_back(make_case("euclidean_distance", [](Rng& rng) {
        Tensor a = random_leaf(rng, {4}), b = random_leaf(rng, {4});
        return probed(rng, {a, b}, [a, b] { return euclidean_distance(a, b); });
    }));
    cases.push_back(make_case("cross_entropy", [](Rng& rng) {
        Tensor x = random_leaf(rng, {3}, -2.0, 2.0);
        return probed(rng, {x}, [x] { return cross_entropy(softmax(x, 0), 2); });
    }));
    cases.push_back(make_case("triplet_loss", [](Rng& rng) {
        Tensor d_ap = random_leaf(rng, {1}, 0.5, 1.0), d_an = random_leaf(rng, {1}, 0.0, 0.4);
        return probed(rng, {d_ap, d_an}, [d_ap, d_an] { return triplet_loss(d_ap, d_an, 0.2); });
    }));
    cases.push_back(make_case("transformer_block", [](Rng& rng) {
        auto store = std::make_shared<ParamStore>();
        const TransformerBlockParams p = block_with(*store, 4, 2, 6, rng);
        Tensor x = random_leaf(rng, {3, 4});
        const Mask mask{true, true, false};
        std::vector<Tensor> params = store->tensors();
        params.push_back(x);
        GradientProblem problem = probed(rng, params, [store, p, x, mask] { return transformer_block(x, p, mask); });
        problem.options.skip_nonsmooth = true;
        return problem;
    }));
    cases.push_back(make_case("layer_mix", [](Rng& rng) {
        Tensor a = random_leaf(rng, {2, 3}), b = random_leaf(rng, {2, 3}), logits = random_leaf(rng, {2});
        return probed(rng, {a, b, logits}, [a, b, logits] {
            const std::vector<Tensor> layers{a, b};
            return layer_mix(layers, logits);
        });
    }));
    cases.push_back(make_case("local_encoder", [](Rng& rng) {
        auto store = std::make_shared<ParamStore>();
        LocalEncoderConfig config{4, {1, 2, 3}, 3, 4, 0.5};
        auto encoder = std::make_shared<LocalEncoder>(*store, config, rng);
        Tensor h = random_leaf(rng, {6, 4});
        const Mask mask{true, true, true, true, true, false};
        std::vector<Tensor> params = store->tensors();
        params.push_back(h);
        GradientProblem problem =
            probed(rng, params, [store, encoder, h, mask] { return encoder->encode(h, mask).v_l; });
        problem.options.skip_nonsmooth = true;
        return problem;
    }));
    cases.push_back(make_case("heads", [](Rng& rng) {
        auto store = std::make_shared<ParamStore>();
        auto heads = std::make_shared<MatchingHeads>(*store, HeadsConfig{5, 4, 3, 0.5}, rng);
        Tensor a = random_leaf(rng, {5}), p = random_leaf(rng, {5}), n = random_leaf(rng, {5});
        std::vector<Tensor> params = store->tensors();
        params.insert(params.end(), {a, p, n});
        GradientProblem problem = probed(rng, params, [store, heads, a, p, n] {
            const TripletDistances d = heads->triplet_distances(a, p, n);
            return concat({heads->predict_label(a), heads->predict_r2(heads->r2_features(a, n)), d.d_ap, d.d_an}, 0);
        });
        problem.options.skip_nonsmooth = true;
        return problem;
    }));
    cases.push_back({"full_loss", full_loss_problem});
    return cases;
}

std::vector<GradientCaseReport> run_gradient_suite(std::size_t seeds, double eps) {
    std::vector<GradientCaseReport> reports;
    for (const GradientCase& c : gradient_cases()) {
        GradientCaseReport report{c.name, 0.0, 0, 0};
        for (std::uint64_t seed = 0; seed < seeds; ++seed) {
            GradCheckResult r;
            try {
                GradientProblem problem = c.build(seed);
                problem.options.eps = eps;
                problem.options.seed = seed;
                r = grad_check(problem.loss, problem.params, problem.options);
            } catch (const std::exception& e) {
                throw std::runtime_error("gradient case " + c.name + ", seed " + std::to_string(seed) + ": " +
                                         e.what());
            }
            report.max_rel_error = std::max(report.max_rel_error, r.max_rel_error);
            report.checked += r.checked;
            report.skipped += r.skipped;
        }
        reports.push_back(report);
    }
    return reports;
}

double worst_error(const std::vector<GradientCaseReport>& reports) {
    double worst = 0.0;
    for (const auto& r : reports) worst = std::max(worst, r.max_rel_error);
    return worst;
}

}  // namespace r2net
