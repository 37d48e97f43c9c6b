#include "r2net/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "r2net/errors.hpp"

namespace r2net {

Adam::Adam(std::vector<Tensor> params, double learning_rate, double beta1, double beta2, double eps)
    : params_(std::move(params)), lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(eps) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const Tensor& p : params_) {
        m_.emplace_back(p.size(), 0.0);
        v_.emplace_back(p.size(), 0.0);
    }
}

void Adam::step() {
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
        Tensor& p = params_[i];
        if (!p.has_grad()) continue;
        const auto g = p.grad();
        auto values = p.mutable_values();
        auto& m = m_[i];
        auto& v = v_[i];
        for (std::size_t j = 0; j < values.size(); ++j) {
            m[j] = beta1_ * m[j] + (1.0 - beta1_) * g[j];
            v[j] = beta2_ * v[j] + (1.0 - beta2_) * g[j] * g[j];
            values[j] -= lr_ * (m[j] / c1) / (std::sqrt(v[j] / c2) + eps_);
        }
    }
}

TripletBatch draw_batch(TripletSampler& sampler, Rng& group_rng, std::size_t batch_size) {
    TripletBatch batch;
    batch.triplets = sampler.next_batch(batch_size);
    batch.groups.reserve(batch_size);
    for (std::size_t i = 0; i < batch_size; ++i) batch.groups.push_back(sample_r2_slots(group_rng));
    return batch;
}

namespace {

std::size_t slot_index(const TripletIndices& t, TripletSlot slot) {
    switch (slot) {
        case TripletSlot::anchor: return t.anchor;
        case TripletSlot::positive: return t.positive;
        default: return t.negative;
    }
}

std::size_t argmax(std::span<const double> values) {
    return static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
}

}  // namespace

BatchLoss batch_loss(const R2Net& model, const TrainConfig& config, std::span<const InputSequence> inputs,
                     const Dataset& dataset, const TripletBatch& batch) {
    if (batch.triplets.empty()) throw ContractError("batch_loss: empty batch");
    if (batch.groups.size() != batch.triplets.size()) throw ContractError("batch_loss: groups and triplets differ");
    if (inputs.size() != dataset.size()) throw ContractError("batch_loss: inputs do not match the dataset");
    const MatchingHeads& heads = model.heads();
    BatchLoss out;
    for (std::size_t b = 0; b < batch.triplets.size(); ++b) {
        const TripletIndices& t = batch.triplets[b];
        const std::array<std::size_t, 3> index{t.anchor, t.positive, t.negative};
        std::array<Tensor, 3> v;
        TripletLossTerms terms;
        for (std::size_t k = 0; k < 3; ++k) {
            v[k] = model.represent(inputs[index[k]]).v;
            terms.matching[k] = cross_entropy(heads.predict_label(v[k]), dataset.pairs[index[k]].label);
        }
        if (!config.ablation.no_r2) {
            for (std::size_t g = 0; g < 2; ++g) {
                const R2Slots& slots = batch.groups[b][g];
                const auto first = static_cast<std::size_t>(slots.first);
                const auto second = static_cast<std::size_t>(slots.second);
                const Tensor u = heads.r2_features(v[first], v[second]);
                terms.r2[g] = cross_entropy(heads.predict_r2(u), static_cast<std::size_t>(slots.same));
            }
        }
        if (config.ablation.no_triplet) {
            NoGradGuard guard;
            const TripletDistances d = heads.triplet_distances(v[0], v[1], v[2]);
            out.d_ap.push_back(d.d_ap.item());
            out.d_an.push_back(d.d_an.item());
        } else {
            const TripletDistances d = heads.triplet_distances(v[0], v[1], v[2]);
            terms.triplet = triplet_loss(d.d_ap, d.d_an, config.margin);
            out.d_ap.push_back(d.d_ap.item());
            out.d_an.push_back(d.d_an.item());
        }
        out.parts.push_back(terms.breakdown(config.beta, config.margin));
        out.terms.push_back(std::move(terms));
    }
    out.total = total_loss(std::span<const TripletLossTerms>(out.terms), config.beta);
    return out;
}

namespace {

LossBreakdown mean_parts(std::span<const LossBreakdown> parts, double total) {
    LossBreakdown m;
    const double n = static_cast<double>(parts.size());
    for (const auto& p : parts) {
        for (std::size_t i = 0; i < 3; ++i) m.matching[i] += p.matching[i];
        for (std::size_t i = 0; i < 2; ++i) m.r2[i] += p.r2[i];
        m.triplet += p.triplet;
    }
    for (auto& x : m.matching) x /= n;
    for (auto& x : m.r2) x /= n;
    m.triplet /= n;
    m.beta = parts.front().beta;
    m.margin = parts.front().margin;
    m.total = total;
    return m;
}

}  // namespace

std::string MetricsLog::to_jsonl() const {
    std::ostringstream out;
    for (const StepRecord& s : steps) {
        nlohmann::ordered_json j;
        j["type"] = "step";
        j["step"] = s.step;
        j["epoch"] = s.epoch;
        j["matching"] = s.loss.matching;
        j["r2"] = s.loss.r2;
        j["triplet"] = s.loss.triplet;
        j["beta"] = s.loss.beta;
        j["margin"] = s.loss.margin;
        j["total"] = s.loss.total;
        out << j.dump() << '\n';
    }
    for (const EpochRecord& e : epochs) {
        nlohmann::ordered_json j;
        j["type"] = "epoch";
        j["epoch"] = e.epoch;
        j["matching_accuracy"] = e.matching_accuracy;
        j["r2_accuracy"] = e.r2_accuracy;
        j["mean_d_ap"] = e.mean_d_ap;
        j["mean_d_an"] = e.mean_d_an;
        if (e.valid_accuracy) j["valid_accuracy"] = *e.valid_accuracy;
        out << j.dump() << '\n';
    }
    return out.str();
}

void MetricsLog::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << to_jsonl();
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

double accuracy(std::span<const std::size_t> predicted, std::span<const std::size_t> gold) {
    if (predicted.size() != gold.size()) throw ContractError("accuracy: prediction and gold counts differ");
    if (gold.empty()) throw ContractError("accuracy: no examples");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) hits += predicted[i] == gold[i] ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(gold.size());
}

std::vector<std::vector<double>> represent_all(const R2Net& model, const Dataset& dataset) {
    NoGradGuard guard;
    std::vector<std::vector<double>> out;
    out.reserve(dataset.size());
    for (const SentencePair& pair : dataset.pairs) {
        const Tensor v = model.represent(pair).v;
        out.emplace_back(v.values().begin(), v.values().end());
    }
    return out;
}

namespace {

double matching_accuracy(const R2Net& model, std::span<const std::vector<double>> reps, const Dataset& dataset) {
    std::vector<std::size_t> predicted, gold;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const Tensor probs = model.heads().predict_label(Tensor::vector(reps[i]));
        predicted.push_back(argmax(probs.values()));
        gold.push_back(dataset.pairs[i].label);
    }
    return accuracy(predicted, gold);
}

}  // namespace

EvalResult evaluate(const R2Net& model, const Dataset& dataset, std::uint64_t eval_seed) {
    if (dataset.size() == 0) throw ContractError("evaluate: empty dataset");
    NoGradGuard guard;
    const auto reps = represent_all(model, dataset);
    EvalResult result;
    result.pairs = dataset.size();
    result.matching_accuracy = matching_accuracy(model, reps, dataset);

    std::optional<TripletSampler> sampler;
    try {
        sampler.emplace(dataset, derive_seed(eval_seed, 1));
    } catch (const SamplingError&) {
        return result;
    }
    Rng group_rng(derive_seed(eval_seed, 2));
    const MatchingHeads& heads = model.heads();
    std::size_t r2_hits = 0;
    double d_ap = 0.0, d_an = 0.0;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const TripletIndices t = sampler->next_indices();
        const auto slots = sample_r2_slots(group_rng);
        for (const R2Slots& s : slots) {
            const Tensor u = heads.r2_features(Tensor::vector(reps[slot_index(t, s.first)]),
                                               Tensor::vector(reps[slot_index(t, s.second)]));
            const Tensor probs = heads.predict_r2(u);
            r2_hits += argmax(probs.values()) == static_cast<std::size_t>(s.same) ? 1 : 0;
        }
        const TripletDistances d = heads.triplet_distances(
            Tensor::vector(reps[t.anchor]), Tensor::vector(reps[t.positive]), Tensor::vector(reps[t.negative]));
        d_ap += d.d_ap.item();
        d_an += d.d_an.item();
    }
    const double n = static_cast<double>(dataset.size());
    result.groups = 2 * dataset.size();
    result.r2_accuracy = static_cast<double>(r2_hits) / static_cast<double>(result.groups);
    result.mean_d_ap = d_ap / n;
    result.mean_d_an = d_an / n;
    return result;
}

TrainResult train(const TrainConfig& config, const Dataset& train_set, const Dataset* valid,
                  const EpochCallback& on_epoch) {
    config.validate();
    if (train_set.task != config.task) throw ContractError("train: dataset task does not match config.task");
    if (valid && valid->task != config.task) throw ContractError("train: validation task does not match config.task");

    const auto tokens = train_set.all_tokens();
    Vocabulary vocab = Vocabulary::from_tokens(tokens);
    const ModelConfig model_config = make_model_config(config, vocab.size());
    TrainResult result{R2Net(model_config, std::move(vocab), derive_seed(config.seed, 0)), {}};
    R2Net& model = result.model;

    std::vector<InputSequence> inputs;
    inputs.reserve(train_set.size());
    for (const SentencePair& pair : train_set.pairs) inputs.push_back(model.input_for(pair));

    TripletSampler sampler(train_set, derive_seed(config.seed, 1));
    Rng group_rng(derive_seed(config.seed, 2));
    Adam optimizer(model.params().tensors(), config.learning_rate, config.adam_beta1, config.adam_beta2,
                   config.adam_eps);

    const std::size_t steps_per_epoch = (train_set.size() + config.batch_size - 1) / config.batch_size;
    std::size_t step = 0;
    double best_valid = -1.0;
    std::vector<std::vector<double>> best;
    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        for (std::size_t s = 0; s < steps_per_epoch; ++s) {
            const TripletBatch batch = draw_batch(sampler, group_rng, config.batch_size);
            model.params().zero_grad();
            const BatchLoss loss = batch_loss(model, config, inputs, train_set, batch);
            const double total = loss.total.item();
            if (!std::isfinite(total)) throw TrainingDiverged(step);
            backward(loss.total);
            optimizer.step();
            result.log.steps.push_back({step, epoch, mean_parts(loss.parts, total)});
            ++step;
        }
        const EvalResult eval = evaluate(model, train_set, config.eval_seed);
        EpochRecord record{epoch, eval.matching_accuracy, eval.r2_accuracy, eval.mean_d_ap, eval.mean_d_an, {}};
        if (valid) {
            NoGradGuard guard;
            const auto reps = represent_all(model, *valid);
            record.valid_accuracy = matching_accuracy(model, reps, *valid);
            if (*record.valid_accuracy > best_valid) {
                best_valid = *record.valid_accuracy;
                best = model.params().snapshot();
            }
        }
        result.log.epochs.push_back(record);
        if (on_epoch && !on_epoch(record)) break;
    }
    if (!best.empty()) model.params().restore(best);
    model.params().zero_grad();
    return result;
}

}  // namespace r2net
