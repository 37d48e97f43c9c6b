#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "r2net/dataset.hpp"
#include "r2net/losses.hpp"
#include "r2net/model.hpp"
#include "r2net/sampling.hpp"
#include "r2net/train_config.hpp"

namespace r2net {

// Adam with bias correction over a fixed list of leaf tensors.
class Adam {
public:
    Adam(std::vector<Tensor> params, double learning_rate, double beta1 = 0.9, double beta2 = 0.999,
         double eps = 1e-8);

    // Applies one update from the current gradients; missing gradients count as zero.
    void step();
    std::size_t steps() const { return t_; }

private:
    std::vector<Tensor> params_;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
    double lr_, beta1_, beta2_, eps_;
    std::size_t t_ = 0;
};

// Triplets plus the two relation-of-relation groups drawn for each.
struct TripletBatch {
    std::vector<TripletIndices> triplets;
    std::vector<std::array<R2Slots, 2>> groups;
};

TripletBatch draw_batch(TripletSampler& sampler, Rng& group_rng, std::size_t batch_size);

struct BatchLoss {
    Tensor total;
    std::vector<TripletLossTerms> terms;
    std::vector<LossBreakdown> parts;
    std::vector<double> d_ap;
    std::vector<double> d_an;
};

// Three forward passes per triplet through one shared model. Ablated terms
// are left undefined in `terms` and contribute nothing to `total`.
BatchLoss batch_loss(const R2Net& model, const TrainConfig& config, std::span<const InputSequence> inputs,
                     const Dataset& dataset, const TripletBatch& batch);

struct StepRecord {
    std::size_t step = 0;
    std::size_t epoch = 0;
    LossBreakdown loss;  // batch means of the parts
};

struct EpochRecord {
    std::size_t epoch = 0;
    double matching_accuracy = 0.0;
    double r2_accuracy = 0.0;
    double mean_d_ap = 0.0;
    double mean_d_an = 0.0;
    std::optional<double> valid_accuracy;
};

struct MetricsLog {
    std::vector<StepRecord> steps;
    std::vector<EpochRecord> epochs;

    // One JSON object per line; step records then epoch records in order.
    std::string to_jsonl() const;
    void save(const std::filesystem::path& path) const;
};

struct EvalResult {
    double matching_accuracy = 0.0;
    double r2_accuracy = 0.0;
    double mean_d_ap = 0.0;
    double mean_d_an = 0.0;
    std::size_t pairs = 0;
    std::size_t groups = 0;
};

double accuracy(std::span<const std::size_t> predicted, std::span<const std::size_t> gold);

// Fused representations for every pair, without recording a graph.
std::vector<std::vector<double>> represent_all(const R2Net& model, const Dataset& dataset);

// Matching accuracy over every pair. R2 accuracy and triplet distances over
// dataset.size() triplets (two groups each) drawn with `eval_seed`; those are
// left at zero when the dataset cannot be triplet-sampled.
EvalResult evaluate(const R2Net& model, const Dataset& dataset, std::uint64_t eval_seed);

struct TrainResult {
    R2Net model;
    MetricsLog log;
};

// Returning false stops training after that epoch.
using EpochCallback = std::function<bool(const EpochRecord&)>;

// Vocabulary from the training tokens; model, triplet stream and group
// stream seeded from config.seed. With `valid`, the parameters of the epoch
// with the best validation accuracy are returned.
TrainResult train(const TrainConfig& config, const Dataset& train_set, const Dataset* valid = nullptr,
                  const EpochCallback& on_epoch = {});

}  // namespace r2net
