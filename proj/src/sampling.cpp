#include "r2net/sampling.hpp"

#include <algorithm>
#include <string>

#include "r2net/errors.hpp"

namespace r2net {

TripletSampler::TripletSampler(const Dataset& dataset, std::uint64_t seed)
    : dataset_(&dataset), rng_(seed), by_label_(num_labels(dataset.task)) {
    for (std::size_t i = 0; i < dataset.size(); ++i) by_label_.at(dataset.pairs[i].label).push_back(i);
    std::size_t present = 0;
    for (std::size_t label = 0; label < by_label_.size(); ++label) {
        if (by_label_[label].empty()) continue;
        ++present;
        if (by_label_[label].size() < 2) {
            throw SamplingError("label '" + std::string(label_names(dataset.task)[label]) +
                                "' has a single example; triplets need at least two");
        }
    }
    if (present < 2) throw SamplingError("triplet sampling needs at least two distinct labels");
}

TripletIndices TripletSampler::next_indices() {
    TripletIndices t;
    t.anchor = rng_.below(dataset_->size());
    const std::size_t label = dataset_->pairs[t.anchor].label;
    const auto& same = by_label_[label];
    // Uniform over same-label examples other than the anchor.
    std::size_t pick = rng_.below(same.size() - 1);
    const auto self = static_cast<std::size_t>(std::find(same.begin(), same.end(), t.anchor) - same.begin());
    if (pick >= self) ++pick;
    t.positive = same[pick];
    const std::size_t others = dataset_->size() - same.size();
    std::size_t offset = rng_.below(others);
    for (std::size_t l = 0; l < by_label_.size(); ++l) {
        if (l == label) continue;
        if (offset < by_label_[l].size()) {
            t.negative = by_label_[l][offset];
            break;
        }
        offset -= by_label_[l].size();
    }
    return t;
}

TripletExample TripletSampler::next() { return materialize(*dataset_, next_indices()); }

std::vector<TripletIndices> TripletSampler::next_batch(std::size_t batch_size) {
    std::vector<TripletIndices> batch;
    batch.reserve(batch_size);
    for (std::size_t i = 0; i < batch_size; ++i) batch.push_back(next_indices());
    return batch;
}

TripletExample materialize(const Dataset& dataset, const TripletIndices& indices) {
    return {dataset.pairs.at(indices.anchor), dataset.pairs.at(indices.positive), dataset.pairs.at(indices.negative)};
}

std::array<R2Slots, 2> sample_r2_slots(Rng& rng) {
    static constexpr std::array<R2Slots, 3> kCombinations{{
        {TripletSlot::anchor, TripletSlot::positive, 1},
        {TripletSlot::anchor, TripletSlot::negative, 0},
        {TripletSlot::positive, TripletSlot::negative, 0},
    }};
    const std::size_t excluded = rng.below(3);
    std::array<R2Slots, 2> out{};
    std::size_t k = 0;
    for (std::size_t i = 0; i < 3; ++i) {
        if (i != excluded) out[k++] = kCombinations[i];
    }
    return out;
}

namespace {
const SentencePair& slot_pair(const TripletExample& t, TripletSlot slot) {
    switch (slot) {
        case TripletSlot::anchor: return t.anchor;
        case TripletSlot::positive: return t.positive;
        default: return t.negative;
    }
}
}  // namespace

std::array<R2Group, 2> sample_r2_groups(const TripletExample& triplet, Rng& rng) {
    const auto slots = sample_r2_slots(rng);
    std::array<R2Group, 2> groups;
    for (std::size_t i = 0; i < 2; ++i) {
        const SentencePair& a = slot_pair(triplet, slots[i].first);
        const SentencePair& b = slot_pair(triplet, slots[i].second);
        groups[i] = {a, b, a.label == b.label ? 1 : 0};
    }
    return groups;
}

std::array<R2Group, 2> sample_r2_groups(const TripletExample& triplet, std::uint64_t seed) {
    Rng rng(seed);
    return sample_r2_groups(triplet, rng);
}

}  // namespace r2net
