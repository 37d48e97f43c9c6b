#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "r2net/dataset.hpp"
#include "r2net/rng.hpp"

namespace r2net {

// Indices into a dataset.
struct TripletIndices {
    std::size_t anchor = 0;
    std::size_t positive = 0;
    std::size_t negative = 0;
};

struct TripletExample {
    SentencePair anchor;
    SentencePair positive;
    SentencePair negative;
};

enum class TripletSlot : std::size_t { anchor = 0, positive = 1, negative = 2 };

// One relation-of-relation group: two of the three pairs of a triplet and
// whether they share a label (same = 1).
struct R2Slots {
    TripletSlot first;
    TripletSlot second;
    int same;
};

struct R2Group {
    SentencePair first;
    SentencePair second;
    int same;
};

// Anchor uniform over the dataset; positive uniform over the other examples
// with the anchor's label; negative uniform over examples with any other label.
class TripletSampler {
public:
    // Throws SamplingError when fewer than two labels are present or a
    // present label has a single example.
    TripletSampler(const Dataset& dataset, std::uint64_t seed);

    TripletIndices next_indices();
    TripletExample next();
    std::vector<TripletIndices> next_batch(std::size_t batch_size);

private:
    const Dataset* dataset_;
    Rng rng_;
    std::vector<std::vector<std::size_t>> by_label_;
};

TripletExample materialize(const Dataset& dataset, const TripletIndices& indices);

// Two of the three combinations (a,p), (a,n), (p,n), drawn without
// replacement; returned in that canonical order.
std::array<R2Slots, 2> sample_r2_slots(Rng& rng);
std::array<R2Group, 2> sample_r2_groups(const TripletExample& triplet, Rng& rng);
std::array<R2Group, 2> sample_r2_groups(const TripletExample& triplet, std::uint64_t seed);

}  // namespace r2net
