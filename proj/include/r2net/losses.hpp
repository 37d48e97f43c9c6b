#pragma once

#include <array>
#include <cstddef>
#include <span>

#include "r2net/tensor.hpp"

namespace r2net {

inline constexpr double kProbabilityFloor = 1e-12;
inline constexpr double kDefaultMargin = 0.2;

// -log max(P[y], 1e-12). Throws ContractError for an out-of-range label.
Tensor cross_entropy(const Tensor& probs, std::size_t label);
double cross_entropy(std::span<const double> probs, std::size_t label);

// max(d_ap - d_an + margin, 0).
Tensor triplet_loss(const Tensor& d_ap, const Tensor& d_an, double margin);
double triplet_loss(double d_ap, double d_an, double margin);

// Numeric loss parts of one triplet (or a batch mean of them).
struct LossBreakdown {
    std::array<double, 3> matching{};  // L_s for anchor, positive, negative
    std::array<double, 2> r2{};        // L_R2 for the two sampled groups
    double triplet = 0.0;              // L_d
    double beta = 0.5;
    double margin = kDefaultMargin;
    double total = 0.0;
};

// beta * mean(matching) + (1 - beta) * (mean(r2) + triplet).
double combine(const LossBreakdown& parts, double beta);
// Sets `total` from the parts and `beta`.
LossBreakdown& finalize(LossBreakdown& parts);

// (1/N) sum_i combine(parts_i, beta). Empty batches are a contract error.
double total_loss(std::span<const LossBreakdown> batch, double beta);

// Graph-side loss parts for one triplet. Undefined r2/triplet tensors stand
// for terms removed by an ablation and contribute exactly zero.
struct TripletLossTerms {
    std::array<Tensor, 3> matching;
    std::array<Tensor, 2> r2;
    Tensor triplet;

    LossBreakdown breakdown(double beta, double margin) const;
};

Tensor total_loss(std::span<const TripletLossTerms> batch, double beta);

}  // namespace r2net
