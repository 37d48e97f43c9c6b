#include "r2net/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "r2net/errors.hpp"
#include "r2net/ops.hpp"

namespace r2net {

Tensor cross_entropy(const Tensor& probs, std::size_t label) {
    if (label >= probs.size()) {
        throw ContractError("cross_entropy: label " + std::to_string(label) + " outside " +
                            std::to_string(probs.size()) + " classes");
    }
    return scale(clamped_log(pick(probs, label), kProbabilityFloor), -1.0);
}

double cross_entropy(std::span<const double> probs, std::size_t label) {
    if (label >= probs.size()) {
        throw ContractError("cross_entropy: label " + std::to_string(label) + " outside " +
                            std::to_string(probs.size()) + " classes");
    }
    return -std::log(std::max(probs[label], kProbabilityFloor));
}

Tensor triplet_loss(const Tensor& d_ap, const Tensor& d_an, double margin) {
    return relu(add_scalar(d_ap - d_an, margin));
}

double triplet_loss(double d_ap, double d_an, double margin) { return std::max(d_ap - d_an + margin, 0.0); }

double combine(const LossBreakdown& parts, double beta) {
    const double matching = (parts.matching[0] + parts.matching[1] + parts.matching[2]) / 3.0;
    const double relational = (parts.r2[0] + parts.r2[1]) / 2.0 + parts.triplet;
    return beta * matching + (1.0 - beta) * relational;
}

LossBreakdown& finalize(LossBreakdown& parts) {
    parts.total = combine(parts, parts.beta);
    return parts;
}

double total_loss(std::span<const LossBreakdown> batch, double beta) {
    if (batch.empty()) throw ContractError("total_loss: empty batch");
    double acc = 0.0;
    for (const auto& parts : batch) acc += combine(parts, beta);
    return acc / static_cast<double>(batch.size());
}

LossBreakdown TripletLossTerms::breakdown(double beta, double margin) const {
    LossBreakdown out;
    for (std::size_t i = 0; i < 3; ++i) out.matching[i] = matching[i].item();
    for (std::size_t i = 0; i < 2; ++i) out.r2[i] = r2[i].defined() ? r2[i].item() : 0.0;
    out.triplet = triplet.defined() ? triplet.item() : 0.0;
    out.beta = beta;
    out.margin = margin;
    return finalize(out);
}

Tensor total_loss(std::span<const TripletLossTerms> batch, double beta) {
    if (batch.empty()) throw ContractError("total_loss: empty batch");
    if (!(beta >= 0.0 && beta <= 1.0)) throw ContractError("total_loss: beta must lie in [0, 1]");
    const double n = static_cast<double>(batch.size());
    Tensor total;
    for (const auto& terms : batch) {
        Tensor item = scale(terms.matching[0] + terms.matching[1] + terms.matching[2], beta / 3.0);
        Tensor relational;
        for (const Tensor& r : terms.r2) {
            if (!r.defined()) continue;
            const Tensor half = scale(r, 0.5);
            relational = relational.defined() ? relational + half : half;
        }
        if (terms.triplet.defined()) relational = relational.defined() ? relational + terms.triplet : terms.triplet;
        if (relational.defined()) item = item + scale(relational, 1.0 - beta);
        total = total.defined() ? total + item : item;
    }
    return scale(total, 1.0 / n);
}

}  // namespace r2net
