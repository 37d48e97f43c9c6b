#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "r2net/dataset.hpp"
#include "r2net/model.hpp"
#include "r2net/train_config.hpp"

namespace r2net {

// Embedding file: a "dim=<d>" header, then one line per pair holding d
// comma-separated reals followed by the label name.
struct EmbeddingTable {
    std::size_t dim = 0;
    std::vector<std::vector<double>> vectors;
    std::vector<std::string> labels;

    std::size_t size() const { return vectors.size(); }
    bool operator==(const EmbeddingTable&) const = default;
};

EmbeddingTable embed_dataset(const R2Net& model, const Dataset& dataset);
void write_embeddings(const EmbeddingTable& table, std::ostream& out);
EmbeddingTable read_embeddings(std::istream& in, const std::string& source = "<stream>");
void export_embeddings(const R2Net& model, const Dataset& dataset, const std::filesystem::path& path);
EmbeddingTable load_embeddings(const std::filesystem::path& path);

// Mean within-class pairwise distance over mean cross-class pairwise
// distance. Throws MetricError for fewer than two classes, a class with a
// single point, or zero cross-class spread.
double separation_metric(const EmbeddingTable& table);

double median(std::vector<double> values);

struct AblationRow {
    std::string variant;
    std::vector<double> accuracy;    // per seed, held-out matching accuracy
    std::vector<double> separation;  // per seed, on held-out embeddings
    double median_accuracy = 0.0;
    double median_separation = 0.0;
};

// The four variants in a fixed order.
std::vector<AblationFlags> ablation_variants();

// Trains every variant on `train_set` for each seed and measures it on
// `test_set`. With `export_dir`, writes <variant>_seed<seed>.emb per run.
std::vector<AblationRow> ablate(const TrainConfig& base, const Dataset& train_set, const Dataset& test_set,
                                const std::vector<std::uint64_t>& seeds,
                                const std::optional<std::filesystem::path>& export_dir = std::nullopt);

std::string format_ablation_table(const std::vector<AblationRow>& rows);

}  // namespace r2net
