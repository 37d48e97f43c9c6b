#include "r2net/analysis.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "r2net/errors.hpp"
#include "r2net/trainer.hpp"

namespace r2net {

namespace {

std::string format_real(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

double parse_real(const std::string& text, const std::string& source, std::size_t line) {
    double v = 0.0;
    const char* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end) throw ParseError(source, line, "not a number: '" + text + "'");
    return v;
}

}  // namespace

EmbeddingTable embed_dataset(const R2Net& model, const Dataset& dataset) {
    EmbeddingTable table;
    table.dim = model.config().representation_dim();
    table.vectors = represent_all(model, dataset);
    const auto names = label_names(dataset.task);
    for (const SentencePair& pair : dataset.pairs) table.labels.emplace_back(names[pair.label]);
    return table;
}

void write_embeddings(const EmbeddingTable& table, std::ostream& out) {
    out << "dim=" << table.dim << '\n';
    for (std::size_t i = 0; i < table.size(); ++i) {
        for (double x : table.vectors[i]) out << format_real(x) << ',';
        out << table.labels[i] << '\n';
    }
}

EmbeddingTable read_embeddings(std::istream& in, const std::string& source) {
    EmbeddingTable table;
    std::string line;
    std::size_t line_no = 1;
    if (!std::getline(in, line)) throw ParseError(source, 1, "missing dim header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.rfind("dim=", 0) != 0) throw ParseError(source, 1, "expected 'dim=<d>' header");
    {
        const std::string digits = line.substr(4);
        auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), table.dim);
        if (ec != std::errc() || ptr != digits.data() + digits.size() || table.dim == 0) {
            throw ParseError(source, 1, "bad dimension '" + digits + "'");
        }
    }
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::istringstream fs(line);
        std::string field;
        while (std::getline(fs, field, ',')) fields.push_back(field);
        if (fields.size() != table.dim + 1) {
            throw ParseError(source, line_no,
                             "expected " + std::to_string(table.dim + 1) + " fields, got " +
                                 std::to_string(fields.size()));
        }
        std::vector<double> v;
        v.reserve(table.dim);
        for (std::size_t k = 0; k < table.dim; ++k) v.push_back(parse_real(fields[k], source, line_no));
        if (fields.back().empty()) throw ParseError(source, line_no, "empty label");
        table.vectors.push_back(std::move(v));
        table.labels.push_back(fields.back());
    }
    return table;
}

void export_embeddings(const R2Net& model, const Dataset& dataset, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    write_embeddings(embed_dataset(model, dataset), out);
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

EmbeddingTable load_embeddings(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return read_embeddings(in, path.string());
}

double separation_metric(const EmbeddingTable& table) {
    std::map<std::string, std::size_t> counts;
    for (const auto& label : table.labels) ++counts[label];
    if (counts.size() < 2) throw MetricError("separation_metric: needs at least two classes");
    for (const auto& [label, n] : counts) {
        if (n < 2) throw MetricError("separation_metric: class '" + label + "' has a single point");
    }
    double intra = 0.0, inter = 0.0;
    std::size_t n_intra = 0, n_inter = 0;
    for (std::size_t i = 0; i < table.size(); ++i) {
        for (std::size_t j = i + 1; j < table.size(); ++j) {
            double sq = 0.0;
            for (std::size_t k = 0; k < table.vectors[i].size(); ++k) {
                const double diff = table.vectors[i][k] - table.vectors[j][k];
                sq += diff * diff;
            }
            const double d = std::sqrt(sq);
            if (table.labels[i] == table.labels[j]) {
                intra += d;
                ++n_intra;
            } else {
                inter += d;
                ++n_inter;
            }
        }
    }
    const double mean_inter = inter / static_cast<double>(n_inter);
    if (mean_inter == 0.0) throw MetricError("separation_metric: zero cross-class distance");
    return (intra / static_cast<double>(n_intra)) / mean_inter;
}

double median(std::vector<double> values) {
    if (values.empty()) throw ContractError("median: no values");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::vector<AblationFlags> ablation_variants() {
    return {AblationFlags{}, AblationFlags{true, false, false}, AblationFlags{false, true, false},
            AblationFlags{false, false, true}};
}

std::vector<AblationRow> ablate(const TrainConfig& base, const Dataset& train_set, const Dataset& test_set,
                                const std::vector<std::uint64_t>& seeds,
                                const std::optional<std::filesystem::path>& export_dir) {
    if (seeds.empty()) throw ContractError("ablate: no seeds");
    std::vector<AblationRow> rows;
    for (const AblationFlags& flags : ablation_variants()) {
        AblationRow row;
        row.variant = variant_name(flags);
        for (std::uint64_t seed : seeds) {
            TrainConfig config = base;
            config.ablation = flags;
            config.seed = seed;
            const TrainResult run = train(config, train_set);
            const EmbeddingTable table = embed_dataset(run.model, test_set);
            row.accuracy.push_back(evaluate(run.model, test_set, config.eval_seed).matching_accuracy);
            row.separation.push_back(separation_metric(table));
            if (export_dir) {
                std::filesystem::create_directories(*export_dir);
                const auto path = *export_dir / (row.variant + "_seed" + std::to_string(seed) + ".emb");
                std::ofstream out(path, std::ios::binary);
                if (!out) throw std::runtime_error("cannot write " + path.string());
                write_embeddings(table, out);
            }
        }
        row.median_accuracy = median(row.accuracy);
        row.median_separation = median(row.separation);
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string format_ablation_table(const std::vector<AblationRow>& rows) {
    std::ostringstream out;
    out << std::left << std::setw(12) << "variant" << std::right << std::setw(12) << "accuracy" << std::setw(14)
        << "separation" << '\n';
    out << std::fixed << std::setprecision(4);
    for (const AblationRow& row : rows) {
        out << std::left << std::setw(12) << row.variant << std::right << std::setw(12) << row.median_accuracy
            << std::setw(14) << row.median_separation << '\n';
    }
    return out.str();
}

}  // namespace r2net
