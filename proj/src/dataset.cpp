#include "r2net/dataset.hpp"

#include <array>
#include <fstream>
#include <optional>
#include <sstream>

#include "r2net/errors.hpp"
#include "r2net/vocabulary.hpp"

namespace r2net {

namespace {
constexpr std::array<std::string_view, 3> kNliLabels{"entailment", "contradiction", "neutral"};
constexpr std::array<std::string_view, 2> kPiLabels{"yes", "no"};

std::optional<std::size_t> find_label(Task task, std::string_view name) {
    const auto labels = label_names(task);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == name) return i;
    }
    return std::nullopt;
}
}  // namespace

std::string_view task_name(Task task) { return task == Task::nli ? "nli" : "pi"; }

Task parse_task(std::string_view name) {
    if (name == "nli") return Task::nli;
    if (name == "pi") return Task::pi;
    throw ContractError("unknown task '" + std::string(name) + "' (expected nli or pi)");
}

std::span<const std::string_view> label_names(Task task) {
    if (task == Task::nli) return kNliLabels;
    return kPiLabels;
}

std::size_t num_labels(Task task) { return label_names(task).size(); }

std::size_t parse_label(Task task, std::string_view name) {
    if (auto idx = find_label(task, name)) return *idx;
    throw ContractError("unknown " + std::string(task_name(task)) + " label '" + std::string(name) + "'");
}

std::vector<std::size_t> Dataset::label_counts() const {
    std::vector<std::size_t> counts(num_labels(task), 0);
    for (const auto& p : pairs) ++counts.at(p.label);
    return counts;
}

std::vector<std::string> Dataset::all_tokens() const {
    std::vector<std::string> tokens;
    for (const auto& p : pairs) {
        tokens.insert(tokens.end(), p.s_a.begin(), p.s_a.end());
        tokens.insert(tokens.end(), p.s_b.begin(), p.s_b.end());
    }
    return tokens;
}

std::string join_tokens(std::span<const std::string> tokens) {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) out.push_back(' ');
        out += tokens[i];
    }
    return out;
}

void write_dataset(const Dataset& dataset, std::ostream& out) {
    const auto labels = label_names(dataset.task);
    for (const auto& p : dataset.pairs) {
        out << join_tokens(p.s_a) << '\t' << join_tokens(p.s_b) << '\t' << labels[p.label] << '\n';
    }
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    write_dataset(dataset, out);
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

Dataset read_dataset(std::istream& in, const std::string& source) {
    Dataset dataset;
    std::optional<Task> task;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            const std::size_t tab = line.find('\t', start);
            fields.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
            if (tab == std::string::npos) break;
            start = tab + 1;
        }
        if (fields.size() != 3) {
            throw ParseError(source, line_no, "expected 3 tab-separated fields, found " + std::to_string(fields.size()));
        }
        const std::string& label = fields[2];
        if (!task) {
            if (find_label(Task::nli, label)) {
                task = Task::nli;
            } else if (find_label(Task::pi, label)) {
                task = Task::pi;
            } else {
                throw ParseError(source, line_no, "unknown label '" + label + "'");
            }
        }
        const auto idx = find_label(*task, label);
        if (!idx) throw ParseError(source, line_no, "unknown label '" + label + "' for " + std::string(task_name(*task)) + " data");
        SentencePair pair;
        try {
            pair.s_a = tokenize(fields[0]);
            pair.s_b = tokenize(fields[1]);
        } catch (const DegenerateInputError&) {
            throw ParseError(source, line_no, "empty sentence");
        }
        pair.label = *idx;
        dataset.pairs.push_back(std::move(pair));
    }
    dataset.task = task.value_or(Task::nli);
    return dataset;
}

Dataset load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return read_dataset(in, path.string());
}

}  // namespace r2net
