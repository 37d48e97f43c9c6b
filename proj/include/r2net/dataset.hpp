#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace r2net {

// nli: entailment / contradiction / neutral. pi: yes / no.
enum class Task { nli, pi };

std::string_view task_name(Task task);
Task parse_task(std::string_view name);
std::span<const std::string_view> label_names(Task task);
std::size_t num_labels(Task task);
// Throws ContractError naming the value when it is not a label of `task`.
std::size_t parse_label(Task task, std::string_view name);

struct SentencePair {
    std::vector<std::string> s_a;
    std::vector<std::string> s_b;
    std::size_t label = 0;

    bool operator==(const SentencePair&) const = default;
};

struct Dataset {
    Task task = Task::nli;
    std::vector<SentencePair> pairs;

    std::size_t size() const { return pairs.size(); }
    std::vector<std::size_t> label_counts() const;
    // Every token of every sentence, for vocabulary construction.
    std::vector<std::string> all_tokens() const;

    bool operator==(const Dataset&) const = default;
};

std::string join_tokens(std::span<const std::string> tokens);

// One pair per line: "<s_a>\t<s_b>\t<label>", UTF-8, LF line endings.
void write_dataset(const Dataset& dataset, std::ostream& out);
void save_dataset(const Dataset& dataset, const std::filesystem::path& path);

// Accepts LF or CRLF. The task is inferred from the label strings; every line
// must use labels of the same task. Malformed lines raise ParseError with
// the line number.
Dataset read_dataset(std::istream& in, const std::string& source = "<stream>");
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace r2net
