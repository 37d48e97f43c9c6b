#include "r2net/vocabulary.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>

#include "r2net/errors.hpp"

namespace r2net {

Vocabulary::Vocabulary() {
    for (const char* reserved : {"[PAD]", "[UNK]", "[CLS]", "[SEP]"}) add(reserved);
}

Vocabulary Vocabulary::from_tokens(std::span<const std::string> tokens) {
    Vocabulary vocab;
    std::set<std::string> sorted(tokens.begin(), tokens.end());
    for (const auto& t : sorted) vocab.add(t);
    return vocab;
}

int Vocabulary::add(const std::string& token) {
    if (auto it = ids_.find(token); it != ids_.end()) return it->second;
    const int id = static_cast<int>(tokens_.size());
    tokens_.push_back(token);
    ids_.emplace(token, id);
    return id;
}

int Vocabulary::id(std::string_view token) const {
    auto it = ids_.find(std::string(token));
    return it == ids_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(std::string_view token) const { return ids_.count(std::string(token)) > 0; }

const std::string& Vocabulary::token(int id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
        throw ContractError("token id " + std::to_string(id) + " outside vocabulary of " + std::to_string(tokens_.size()));
    }
    return tokens_[static_cast<std::size_t>(id)];
}

std::vector<int> Vocabulary::encode(std::span<const std::string> tokens) const {
    std::vector<int> ids;
    ids.reserve(tokens.size());
    for (const auto& t : tokens) ids.push_back(id(t));
    return ids;
}

void Vocabulary::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    for (const auto& t : tokens_) out << t << '\n';
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    const Vocabulary reserved;
    if (lines.size() < reserved.size() ||
        !std::equal(reserved.tokens_.begin(), reserved.tokens_.end(), lines.begin())) {
        throw ParseError(path.string(), 1, "vocabulary must start with the reserved tokens");
    }
    Vocabulary vocab;
    for (std::size_t i = reserved.size(); i < lines.size(); ++i) {
        if (lines[i].empty() || vocab.contains(lines[i])) throw ParseError(path.string(), i + 1, "empty or duplicate token");
        vocab.add(lines[i]);
    }
    return vocab;
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (std::isspace(c)) {
            if (!current.empty()) tokens.push_back(std::move(current));
            current.clear();
        } else {
            current.push_back(static_cast<char>(std::tolower(c)));
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    if (tokens.empty()) throw DegenerateInputError("tokenize: empty text");
    return tokens;
}

std::vector<std::string> tokenize(std::string_view text, const Vocabulary& vocab) {
    auto tokens = tokenize(text);
    for (auto& t : tokens) {
        if (!vocab.contains(t)) t = vocab.token(Vocabulary::kUnk);
    }
    return tokens;
}

}  // namespace r2net
