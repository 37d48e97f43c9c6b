#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace r2net {

class Vocabulary {
public:
    static constexpr int kPad = 0;
    static constexpr int kUnk = 1;
    static constexpr int kCls = 2;
    static constexpr int kSep = 3;

    // Holds only the four reserved tokens.
    Vocabulary();

    // Reserved tokens followed by the distinct `tokens` in sorted order.
    static Vocabulary from_tokens(std::span<const std::string> tokens);

    int add(const std::string& token);
    // kUnk for tokens not in the vocabulary.
    int id(std::string_view token) const;
    bool contains(std::string_view token) const;
    const std::string& token(int id) const;
    std::size_t size() const { return tokens_.size(); }

    std::vector<int> encode(std::span<const std::string> tokens) const;

    // One token per line, line number == id.
    void save(const std::filesystem::path& path) const;
    static Vocabulary load(const std::filesystem::path& path);

    bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, int> ids_;
};

// Lowercases and splits on whitespace. Empty or blank text is an error.
std::vector<std::string> tokenize(std::string_view text);
// As above, replacing tokens absent from `vocab` with its UNK token.
std::vector<std::string> tokenize(std::string_view text, const Vocabulary& vocab);

}  // namespace r2net
