#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "r2net/dataset.hpp"

namespace r2net {

struct NounEntry {
    std::string noun;
    std::string hypernym;
    std::string synonym;  // empty for objects

    bool operator==(const NounEntry&) const = default;
};

// Closed word lists driving the template grammar. The built-in copy is
// compiled from resources/lexicon/*.txt.
struct Lexicon {
    std::vector<NounEntry> subjects;
    std::vector<NounEntry> objects;
    std::vector<std::pair<std::string, std::string>> verbs;    // verb, synonym
    std::vector<std::pair<std::string, std::string>> numbers;  // exact, approximate
    std::string negation_adverb;
    std::string negation_subject;
    std::string negation_determiner;
    std::vector<std::vector<std::string>> clauses;

    static Lexicon builtin();
    // Reads subjects.txt, objects.txt, verbs.txt, numbers.txt, negations.txt
    // and clauses.txt from `dir`.
    static Lexicon load(const std::filesystem::path& dir);

    std::vector<std::string> negation_words() const;

    bool operator==(const Lexicon&) const = default;
};

// Template grammar over the lexicon. Premise: "the SUBJ VERB the OBJ" or
// "the SUBJ VERB NUM OBJs".
//   entailment:    a noun becomes its hypernym, or a number its approximate
//   contradiction: a negation word is inserted
//   neutral:       an unrelated clause is appended
//   yes (pi):      synonym substitution
//   no (pi):       a noun is swapped for a different one
// Labels are balanced to within one; (n, task, seed) fixes the output.
Dataset generate_synthetic(std::size_t n, Task task, std::uint64_t seed, const Lexicon& lexicon = Lexicon::builtin());

}  // namespace r2net
