#include "r2net/synthetic.hpp"

#include <fstream>
#include <sstream>
#include <string_view>

#include "r2net/errors.hpp"
#include "r2net/rng.hpp"
#include "r2net/vocabulary.hpp"

namespace r2net {

namespace lexicon_data {
extern const std::string_view subjects;
extern const std::string_view objects;
extern const std::string_view verbs;
extern const std::string_view numbers;
extern const std::string_view negations;
extern const std::string_view clauses;
}  // namespace lexicon_data

namespace {

using Rows = std::vector<std::vector<std::string>>;

// Non-empty, non-comment lines split on whitespace.
Rows parse_rows(std::string_view text, const std::string& source, std::size_t min_fields, std::size_t max_fields) {
    Rows rows;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;
        auto fields = tokenize(line);
        if (fields.size() < min_fields || fields.size() > max_fields) {
            throw ParseError(source, line_no, "expected " + std::to_string(min_fields) + "-" +
                                                  std::to_string(max_fields) + " fields");
        }
        rows.push_back(std::move(fields));
    }
    if (rows.empty()) throw ParseError(source, line_no, "no entries");
    return rows;
}

Lexicon parse_lexicon(std::string_view subjects, std::string_view objects, std::string_view verbs,
                      std::string_view numbers, std::string_view negations, std::string_view clauses,
                      const std::string& prefix) {
    Lexicon lex;
    for (auto& r : parse_rows(subjects, prefix + "subjects.txt", 3, 3)) lex.subjects.push_back({r[0], r[1], r[2]});
    for (auto& r : parse_rows(objects, prefix + "objects.txt", 2, 2)) lex.objects.push_back({r[0], r[1], ""});
    for (auto& r : parse_rows(verbs, prefix + "verbs.txt", 2, 2)) lex.verbs.emplace_back(r[0], r[1]);
    for (auto& r : parse_rows(numbers, prefix + "numbers.txt", 2, 2)) lex.numbers.emplace_back(r[0], r[1]);
    const std::string neg_source = prefix + "negations.txt";
    for (auto& r : parse_rows(negations, neg_source, 2, 2)) {
        if (r[0] == "adverb") {
            lex.negation_adverb = r[1];
        } else if (r[0] == "subject") {
            lex.negation_subject = r[1];
        } else if (r[0] == "determiner") {
            lex.negation_determiner = r[1];
        } else {
            throw ParseError(neg_source, 0, "unknown negation role '" + r[0] + "'");
        }
    }
    if (lex.negation_adverb.empty() || lex.negation_subject.empty() || lex.negation_determiner.empty()) {
        throw ParseError(neg_source, 0, "adverb, subject and determiner negations are all required");
    }
    lex.clauses = parse_rows(clauses, prefix + "clauses.txt", 1, 16);
    if (lex.subjects.size() < 2 || lex.objects.size() < 2) {
        throw ParseError(prefix + "objects.txt", 0, "at least two subjects and two objects are required");
    }
    return lex;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

template <typename T>
const T& choose(const std::vector<T>& items, Rng& rng) {
    return items[rng.below(items.size())];
}

struct Premise {
    const NounEntry* subject;
    const std::pair<std::string, std::string>* verb;
    const NounEntry* object;
    const std::pair<std::string, std::string>* number;  // null: "the OBJ"
};

using Tokens = std::vector<std::string>;

Tokens object_phrase(const std::string& determiner, const std::string& noun, bool plural) {
    return {determiner, plural ? noun + "s" : noun};
}

Tokens sentence(Tokens subject, const std::string& verb, const Tokens& object) {
    Tokens out = std::move(subject);
    out.push_back(verb);
    out.insert(out.end(), object.begin(), object.end());
    return out;
}

Tokens render(const Premise& p) {
    const bool plural = p.number != nullptr;
    return sentence({"the", p.subject->noun}, p.verb->first,
                    object_phrase(plural ? p.number->first : "the", p.object->noun, plural));
}

Tokens entailment(const Premise& p, Rng& rng) {
    const bool plural = p.number != nullptr;
    const std::string det = plural ? p.number->first : "the";
    switch (rng.below(plural ? 3 : 2)) {
        case 0:
            return sentence({"the", p.subject->hypernym}, p.verb->first, object_phrase(det, p.object->noun, plural));
        case 1:
            return sentence({"the", p.subject->noun}, p.verb->first, object_phrase(det, p.object->hypernym, plural));
        default:
            return sentence({"the", p.subject->noun}, p.verb->first,
                            object_phrase(p.number->second, p.object->noun, plural));
    }
}

Tokens contradiction(const Premise& p, const Lexicon& lex, Rng& rng) {
    const bool plural = p.number != nullptr;
    const Tokens object = object_phrase(plural ? p.number->first : "the", p.object->noun, plural);
    switch (rng.below(3)) {
        case 0: {
            Tokens out{"the", p.subject->noun, lex.negation_adverb, p.verb->first};
            out.insert(out.end(), object.begin(), object.end());
            return out;
        }
        case 1:
            return sentence({lex.negation_subject}, p.verb->first, object);
        default:
            return sentence({"the", p.subject->noun}, p.verb->first,
                            object_phrase(lex.negation_determiner, p.object->noun, plural));
    }
}

Tokens neutral(const Premise& p, const Lexicon& lex, Rng& rng) {
    Tokens out = render(p);
    const auto& clause = choose(lex.clauses, rng);
    out.insert(out.end(), clause.begin(), clause.end());
    return out;
}

Tokens paraphrase(const Premise& p, Rng& rng) {
    const std::size_t mode = rng.below(3);  // 0 verb, 1 subject, 2 both
    Tokens out = render(p);
    if (mode != 1) out[2] = p.verb->second;
    if (mode != 0) out[1] = p.subject->synonym;
    return out;
}

template <typename T>
const T* different(const std::vector<T>& items, const T* current, Rng& rng) {
    std::size_t pick = rng.below(items.size() - 1);
    const auto index = static_cast<std::size_t>(current - items.data());
    if (pick >= index) ++pick;
    return &items[pick];
}

Tokens non_paraphrase(const Premise& p, const Lexicon& lex, Rng& rng) {
    Premise q = p;
    if (rng.below(2) == 0) {
        q.object = different(lex.objects, p.object, rng);
    } else {
        q.subject = different(lex.subjects, p.subject, rng);
    }
    Tokens out = render(q);
    if (rng.below(2) == 0) out[2] = p.verb->second;
    return out;
}

}  // namespace

Lexicon Lexicon::builtin() {
    static const Lexicon lex =
        parse_lexicon(lexicon_data::subjects, lexicon_data::objects, lexicon_data::verbs, lexicon_data::numbers,
                      lexicon_data::negations, lexicon_data::clauses, "<builtin>/");
    return lex;
}

Lexicon Lexicon::load(const std::filesystem::path& dir) {
    auto file = [&](const char* name) { return read_file(dir / name); };
    return parse_lexicon(file("subjects.txt"), file("objects.txt"), file("verbs.txt"), file("numbers.txt"),
                         file("negations.txt"), file("clauses.txt"), dir.string() + "/");
}

std::vector<std::string> Lexicon::negation_words() const {
    return {negation_adverb, negation_subject, negation_determiner};
}

Dataset generate_synthetic(std::size_t n, Task task, std::uint64_t seed, const Lexicon& lexicon) {
    const std::size_t k = num_labels(task);
    if (n < k) throw ContractError("generate_synthetic: n must be at least the number of labels");
    Rng rng(seed);
    std::vector<std::size_t> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = i % k;
    rng.shuffle(labels);

    Dataset dataset;
    dataset.task = task;
    dataset.pairs.reserve(n);
    for (std::size_t label : labels) {
        Premise p{&choose(lexicon.subjects, rng), &choose(lexicon.verbs, rng), &choose(lexicon.objects, rng), nullptr};
        if (rng.below(2) == 1) p.number = &choose(lexicon.numbers, rng);
        SentencePair pair;
        pair.s_a = render(p);
        pair.label = label;
        if (task == Task::nli) {
            switch (label) {
                case 0: pair.s_b = entailment(p, rng); break;
                case 1: pair.s_b = contradiction(p, lexicon, rng); break;
                default: pair.s_b = neutral(p, lexicon, rng); break;
            }
        } else {
            pair.s_b = label == 0 ? paraphrase(p, rng) : non_paraphrase(p, lexicon, rng);
        }
        dataset.pairs.push_back(std::move(pair));
    }
    return dataset;
}

}  // namespace r2net
