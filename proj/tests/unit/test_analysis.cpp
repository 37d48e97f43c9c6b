#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "r2net/analysis.hpp"
#include "r2net/errors.hpp"
#include "r2net/synthetic.hpp"
#include "r2net/trainer.hpp"
#include "small_config.hpp"

using namespace r2net;

namespace {

EmbeddingTable table(std::vector<std::vector<double>> v, std::vector<std::string> labels) {
    EmbeddingTable t;
    t.dim = v.front().size();
    t.vectors = std::move(v);
    t.labels = std::move(labels);
    return t;
}

double dist(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

// Straight from the definition: average over every unordered pair.
double brute_separation(const EmbeddingTable& t) {
    double intra = 0, inter = 0;
    int ni = 0, nx = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        for (std::size_t j = i + 1; j < t.size(); ++j) {
            const double d = dist(t.vectors[i], t.vectors[j]);
            if (t.labels[i] == t.labels[j]) {
                intra += d;
                ++ni;
            } else {
                inter += d;
                ++nx;
            }
        }
    }
    return (intra / ni) / (inter / nx);
}

std::filesystem::path temp_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("r2net_analysis_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("separation of tight clusters is zero") {
    const auto t = table({{0, 0}, {0, 0}, {3, 4}, {3, 4}}, {"a", "a", "b", "b"});
    CHECK(separation_metric(t) == 0.0);
}

TEST_CASE("separation matches a brute-force oracle") {
    const auto t = table({{0, 0}, {1, 0}, {0, 2}, {5, 5}, {6, 5}, {5, 7}, {2, -1}},
                         {"x", "x", "y", "y", "x", "z", "z"});
    CHECK(std::abs(separation_metric(t) - brute_separation(t)) <= 1e-12);
    // Four points, two classes: intra = (1 + 1)/2, inter = (5 + sqrt(26) + sqrt(41) + sqrt(34))/4... computed below.
    const auto u = table({{0, 0}, {1, 0}, {0, 3}, {1, 3}}, {"a", "a", "b", "b"});
    const double inter = (3 + std::sqrt(10.0) + std::sqrt(10.0) + 3) / 4;
    CHECK(std::abs(separation_metric(u) - 1.0 / inter) <= 1e-12);
}

TEST_CASE("separation rejects degenerate inputs") {
    CHECK_THROWS_AS(separation_metric(table({{0}, {1}}, {"a", "a"})), MetricError);
    CHECK_THROWS_AS(separation_metric(table({{0}, {1}, {2}}, {"a", "a", "b"})), MetricError);
    CHECK_THROWS_AS(separation_metric(table({{1, 1}, {1, 1}, {1, 1}, {1, 1}}, {"a", "a", "b", "b"})), MetricError);
}

TEST_CASE("median") {
    CHECK(median({3, 1, 2}) == 2.0);
    CHECK(median({4, 1, 3, 2}) == 2.5);
    CHECK_THROWS(median({}));
}

TEST_CASE("embedding export has one record per pair") {
    const Dataset d = generate_synthetic(15, Task::nli, 3);
    const TrainConfig c = testing::small_config();
    const TrainResult r = train(c, d);
    const auto dir = temp_dir("export");
    export_embeddings(r.model, d, dir / "a.emb");
    export_embeddings(r.model, d, dir / "b.emb");

    std::ifstream a(dir / "a.emb"), b(dir / "b.emb");
    std::stringstream sa, sb;
    sa << a.rdbuf();
    sb << b.rdbuf();
    CHECK(sa.str() == sb.str());

    std::string header;
    std::getline(sa, header);
    const std::size_t width = c.dim + c.dim;  // local output width defaults to dim
    CHECK(header == "dim=" + std::to_string(r.model.config().representation_dim()));
    CHECK(r.model.config().representation_dim() == width);
    std::string line;
    std::size_t rows = 0;
    while (std::getline(sa, line)) {
        ++rows;
        CHECK(static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) == width);
        const std::string label = line.substr(line.rfind(',') + 1);
        CHECK(label == std::string(label_names(d.task)[d.pairs[rows - 1].label]));
    }
    CHECK(rows == d.size());

    const EmbeddingTable loaded = load_embeddings(dir / "a.emb");
    CHECK(loaded == embed_dataset(r.model, d));
}

TEST_CASE("embedding files are read strictly") {
    auto parse = [](const std::string& text) {
        std::istringstream in(text);
        return read_embeddings(in);
    };
    const EmbeddingTable t = parse("dim=2\n0.5,-1,entailment\n1e-3,2,neutral\n");
    CHECK(t.size() == 2);
    CHECK(t.vectors[1][0] == 1e-3);
    CHECK(t.labels[1] == "neutral");
    CHECK_THROWS_AS(parse("2\n0,0,a\n"), ParseError);
    CHECK_THROWS_AS(parse("dim=2\n0,a\n"), ParseError);
    CHECK_THROWS_AS(parse("dim=2\n0,x,a\n"), ParseError);
    CHECK_THROWS_AS(parse("dim=2\n0,1,2,a\n"), ParseError);

    std::ostringstream out;
    write_embeddings(t, out);
    std::istringstream back(out.str());
    CHECK(read_embeddings(back) == t);
}

TEST_CASE("ablation covers four variants per seed") {
    const Dataset train_set = generate_synthetic(24, Task::nli, 4);
    const Dataset test_set = generate_synthetic(12, Task::nli, 5);
    TrainConfig c = testing::small_config();
    c.epochs = 1;
    const auto dir = temp_dir("ablate");
    const auto rows = ablate(c, train_set, test_set, {1, 2}, dir);
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].variant == "full");
    CHECK(rows[1].variant == "no_local");
    CHECK(rows[2].variant == "no_r2");
    CHECK(rows[3].variant == "no_triplet");
    for (const auto& row : rows) {
        CHECK(row.accuracy.size() == 2);
        CHECK(row.median_accuracy == median(row.accuracy));
        CHECK(std::filesystem::exists(dir / (row.variant + "_seed2.emb")));
    }
    const std::string text = format_ablation_table(rows);
    CHECK(text.find("no_triplet") != std::string::npos);
}

TEST_CASE("with a zero learning rate every variant sits at chance") {
    const Dataset train_set = generate_synthetic(24, Task::nli, 4);
    const Dataset test_set = generate_synthetic(300, Task::nli, 6);
    TrainConfig c = testing::small_config();
    c.epochs = 1;
    c.learning_rate = 0.0;
    const double sigma = std::sqrt(1.0 / 3 * 2.0 / 3 / 300);
    for (const auto& row : ablate(c, train_set, test_set, {1, 2, 3})) {
        INFO(row.variant);
        CHECK(std::abs(row.median_accuracy - 1.0 / 3) <= 3 * sigma);
    }
}

TEST_CASE("export failures name the path") {
    const Dataset d = generate_synthetic(6, Task::nli, 3);
    const TrainResult r = train(testing::small_config(), d);
    try {
        export_embeddings(r.model, d, "/nonexistent-dir/x.emb");
        FAIL("expected an I/O error");
    } catch (const std::exception& e) {
        CHECK(std::string(e.what()).find("/nonexistent-dir/x.emb") != std::string::npos);
    }
    CHECK_THROWS(load_embeddings("/nonexistent-dir/x.emb"));
}
