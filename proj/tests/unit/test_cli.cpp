#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>
#include "r2net/cli.hpp"

namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = r2net::cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

fs::path fresh_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("r2net_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

const std::vector<std::string> kSmall{"--dim",    "8", "--heads",      "2", "--ff-dim",     "16",
                                      "--layers", "1", "--mlp-dim",    "8", "--epochs",     "2",
                                      "--batch-size", "4", "--init-scale", "0.3", "--quiet"};

std::vector<std::string> with_small(std::vector<std::string> args) {
    args.insert(args.end(), kSmall.begin(), kSmall.end());
    return args;
}

// Shared data directory, generated once per process.
const fs::path& data_dir() {
    static const fs::path dir = [] {
        const auto d = fresh_dir("data");
        const Outcome o = run({"gen-data", "--n", "24", "--test-n", "12", "--out", d.string()});
        REQUIRE(o.code == 0);
        return d;
    }();
    return dir;
}

}  // namespace

TEST_CASE("gen-data writes deterministic splits") {
    const auto a = fresh_dir("gen_a"), b = fresh_dir("gen_b");
    REQUIRE(run({"gen-data", "--n", "9", "--test-n", "6", "--valid-n", "3", "--out", a.string()}).code == 0);
    REQUIRE(run({"gen-data", "--n", "9", "--test-n", "6", "--valid-n", "3", "--out", b.string()}).code == 0);
    for (const char* f : {"train.tsv", "test.tsv", "valid.tsv"}) {
        CHECK(fs::exists(a / f));
        CHECK(slurp(a / f) == slurp(b / f));
    }
    CHECK(slurp(a / "train.tsv") != slurp(a / "test.tsv"));
}

TEST_CASE("train writes its artifacts byte-identically across runs") {
    const auto a = fresh_dir("train_a"), b = fresh_dir("train_b");
    REQUIRE(run(with_small({"train", "--data", data_dir().string(), "--out", a.string()})).code == 0);
    REQUIRE(run(with_small({"train", "--data", data_dir().string(), "--out", b.string()})).code == 0);
    for (const char* f : {"checkpoint.txt", "vocab.txt", "config.txt", "metrics.jsonl"}) {
        INFO(f);
        REQUIRE(fs::exists(a / f));
        CHECK(slurp(a / f) == slurp(b / f));
    }
    std::istringstream lines(slurp(a / "metrics.jsonl"));
    std::string line;
    std::size_t steps = 0, epochs = 0;
    while (std::getline(lines, line)) {
        const auto j = nlohmann::json::parse(line);
        (j["type"] == "step" ? steps : epochs) += 1;
    }
    CHECK(steps == 2 * 6);
    CHECK(epochs == 2);

    const Outcome e = run({"eval", "--model", a.string(), "--data", data_dir().string()});
    REQUIRE(e.code == 0);
    const auto j = nlohmann::json::parse(e.out);
    CHECK(j["pairs"] == 12);
    CHECK(j["matching_accuracy"].get<double>() >= 0.0);

    const auto emb = a / "test.emb";
    REQUIRE(run({"export-embeddings", "--model", a.string(), "--data", data_dir().string(), "--out", emb.string()})
                .code == 0);
    CHECK(slurp(emb).rfind("dim=16\n", 0) == 0);
}

TEST_CASE("flags override the config file") {
    const auto dir = fresh_dir("config");
    {
        std::ofstream cfg(dir / "base.txt");
        cfg << "# base\nepochs=1\nlearning_rate=0.01\nmargin=0.3\n";
    }
    const auto out = dir / "run";
    const Outcome o = run(with_small(
        {"train", "--data", data_dir().string(), "--out", out.string(), "--config", (dir / "base.txt").string()}));
    REQUIRE(o.code == 0);
    const std::string cfg = slurp(out / "config.txt");
    CHECK(cfg.find("epochs=2\n") != std::string::npos);
    CHECK(cfg.find("margin=0.3\n") != std::string::npos);
}

TEST_CASE("invalid input is rejected with a diagnostic") {
    const Outcome beta = run(with_small({"train", "--data", data_dir().string(), "--beta", "1.5"}));
    CHECK(beta.code != 0);
    CHECK(beta.err.find("beta") != std::string::npos);

    const Outcome flag = run({"train", "--data", data_dir().string(), "--bogus"});
    CHECK(flag.code != 0);
    CHECK_FALSE(flag.err.empty());

    const Outcome sub = run({"frobnicate"});
    CHECK(sub.code != 0);
    CHECK_FALSE(sub.err.empty());

    CHECK(run({}).code != 0);
    CHECK(run({"--help"}).code == 0);

    const Outcome missing = run({"eval", "--model", "/nonexistent/model", "--data", data_dir().string()});
    CHECK(missing.code == 1);
    CHECK(missing.err.rfind("error: ", 0) == 0);
}

TEST_CASE("grad-check reports and passes") {
    const Outcome o = run({"grad-check", "--seeds", "1"});
    CHECK(o.code == 0);
    CHECK(o.out.find("max relative error:") != std::string::npos);
    CHECK(o.out.find("full_loss") != std::string::npos);
}
