#include "r2net/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <map>
#include <optional>
#include <sstream>

#include "r2net/analysis.hpp"
#include "r2net/checkpoint.hpp"
#include "r2net/errors.hpp"
#include "r2net/gradient_suite.hpp"
#include "r2net/synthetic.hpp"
#include "r2net/trainer.hpp"

namespace r2net::cli {

namespace fs = std::filesystem;

namespace {

constexpr double kGradTolerance = 1e-4;

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

// Flags that map one-to-one onto TrainConfig keys.
struct ConfigFlags {
    std::optional<std::string> config_file;
    std::map<std::string, std::optional<std::string>> values;
    bool no_local = false, no_r2 = false, no_triplet = false;

    void bind(CLI::App& app) {
        app.add_option("--config", config_file, "key=value file; flags take precedence");
        const std::vector<std::pair<std::string, std::string>> options{
            {"task", "nli or pi (default nli)"},
            {"seed", "training seed (default 7)"},
            {"beta", "matching weight in [0, 1] (default 0.5)"},
            {"margin", "triplet margin (default 0.2)"},
            {"kernel-widths", "comma-separated CNN widths (default 1,2,3)"},
            {"dim", "model width (default 32)"},
            {"heads", "attention heads (default 4)"},
            {"ff-dim", "feed-forward width (default 64)"},
            {"layers", "transformer layers (default 2)"},
            {"max-len", "longest token sequence (default 32)"},
            {"mlp-dim", "head hidden width (default 32)"},
            {"init-scale", "uniform init half-width (default 0.05)"},
            {"lr", "Adam learning rate (default 0.001)"},
            {"epochs", "training epochs (default 30)"},
            {"batch-size", "triplets per step (default 8)"},
            {"eval-seed", "seed of evaluation sampling (default 1234)"},
        };
        for (const auto& [flag, help] : options) {
            app.add_option("--" + flag, values[flag], help);
        }
        app.add_flag("--no-local", no_local, "drop the local CNN encoder");
        app.add_flag("--no-r2", no_r2, "drop the relation-of-relation loss");
        app.add_flag("--no-triplet", no_triplet, "drop the triplet loss");
    }

    TrainConfig resolve() const {
        TrainConfig config;
        if (config_file) merge_config(config, read_text(*config_file), *config_file);
        for (const auto& [flag, value] : values) {
            if (!value) continue;
            std::string key = flag == "lr" ? "learning_rate" : flag;
            for (char& c : key) {
                if (c == '-') c = '_';
            }
            config.set(key, *value);
        }
        if (no_local) config.ablation.no_local = true;
        if (no_r2) config.ablation.no_r2 = true;
        if (no_triplet) config.ablation.no_triplet = true;
        config.validate();
        return config;
    }
};

// Resolves a dataset argument: a .tsv file, or a directory holding `name`.
fs::path dataset_path(const fs::path& arg, const std::string& name) {
    return fs::is_directory(arg) ? arg / name : arg;
}

struct LoadedModel {
    TrainConfig config;
    R2Net model;
};

LoadedModel load_model(const fs::path& dir) {
    TrainConfig config = parse_config(read_text(dir / "config.txt"), (dir / "config.txt").string());
    config.validate();
    Vocabulary vocab = Vocabulary::load(dir / "vocab.txt");
    const ModelConfig model_config = make_model_config(config, vocab.size());
    LoadedModel loaded{config, R2Net(model_config, std::move(vocab), 0)};
    load_checkpoint(loaded.model.params(), dir / "checkpoint.txt");
    return loaded;
}

int gen_data(std::size_t n, std::size_t test_n, std::size_t valid_n, const std::string& task_text,
             std::uint64_t seed, const fs::path& out_dir, const std::optional<fs::path>& lexicon_dir,
             std::ostream& out) {
    const Task task = parse_task(task_text);
    const Lexicon lexicon = lexicon_dir ? Lexicon::load(*lexicon_dir) : Lexicon::builtin();
    fs::create_directories(out_dir);
    save_dataset(generate_synthetic(n, task, derive_seed(seed, 0), lexicon), out_dir / "train.tsv");
    if (test_n) save_dataset(generate_synthetic(test_n, task, derive_seed(seed, 1), lexicon), out_dir / "test.tsv");
    if (valid_n) save_dataset(generate_synthetic(valid_n, task, derive_seed(seed, 2), lexicon), out_dir / "valid.tsv");
    out << "wrote " << n << " train, " << test_n << " test, " << valid_n << " valid pairs to " << out_dir.string()
        << '\n';
    return 0;
}

int train_cmd(const TrainConfig& config, const fs::path& data, const fs::path& out_dir, bool quiet,
              std::ostream& out) {
    const fs::path train_path = dataset_path(data, "train.tsv");
    Dataset train_set = load_dataset(train_path);
    std::optional<Dataset> valid;
    if (fs::is_directory(data) && fs::exists(data / "valid.tsv")) valid = load_dataset(data / "valid.tsv");
    if (train_set.task != config.task) {
        throw ContractError("dataset " + train_path.string() + " holds " + std::string(task_name(train_set.task)) +
                            " labels but --task is " + std::string(task_name(config.task)));
    }
    EpochCallback progress;
    if (!quiet) {
        progress = [&out](const EpochRecord& r) {
            out << "epoch " << r.epoch << " matching_acc " << r.matching_accuracy << " r2_acc " << r.r2_accuracy;
            if (r.valid_accuracy) out << " valid_acc " << *r.valid_accuracy;
            out << '\n';
            return true;
        };
    }
    TrainResult result = train(config, train_set, valid ? &*valid : nullptr, progress);
    fs::create_directories(out_dir);
    save_checkpoint(result.model.params(), out_dir / "checkpoint.txt");
    result.model.vocab().save(out_dir / "vocab.txt");
    write_text(out_dir / "config.txt", format_config(config));
    result.log.save(out_dir / "metrics.jsonl");
    out << "wrote " << (out_dir / "checkpoint.txt").string() << " and " << (out_dir / "metrics.jsonl").string()
        << '\n';
    return 0;
}

int eval_cmd(const fs::path& model_dir, const fs::path& data, std::ostream& out) {
    LoadedModel loaded = load_model(model_dir);
    const Dataset dataset = load_dataset(dataset_path(data, "test.tsv"));
    const EvalResult r = evaluate(loaded.model, dataset, loaded.config.eval_seed);
    nlohmann::ordered_json j;
    j["pairs"] = r.pairs;
    j["matching_accuracy"] = r.matching_accuracy;
    j["r2_groups"] = r.groups;
    j["r2_accuracy"] = r.r2_accuracy;
    j["mean_d_ap"] = r.mean_d_ap;
    j["mean_d_an"] = r.mean_d_an;
    out << j.dump() << '\n';
    return 0;
}

int ablate_cmd(const TrainConfig& base, const fs::path& data, std::size_t seed_count, const fs::path& out_dir,
               std::ostream& out) {
    const Dataset train_set = load_dataset(dataset_path(data, "train.tsv"));
    const Dataset test_set = load_dataset(dataset_path(data, "test.tsv"));
    std::vector<std::uint64_t> seeds;
    for (std::size_t i = 0; i < seed_count; ++i) seeds.push_back(base.seed + i);
    const auto rows = ablate(base, train_set, test_set, seeds, out_dir / "embeddings");
    nlohmann::ordered_json j = nlohmann::ordered_json::array();
    for (const AblationRow& row : rows) {
        j.push_back({{"variant", row.variant},
                     {"median_accuracy", row.median_accuracy},
                     {"median_separation", row.median_separation},
                     {"accuracy", row.accuracy},
                     {"separation", row.separation}});
    }
    write_text(out_dir / "ablation.json", j.dump(2) + "\n");
    out << format_ablation_table(rows);
    return 0;
}

int export_cmd(const fs::path& model_dir, const fs::path& data, const fs::path& out_path, std::ostream& out) {
    LoadedModel loaded = load_model(model_dir);
    const Dataset dataset = load_dataset(dataset_path(data, "test.tsv"));
    if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
    export_embeddings(loaded.model, dataset, out_path);
    out << "wrote " << dataset.size() << " embeddings of width " << loaded.model.config().representation_dim()
        << " to " << out_path.string() << '\n';
    return 0;
}

int grad_check_cmd(std::size_t seeds, double eps, std::ostream& out) {
    const auto reports = run_gradient_suite(seeds, eps);
    for (const auto& r : reports) {
        out << r.name << " max_rel_error " << r.max_rel_error << " checked " << r.checked << " skipped "
            << r.skipped << '\n';
    }
    const double worst = worst_error(reports);
    out << "max relative error: " << worst << '\n';
    return worst < kGradTolerance ? 0 : 1;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"R2-Net sentence matching: data generation, training, evaluation and analysis", "r2net"};
    app.require_subcommand(1, 1);

    auto* gen = app.add_subcommand("gen-data", "write synthetic train/test/valid TSV files");
    std::size_t gen_n = 300, gen_test_n = 300, gen_valid_n = 0;
    std::string gen_task = "nli";
    std::uint64_t gen_seed = 7;
    std::string gen_out = "data";
    std::optional<std::string> gen_lexicon;
    gen->add_option("--n", gen_n, "training pairs")->capture_default_str()->check(CLI::PositiveNumber);
    gen->add_option("--test-n", gen_test_n, "held-out pairs (0 skips test.tsv)")->capture_default_str();
    gen->add_option("--valid-n", gen_valid_n, "validation pairs (0 skips valid.tsv)")->capture_default_str();
    gen->add_option("--task", gen_task, "nli or pi")->capture_default_str();
    gen->add_option("--seed", gen_seed, "generator seed")->capture_default_str();
    gen->add_option("--out", gen_out, "output directory")->capture_default_str();
    gen->add_option("--lexicon", gen_lexicon, "directory of lexicon word lists (default: built in)");

    auto* train_sub = app.add_subcommand("train", "train a model and write checkpoint, vocab, config, metrics");
    ConfigFlags train_flags;
    train_flags.bind(*train_sub);
    std::string train_data, train_out = "run";
    bool quiet = false;
    train_sub->add_option("--data", train_data, "dataset directory (train.tsv, optional valid.tsv) or TSV file")
        ->required();
    train_sub->add_option("--out", train_out, "artifact directory")->capture_default_str();
    train_sub->add_flag("--quiet", quiet, "suppress per-epoch progress");

    auto* eval_sub = app.add_subcommand("eval", "report accuracies of a trained model");
    std::string eval_model, eval_data;
    eval_sub->add_option("--model", eval_model, "directory written by train")->required();
    eval_sub->add_option("--data", eval_data, "TSV file or directory holding test.tsv")->required();

    auto* ablate_sub = app.add_subcommand("ablate", "train full, no_local, no_r2 and no_triplet over several seeds");
    ConfigFlags ablate_flags;
    ablate_flags.bind(*ablate_sub);
    std::string ablate_data, ablate_out = "ablation";
    std::size_t ablate_seeds = 5;
    ablate_sub->add_option("--data", ablate_data, "directory holding train.tsv and test.tsv")->required();
    ablate_sub->add_option("--seeds", ablate_seeds, "number of consecutive seeds from --seed")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    ablate_sub->add_option("--out", ablate_out, "output directory")->capture_default_str();

    auto* export_sub = app.add_subcommand("export-embeddings", "write fused pair representations");
    std::string export_model, export_data, export_out = "embeddings.emb";
    export_sub->add_option("--model", export_model, "directory written by train")->required();
    export_sub->add_option("--data", export_data, "TSV file or directory holding test.tsv")->required();
    export_sub->add_option("--out", export_out, "embedding file")->capture_default_str();

    auto* grad_sub = app.add_subcommand("grad-check", "compare analytic gradients with finite differences");
    std::size_t grad_seeds = 10;
    double grad_eps = 1e-5;
    grad_sub->add_option("--seeds", grad_seeds, "seeds per case")->capture_default_str()->check(CLI::PositiveNumber);
    grad_sub->add_option("--eps", grad_eps, "finite-difference step")->capture_default_str();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        err << app.help();
        return e.get_exit_code() == 0 ? 2 : e.get_exit_code();
    }

    try {
        if (*gen) {
            const std::optional<fs::path> lexicon = gen_lexicon ? std::optional<fs::path>(*gen_lexicon) : std::nullopt;
            return gen_data(gen_n, gen_test_n, gen_valid_n, gen_task, gen_seed, gen_out, lexicon, out);
        }
        if (*train_sub) return train_cmd(train_flags.resolve(), train_data, train_out, quiet, out);
        if (*eval_sub) return eval_cmd(eval_model, eval_data, out);
        if (*ablate_sub) return ablate_cmd(ablate_flags.resolve(), ablate_data, ablate_seeds, ablate_out, out);
        if (*export_sub) return export_cmd(export_model, export_data, export_out, out);
        if (*grad_sub) return grad_check_cmd(grad_seeds, grad_eps, out);
    } catch (const TrainingDiverged& e) {
        err << "error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}

int run(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run(args, std::cout, std::cerr);
}

}  // namespace r2net::cli
