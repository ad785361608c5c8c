#include "commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>

#include "pepclass/embed.hpp"
#include "pepclass/eval.hpp"
#include "pepclass/fileutil.hpp"
#include "pepclass/gradcheck_suite.hpp"
#include "pepclass/models.hpp"
#include "pepclass/run_config.hpp"
#include "pepclass/seqdata.hpp"

namespace pepclass::cli {

namespace fs = std::filesystem;

namespace {

class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

int guarded(const std::function<int()>& body) {
    try {
        return body();
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitInput;
    } catch (const seqdata::DataError& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return kExitInput;
    } catch (const models::TrainingDiverged& e) {
        std::size_t finite = 0;
        for (auto v : e.history().train_loss)
            if (std::isfinite(v)) ++finite;
        std::cerr << "training diverged: " << e.what() << " (last finite epoch: " << finite << ")\n";
        return kExitRuntime;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "file error: " << e.what() << '\n';
        return kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
}

RunConfig resolve_config(const Options& opts) {
    RunConfig c = opts.config.empty() ? RunConfig{} : load_run_config(opts.config);
    apply_env_overrides(c, [](const char* name) { return std::getenv(name); });
    if (!opts.dataset.empty()) c.dataset_path = opts.dataset;
    if (opts.seed) c.seed = *opts.seed;
    if (!opts.out.empty()) c.output_dir = opts.out;
    if (opts.runs) c.experiment.n_runs = *opts.runs;
    try {
        if (!opts.embedding.empty()) c.embedding_spec = eval::EmbeddingSpec::parse(opts.embedding);
        if (!opts.architecture.empty()) c.architecture = models::architecture_from_string(opts.architecture);
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    c.validate();
    return c;
}

seqdata::Dataset load_dataset_checked(const fs::path& path, const std::optional<seqdata::DatasetFormat>& format) {
    if (path.empty()) throw InputError("no dataset given (use --dataset or dataset.path in the config)");
    if (!fs::exists(path)) throw InputError("dataset not found: " + path.string());
    return format ? seqdata::load_dataset(path, *format) : seqdata::load_dataset(path);
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw InputError("cannot create output directory " + dir.string() + ": " + ec.message());
}

std::vector<seqdata::TokenList> non_empty(std::vector<seqdata::TokenList> tokens) {
    std::vector<seqdata::TokenList> out;
    for (auto& t : tokens)
        if (!t.empty()) out.push_back(std::move(t));
    return out;
}

struct TrainedEmbedding {
    embed::EmbeddingMatrix matrix;
    std::optional<embed::SubwordIndex> subwords;
};

TrainedEmbedding train_embedding(const std::vector<seqdata::TokenList>& corpus, const embed::EmbeddingConfig& cfg) {
    if (corpus.empty()) throw InputError("no sequence is long enough for the embedding's token length");
    TrainedEmbedding out;
    if (cfg.mode == embed::EmbeddingMode::fasttext) {
        auto ft = embed::train_fasttext(corpus, cfg);
        out.matrix = std::move(ft.matrix);
        out.subwords = std::move(ft.subwords);
    } else {
        out.matrix = embed::train_word2vec(corpus, cfg);
    }
    return out;
}

std::string file_label(const std::string& label) {
    std::string s;
    for (char c : label) {
        if (std::isalnum(static_cast<unsigned char>(c)))
            s += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        else if (c == '+')
            s += '_';
    }
    return s;
}

void write_report_bundle(const eval::EvalReport& report, const fs::path& dir, const std::string& stem) {
    eval::export_report(report, dir / (stem + ".json"), eval::ReportFormat::json);
    write_file_atomic(dir / (stem + ".csv"), eval::report_to_csv(report));
}

std::string percent(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

}  // namespace

int cmd_embed(const Options& opts) {
    return guarded([&] {
        auto config = resolve_config(opts);
        auto dataset = load_dataset_checked(config.dataset_path, config.dataset_format);
        auto cfg = config.embedding_config();
        auto corpus = non_empty(seqdata::tokenize_records(dataset, config.embedding_spec.token_k()));
        auto start = std::chrono::steady_clock::now();
        auto trained = train_embedding(corpus, cfg);
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

        ensure_dir(config.output_dir);
        auto path = config.output_dir / "embedding.txt";
        embed::save_embedding(trained.matrix, path);
        if (trained.subwords) trained.subwords->save(embed::bucket_path(path));
        std::cout << "embedding " << config.embedding_spec.label() << " written to " << path.string() << '\n'
                  << "vocab size " << trained.matrix.vocab.size() << ", dim " << trained.matrix.dim() << ", epochs "
                  << cfg.epochs << ", wall time " << percent(secs) << " s\n";
        return kExitOk;
    });
}

int cmd_train(const Options& opts) {
    return guarded([&] {
        auto config = resolve_config(opts);
        auto dataset = load_dataset_checked(config.dataset_path, config.dataset_format);
        auto experiment = config.experiment_config();
        const std::size_t k = config.embedding_spec.token_k();
        auto [train_set, test_set] = seqdata::split_holdout(dataset, experiment.test_fraction, experiment.seed_base);
        auto train_tokens = seqdata::tokenize_records(train_set, k);

        TrainedEmbedding emb;
        if (!opts.embedding_file.empty()) {
            if (!fs::exists(opts.embedding_file)) throw InputError("embedding file not found: " + opts.embedding_file);
            try {
                emb.matrix = embed::load_embedding(opts.embedding_file);
                if (emb.matrix.mode == embed::EmbeddingMode::fasttext)
                    emb.subwords = embed::SubwordIndex::load(embed::bucket_path(opts.embedding_file));
            } catch (const embed::EmbedError& e) {
                throw InputError(e.what());
            }
            if (emb.matrix.vocab.k() != k)
                throw InputError("embedding file holds " + std::to_string(emb.matrix.vocab.k()) +
                                 "-mers but the configuration uses " + config.embedding_spec.label());
        } else {
            emb = train_embedding(non_empty(train_tokens), config.embedding_config());
        }

        auto vocab = seqdata::Vocabulary::build(train_tokens, 1, k);
        std::size_t max_len = std::max<std::size_t>(1, seqdata::longest(train_tokens));
        models::EmbeddingSource source{vocab,
                                       embed::embedding_table(vocab, emb.matrix, emb.subwords ? &*emb.subwords : nullptr)};
        auto model = models::build_model(config.model_config(max_len), std::move(source));
        auto data = models::encode_dataset(train_set, vocab, k, max_len);
        auto result = models::train(model, data, experiment.train);

        auto test = models::encode_dataset(test_set, vocab, k, max_len);
        auto scores = model.predict(test.encoded);
        double acc = models::accuracy(scores, test.labels, experiment.threshold);

        ensure_dir(config.output_dir);
        models::save_params(result.params, config.output_dir / "model.bin");
        write_file_atomic(config.output_dir / "loss.csv", eval::history_to_csv(result.history));
        std::cout << "trained " << config.embedding_spec.label() << "+" << models::display_name(config.architecture)
                  << " for " << result.history.stopped_epoch << " epochs (best epoch " << result.history.best_epoch
                  << ")\n"
                  << "test accuracy " << percent(100 * acc) << "% on " << test.labels.size() << " records\n"
                  << "model written to " << (config.output_dir / "model.bin").string() << '\n';
        return kExitOk;
    });
}

int cmd_evaluate(const Options& opts) {
    return guarded([&] {
        auto config = resolve_config(opts);
        auto dataset = load_dataset_checked(config.dataset_path, config.dataset_format);
        auto experiment = config.experiment_config();
        ensure_dir(config.output_dir);

        std::vector<eval::GridCell> grid;
        if (opts.grid == "none") grid.push_back({config.embedding_spec, config.architecture});
        if (opts.grid == "word2vec" || opts.grid == "all")
            for (auto& c : eval::word2vec_grid()) grid.push_back(c);
        if (opts.grid == "fasttext" || opts.grid == "all")
            for (auto& c : eval::fasttext_grid()) grid.push_back(c);

        auto results = eval::experiment_grid(dataset, grid, experiment);
        std::size_t ok = 0;
        for (const auto& r : results) {
            if (!r.report) {
                std::cerr << r.cell.label() << " failed: " << r.error << '\n';
                continue;
            }
            auto stem = opts.grid == "none" ? std::string("report") : "report_" + file_label(r.cell.label());
            write_report_bundle(*r.report, config.output_dir, stem);
            if (r.report->failures < r.report->runs.size()) ++ok;
            for (const auto& run : r.report->runs)
                if (run.failed) std::cerr << r.cell.label() << " run seed " << run.seed << " failed: " << run.error << '\n';
        }
        auto table = eval::format_table(results);
        write_file_atomic(config.output_dir / "table.tsv", table);
        write_file_atomic(config.output_dir / "config.json", run_config_to_json(config));
        std::cout << "dataset " << dataset.name << " (" << dataset.size() << " records), " << experiment.n_runs
                  << " holdout runs\n"
                  << table;
        return ok > 0 ? kExitOk : kExitRuntime;
    });
}

namespace {

struct InputSequence {
    std::string id;
    std::string sequence;
};

std::string trim(std::string s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
    std::size_t i = 0;
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    return s.substr(i);
}

std::vector<InputSequence> read_sequences(const fs::path& path) {
    if (!fs::exists(path)) throw InputError("input not found: " + path.string());
    std::istringstream in(read_file(path));
    std::vector<InputSequence> out;
    std::string line;
    auto ext = path.extension().string();
    if (ext == ".fasta" || ext == ".fa" || ext == ".faa") {
        while (std::getline(in, line)) {
            line = trim(line);
            if (line.empty()) continue;
            if (line[0] == '>') {
                auto id = line.substr(1);
                if (auto bar = id.find('|'); bar != std::string::npos) id = id.substr(0, bar);
                out.push_back({trim(id), ""});
            } else if (!out.empty()) {
                out.back().sequence += line;
            } else {
                throw InputError("FASTA input starts with a sequence line before any header");
            }
        }
    } else if (ext == ".csv") {
        bool header = true;
        std::size_t row = 0;
        while (std::getline(in, line)) {
            line = trim(line);
            if (line.empty()) continue;
            if (header) {
                header = false;
                continue;
            }
            ++row;
            std::vector<std::string> fields;
            std::stringstream ss(line);
            std::string f;
            while (std::getline(ss, f, ',')) fields.push_back(trim(f));
            if (fields.size() >= 2)
                out.push_back({fields[0], fields[1]});
            else
                out.push_back({std::to_string(row), fields.empty() ? "" : fields[0]});
        }
    } else {
        std::size_t row = 0;
        while (std::getline(in, line)) {
            line = trim(line);
            if (line.empty()) continue;
            out.push_back({std::to_string(++row), line});
        }
    }
    return out;
}

std::string csv_quote(const std::string& s) {
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
}

}  // namespace

int cmd_predict(const Options& opts) {
    return guarded([&] {
        if (!fs::exists(opts.model_path)) throw InputError("model not found: " + opts.model_path);
        std::optional<models::Classifier> model;
        try {
            model.emplace(models::Classifier::from_params(models::load_params(opts.model_path)));
        } catch (const models::ModelError& e) {
            throw InputError(std::string("cannot load model: ") + e.what());
        }
        auto inputs = read_sequences(opts.input_path);
        if (inputs.empty()) throw InputError("no sequences in " + opts.input_path);
        const std::size_t k = model->config().token_k;

        std::vector<std::string> errors(inputs.size());
        std::vector<std::string> valid;
        std::vector<std::size_t> valid_idx;
        for (std::size_t i = 0; i < inputs.size(); ++i) {
            try {
                seqdata::validate_sequence(inputs[i].sequence, i + 1);
                if (inputs[i].sequence.size() < k)
                    throw seqdata::DataError("record " + inputs[i].id + ": sequence length " +
                                             std::to_string(inputs[i].sequence.size()) +
                                             " is shorter than the token length " + std::to_string(k));
                valid.push_back(inputs[i].sequence);
                valid_idx.push_back(i);
            } catch (const seqdata::DataError& e) {
                errors[i] = e.what();
            }
        }
        std::vector<double> probs(inputs.size(), 0.0);
        if (!valid.empty()) {
            auto scores = models::predict_sequences(*model, valid);
            for (std::size_t j = 0; j < valid_idx.size(); ++j) probs[valid_idx[j]] = scores[j];
        }
        std::cout << "id,sequence,probability,label@0.5\n";
        for (std::size_t i = 0; i < inputs.size(); ++i) {
            if (!errors[i].empty()) {
                std::cout << inputs[i].id << ',' << inputs[i].sequence << ",error," << csv_quote(errors[i]) << '\n';
                continue;
            }
            std::cout << inputs[i].id << ',' << inputs[i].sequence << ',' << format_real(probs[i]) << ','
                      << (probs[i] >= 0.5 ? 1 : 0) << '\n';
        }
        return valid.empty() ? kExitInput : kExitOk;
    });
}

namespace {

struct Preset {
    std::string name;
    std::string dataset_file;  // empty for grid presets
    eval::EmbeddingSpec embedding;
    double target = 0;
    double band = 0;
};

const std::vector<Preset>& presets() {
    static const std::vector<Preset> p{
        {"acps250-ft3-bilstm", "ACPs250.csv", eval::EmbeddingSpec::ft(3), 92.50, 85.0},
        {"independent-ft2-bilstm", "Independent.csv", eval::EmbeddingSpec::ft(2), 96.15, 90.0},
        {"word2vec-grids", "", eval::EmbeddingSpec::ws(), 0, 0},
        {"fasttext-grids", "", eval::EmbeddingSpec::ft(3), 0, 0},
    };
    return p;
}

}  // namespace

int cmd_reproduce(const Options& opts) {
    return guarded([&] {
        const Preset* preset = nullptr;
        for (const auto& p : presets())
            if (p.name == opts.preset) preset = &p;
        if (!preset) {
            std::string names;
            for (const auto& p : presets()) names += "\n  " + p.name;
            throw InputError("unknown preset '" + opts.preset + "'; valid presets:" + names);
        }

        RunConfig config;
        apply_env_overrides(config, [](const char* name) { return std::getenv(name); });
        if (opts.seed) config.seed = *opts.seed;
        if (opts.runs) config.experiment.n_runs = *opts.runs;
        config.output_dir = (opts.out.empty() ? config.output_dir : fs::path(opts.out)) / preset->name;
        config.validate();
        ensure_dir(config.output_dir);
        write_file_atomic(config.output_dir / "config.json", run_config_to_json(config));
        auto experiment = config.experiment_config();

        if (!preset->dataset_file.empty()) {
            fs::path path = opts.dataset.empty() ? fs::path(opts.data_dir) / preset->dataset_file : fs::path(opts.dataset);
            auto dataset = load_dataset_checked(path, std::nullopt);
            auto report = eval::run_experiment(dataset, preset->embedding, models::Architecture::bilstm, experiment);
            write_report_bundle(report, config.output_dir, "report");
            const bool all_failed = report.failures == report.runs.size();
            std::ostringstream line;
            line << preset->name << ": mean accuracy "
                 << (all_failed ? std::string("n/a") : percent(report.mean.acc) + "%") << " over "
                 << report.runs.size() - report.failures << " runs (std " << percent(report.std.acc) << ", max "
                 << percent(report.max.acc) << "); reference target " << percent(preset->target)
                 << "%; acceptance band >= " << percent(preset->band) << "% -> "
                 << (!all_failed && report.mean.acc >= preset->band ? "within band" : "below band") << '\n';
            write_file_atomic(config.output_dir / "comparison.txt", line.str());
            std::cout << eval::format_table(std::vector<eval::GridResult>{{{preset->embedding,
                                                                            models::Architecture::bilstm},
                                                                           report,
                                                                           ""}})
                      << line.str();
            return all_failed ? kExitRuntime : kExitOk;
        }

        auto grid = preset->name == "word2vec-grids" ? eval::word2vec_grid() : eval::fasttext_grid();
        std::size_t ok = 0;
        for (const char* file : {"ACPs250.csv", "Independent.csv"}) {
            auto dataset = load_dataset_checked(fs::path(opts.data_dir) / file, std::nullopt);
            auto results = eval::experiment_grid(dataset, grid, experiment);
            auto dir = config.output_dir / dataset.name;
            ensure_dir(dir);
            for (const auto& r : results) {
                if (!r.report) continue;
                write_report_bundle(*r.report, dir, "report_" + file_label(r.cell.label()));
                if (r.report->failures < r.report->runs.size()) ++ok;
            }
            auto table = eval::format_table(results);
            write_file_atomic(dir / "table.tsv", table);
            std::cout << "== " << dataset.name << " ==\n" << table;
        }
        return ok > 0 ? kExitOk : kExitRuntime;
    });
}

int cmd_gradcheck(const Options& opts) {
    return guarded([&] {
        nn::GradcheckOptions options;
        options.instances = opts.instances;
        if (opts.seed) options.seed = *opts.seed;
        if (!opts.inject_fault.empty()) options.inject_fault.push_back(opts.inject_fault);
        auto results = nn::run_gradcheck_suite(options);
        std::vector<std::string> failed;
        std::printf("%-18s %12s %10s %10s %8s %6s %6s  %s\n", "component", "max_rel_err", "tolerance", "instances",
                    "coords", "kinks", "bad", "status");
        for (const auto& r : results) {
            std::printf("%-18s %12.3e %10.0e %10zu %8zu %6zu %6zu  %s\n", r.name.c_str(), r.max_rel_error, r.tolerance,
                        r.instances, r.coordinates, r.skipped_kinks, r.violations, r.passed ? "PASS" : "FAIL");
            if (!r.error.empty()) std::printf("  error: %s\n", r.error.c_str());
            if (!r.passed) failed.push_back(r.name);
        }
        if (failed.empty()) {
            std::printf("all %zu components within tolerance\n", results.size());
            return kExitOk;
        }
        std::string names;
        for (const auto& n : failed) names += (names.empty() ? "" : ", ") + n;
        std::printf("gradient check failed: %s\n", names.c_str());
        return kExitSelfCheck;
    });
}

}  // namespace pepclass::cli
