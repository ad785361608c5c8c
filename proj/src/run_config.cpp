#include "pepclass/run_config.hpp"

#include <algorithm>
#include <charconv>
#include <initializer_list>

#include <json.hpp>

#include "pepclass/fileutil.hpp"

namespace pepclass {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ConfigError(where + " must be an object");
    for (const auto& [key, _] : j.items()) {
        bool ok = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; });
        if (!ok) {
            std::string list;
            for (const char* a : allowed) list += std::string(list.empty() ? "" : ", ") + a;
            throw ConfigError("unknown key '" + (where.empty() ? key : where + "." + key) + "' (allowed: " + list + ")");
        }
    }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
            const auto& v = j.at(key);
            if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0))
                throw ConfigError(where + "." + key + " must be a non-negative integer");
            out = v.get<T>();
        } else {
            out = j.at(key).get<T>();
        }
    } catch (const json::exception&) {
        throw ConfigError(where + "." + key + " has the wrong type");
    }
}

std::string read_string(const json& j, const char* key, const std::string& fallback, const std::string& where) {
    std::string v = fallback;
    read(j, key, v, where);
    return v;
}

}  // namespace

embed::EmbeddingConfig RunConfig::embedding_config() const {
    return embedding_spec.configure(experiment.embedding, embedding_seed.value_or(seed));
}

eval::ExperimentConfig RunConfig::experiment_config() const {
    auto c = experiment;
    c.seed_base = seed_base.value_or(seed);
    c.train.seed = seed;
    return c;
}

models::ModelConfig RunConfig::model_config(std::size_t max_len) const {
    auto c = models::ModelConfig::for_architecture(architecture, max_len, embedding_spec.token_k(), seed);
    c.embedding_trainable = experiment.embedding_trainable;
    if (experiment.head) c.head = *experiment.head;
    c.lstm_relu = experiment.lstm_relu;
    return c;
}

void RunConfig::validate() const {
    try {
        embedding_config().validate();
        experiment.train.validate();
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    if (experiment.n_runs == 0) throw ConfigError("eval.n_runs must be >= 1");
    if (!(experiment.test_fraction > 0 && experiment.test_fraction < 1))
        throw ConfigError("eval.test_fraction must be in (0, 1)");
    if (!(experiment.threshold >= 0 && experiment.threshold <= 1)) throw ConfigError("eval.threshold must be in [0, 1]");
}

RunConfig parse_run_config(std::string_view text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    RunConfig c;
    check_keys(root, "", {"seed", "output_dir", "dataset", "embedding", "model", "training", "eval"});
    read(root, "seed", c.seed, "");
    if (root.contains("output_dir")) c.output_dir = read_string(root, "output_dir", "", "");

    if (root.contains("dataset")) {
        const auto& d = root["dataset"];
        check_keys(d, "dataset", {"path", "format"});
        c.dataset_path = read_string(d, "path", "", "dataset");
        auto fmt = read_string(d, "format", "auto", "dataset");
        if (fmt == "csv")
            c.dataset_format = seqdata::DatasetFormat::csv;
        else if (fmt == "fasta")
            c.dataset_format = seqdata::DatasetFormat::fasta;
        else if (fmt != "auto")
            throw ConfigError("dataset.format must be auto, csv or fasta");
    }

    auto& e = c.experiment.embedding;
    if (root.contains("embedding")) {
        const auto& j = root["embedding"];
        check_keys(j, "embedding", {"kind", "dim", "window", "negatives", "epochs", "lr", "minn", "bucket_count",
                                    "min_count", "seed"});
        if (j.contains("kind")) {
            try {
                c.embedding_spec = eval::EmbeddingSpec::parse(read_string(j, "kind", "", "embedding"));
            } catch (const eval::EvalError& err) {
                throw ConfigError(err.what());
            }
        }
        read(j, "dim", e.dim, "embedding");
        read(j, "window", e.window, "embedding");
        read(j, "negatives", e.negatives, "embedding");
        read(j, "epochs", e.epochs, "embedding");
        read(j, "lr", e.lr_initial, "embedding");
        read(j, "minn", e.minn, "embedding");
        read(j, "bucket_count", e.bucket_count, "embedding");
        read(j, "min_count", e.min_count, "embedding");
        if (j.contains("seed")) {
            std::uint64_t s = 0;
            read(j, "seed", s, "embedding");
            c.embedding_seed = s;
        }
    }

    if (root.contains("model")) {
        const auto& j = root["model"];
        check_keys(j, "model", {"architecture", "trainable", "head", "lstm_relu"});
        try {
            if (j.contains("architecture"))
                c.architecture = models::architecture_from_string(read_string(j, "architecture", "", "model"));
            auto head = read_string(j, "head", "auto", "model");
            if (head != "auto") c.experiment.head = models::head_from_string(head);
            if (j.contains("lstm_relu"))
                c.experiment.lstm_relu = models::relu_placement_from_string(read_string(j, "lstm_relu", "", "model"));
        } catch (const models::ModelError& err) {
            throw ConfigError(err.what());
        }
        read(j, "trainable", c.experiment.embedding_trainable, "model");
    }

    auto& t = c.experiment.train;
    if (root.contains("training")) {
        const auto& j = root["training"];
        check_keys(j, "training", {"lr", "batch_size", "epochs", "patience", "validation_fraction", "loss"});
        read(j, "lr", t.lr, "training");
        read(j, "batch_size", t.batch_size, "training");
        read(j, "epochs", t.max_epochs, "training");
        read(j, "patience", t.patience, "training");
        read(j, "validation_fraction", t.validation_fraction, "training");
        auto loss = read_string(j, "loss", "auto", "training");
        if (loss != "auto") {
            try {
                t.loss_kind = nn::loss_from_string(loss);
            } catch (const std::invalid_argument& err) {
                throw ConfigError(err.what());
            }
        }
    }

    if (root.contains("eval")) {
        const auto& j = root["eval"];
        check_keys(j, "eval", {"n_runs", "seed_base", "test_fraction", "threshold", "threads"});
        read(j, "n_runs", c.experiment.n_runs, "eval");
        if (j.contains("seed_base")) {
            std::uint64_t s = 0;
            read(j, "seed_base", s, "eval");
            c.seed_base = s;
        }
        read(j, "test_fraction", c.experiment.test_fraction, "eval");
        read(j, "threshold", c.experiment.threshold, "eval");
        read(j, "threads", c.experiment.threads, "eval");
    }
    c.validate();
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    return parse_run_config(text);
}

std::string run_config_to_json(const RunConfig& c) {
    ojson j;
    j["seed"] = c.seed;
    j["output_dir"] = c.output_dir.string();
    std::string fmt = "auto";
    if (c.dataset_format) fmt = *c.dataset_format == seqdata::DatasetFormat::csv ? "csv" : "fasta";
    j["dataset"] = {{"path", c.dataset_path.string()}, {"format", fmt}};
    const auto& e = c.experiment.embedding;
    j["embedding"] = {{"kind", c.embedding_spec.label()},
                      {"dim", e.dim},
                      {"window", e.window},
                      {"negatives", e.negatives},
                      {"epochs", e.epochs},
                      {"lr", e.lr_initial},
                      {"minn", e.minn},
                      {"bucket_count", e.bucket_count},
                      {"min_count", e.min_count},
                      {"seed", c.embedding_seed.value_or(c.seed)}};
    j["model"] = {{"architecture", models::to_string(c.architecture)},
                  {"trainable", c.experiment.embedding_trainable},
                  {"head", c.experiment.head ? models::to_string(*c.experiment.head) : "auto"},
                  {"lstm_relu", models::to_string(c.experiment.lstm_relu)}};
    const auto& t = c.experiment.train;
    j["training"] = {{"lr", t.lr},
                     {"batch_size", t.batch_size},
                     {"epochs", t.max_epochs},
                     {"patience", t.patience},
                     {"validation_fraction", t.validation_fraction},
                     {"loss", t.loss_kind ? nn::to_string(*t.loss_kind) : "auto"}};
    j["eval"] = {{"n_runs", c.experiment.n_runs},
                 {"seed_base", c.seed_base.value_or(c.seed)},
                 {"test_fraction", c.experiment.test_fraction},
                 {"threshold", c.experiment.threshold},
                 {"threads", c.experiment.threads}};
    return j.dump(2) + "\n";
}

void apply_env_overrides(RunConfig& config, const std::function<const char*(const char*)>& getenv_fn) {
    if (const char* out = getenv_fn("PEPCLASS_OUT"); out && *out) config.output_dir = out;
    if (const char* seed = getenv_fn("PEPCLASS_SEED"); seed && *seed) {
        std::uint64_t v = 0;
        std::string_view s(seed);
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || ptr != s.data() + s.size())
            throw ConfigError("PEPCLASS_SEED must be a non-negative integer, got '" + std::string(s) + "'");
        config.seed = v;
    }
}

}  // namespace pepclass
