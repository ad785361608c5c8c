#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>

#include "pepclass/eval.hpp"
#include "pepclass/models.hpp"
#include "pepclass/seqdata.hpp"

namespace pepclass {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Resolved pipeline configuration. Every field has a default; the JSON form
/// rejects unknown keys at every level.
///
/// {
///   "seed": 1,
///   "output_dir": "out",
///   "dataset":   {"path": "", "format": "auto|csv|fasta"},
///   "embedding": {"kind": "WS|WC|FT(n)", "dim", "window", "negatives", "epochs",
///                 "lr", "minn", "bucket_count", "min_count", "seed"},
///   "model":     {"architecture": "cnn|lstm|bilstm", "trainable", "head": "auto|softmax2|sigmoid1",
///                 "lstm_relu": "in_cell|after_layer"},
///   "training":  {"lr", "batch_size", "epochs", "patience", "validation_fraction",
///                 "loss": "auto|binary_ce|categorical_ce"},
///   "eval":      {"n_runs", "seed_base", "test_fraction", "threshold", "threads"}
/// }
///
/// embedding.seed and eval.seed_base default to the global seed.
struct RunConfig {
    std::uint64_t seed = 1;
    std::filesystem::path output_dir = "out";
    std::filesystem::path dataset_path;
    std::optional<seqdata::DatasetFormat> dataset_format;  // from the extension when unset
    eval::EmbeddingSpec embedding_spec = eval::EmbeddingSpec::ft(3);
    models::Architecture architecture = models::Architecture::bilstm;
    eval::ExperimentConfig experiment;
    std::optional<std::uint64_t> embedding_seed;
    std::optional<std::uint64_t> seed_base;

    /// Embedding hyperparameters for a standalone embedding run.
    embed::EmbeddingConfig embedding_config() const;
    /// Experiment settings with the seed defaults applied.
    eval::ExperimentConfig experiment_config() const;
    /// Model settings for a single training run.
    models::ModelConfig model_config(std::size_t max_len) const;

    void validate() const;
};

RunConfig parse_run_config(std::string_view json_text);
RunConfig load_run_config(const std::filesystem::path& path);
/// Full resolved configuration with every key present.
std::string run_config_to_json(const RunConfig& config);

/// PEPCLASS_OUT overrides output_dir, PEPCLASS_SEED overrides the global seed.
void apply_env_overrides(RunConfig& config,
                         const std::function<const char*(const char*)>& getenv_fn);

}  // namespace pepclass
