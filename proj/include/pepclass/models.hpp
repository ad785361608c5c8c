#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pepclass/embed.hpp"
#include "pepclass/layers.hpp"
#include "pepclass/lstm.hpp"
#include "pepclass/optim.hpp"
#include "pepclass/seqdata.hpp"

namespace pepclass::models {

using nn::Real;
using nn::Tensor;

class ModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Architecture { cnn, lstm, bilstm };
enum class ClassHead { softmax2, sigmoid1 };
/// Where the LSTM "relu" goes: replacing both tanh calls inside the cell, or
/// as a separate activation on a tanh-cell LSTM's output.
enum class ReluPlacement { in_cell, after_layer };

Architecture architecture_from_string(const std::string& name);
std::string to_string(Architecture a);
std::string display_name(Architecture a);  // CNN, LSTM, BiLSTM
ClassHead head_from_string(const std::string& name);
std::string to_string(ClassHead h);
ClassHead default_head(Architecture a);
ReluPlacement relu_placement_from_string(const std::string& name);
std::string to_string(ReluPlacement p);

struct ModelConfig {
    Architecture architecture = Architecture::bilstm;
    ClassHead head = ClassHead::sigmoid1;
    bool embedding_trainable = true;
    std::size_t max_len = 0;
    std::size_t token_k = 1;
    std::size_t conv_kernel = 3;
    ReluPlacement lstm_relu = ReluPlacement::in_cell;
    std::uint64_t seed = 1;

    static ModelConfig for_architecture(Architecture a, std::size_t max_len, std::size_t token_k, std::uint64_t seed);
};

/// Classifier-aligned embedding: row i holds the vector of vocab token i.
struct EmbeddingSource {
    seqdata::Vocabulary vocab;
    nn::RowMatrix table;
};

struct Batch {
    std::size_t size = 0;
    std::size_t length = 0;
    std::vector<int> ids;  // size * length
    Tensor mask;           // [size, length]
};

Batch make_batch(std::span<const seqdata::EncodedSequence> sequences, std::span<const std::size_t> indices = {});

class Classifier;

struct ModelParams {
    static constexpr std::uint32_t kFormatVersion = 1;

    std::uint32_t format_version = kFormatVersion;
    ModelConfig config;
    std::vector<std::pair<std::string, Tensor>> tensors;  // every trainable tensor except the embedding
    embed::EmbeddingMatrix embedding;                      // classifier vocabulary + embedding rows
};

/// Embedding lookup followed by one of the three layer stacks and a class head.
class Classifier {
public:
    Classifier(const ModelConfig& config, EmbeddingSource source);
    Classifier(Classifier&&) noexcept;
    Classifier& operator=(Classifier&&) noexcept;
    ~Classifier();

    const ModelConfig& config() const { return config_; }
    const seqdata::Vocabulary& vocab() const { return vocab_; }
    std::size_t embedding_dim() const { return embedding_.value.dim(1); }

    /// Head output: [B, 2] softmax rows or [B, 1] sigmoid scores.
    Tensor forward(const Batch& batch, nn::Mode mode, Rng* dropout_rng = nullptr);
    /// Backpropagates dLoss/dOutput of the last forward call.
    void backward(const Tensor& grad_output);

    /// Every trainable parameter, the embedding first when it is trainable.
    std::vector<nn::Parameter*> parameters();
    /// Layer parameters plus the embedding regardless of trainability.
    std::vector<nn::Parameter*> all_tensors();
    std::size_t parameter_count();
    std::vector<std::string> layer_names() const;

    nn::Parameter& embedding() { return embedding_; }

    /// Positive-class probability per row in inference mode.
    std::vector<Real> predict(std::span<const seqdata::EncodedSequence> sequences, std::size_t batch_size = 64);

    /// Class-1 probability from a head output.
    static std::vector<Real> positive_scores(const Tensor& head_output, ClassHead head);

    nn::LossKind loss_kind() const {
        return config_.head == ClassHead::sigmoid1 ? nn::LossKind::binary_ce : nn::LossKind::categorical_ce;
    }
    /// Targets shaped like the head output for the given labels.
    Tensor targets(std::span<const int> labels) const;

    ModelParams export_params() const;
    static Classifier from_params(const ModelParams& params);

private:
    ModelConfig config_;
    seqdata::Vocabulary vocab_;
    nn::Parameter embedding_;
    std::vector<std::unique_ptr<nn::Layer>> layers_;
    std::vector<int> last_ids_;
    std::size_t last_batch_ = 0, last_len_ = 0;
};

Classifier build_cnn(const ModelConfig& config, EmbeddingSource source);
Classifier build_lstm(const ModelConfig& config, EmbeddingSource source);
Classifier build_bilstm(const ModelConfig& config, EmbeddingSource source);
Classifier build_model(const ModelConfig& config, EmbeddingSource source);

struct TrainConfig {
    std::size_t max_epochs = 50;
    std::size_t batch_size = 32;
    Real lr = 0.01;
    std::size_t patience = 3;
    /// Fraction of the training data held out for early stopping; 0 disables
    /// validation and early stopping.
    Real validation_fraction = 0.1;
    std::optional<nn::LossKind> loss_kind;  // defaults to the head's loss
    std::uint64_t seed = 1;
    /// Scores the training part in inference mode after every epoch.
    bool track_train_accuracy = false;

    void validate() const;
};

inline constexpr std::size_t kBatchSizeGrid[] = {16, 32, 64, 96, 128, 192};

struct TrainHistory {
    std::vector<Real> train_loss;
    std::vector<Real> val_loss;  // NaN entries when validation is disabled
    std::vector<Real> train_accuracy;  // per epoch, only with track_train_accuracy
    std::size_t stopped_epoch = 0;
    std::size_t best_epoch = 0;
};

class TrainingDiverged : public ModelError {
public:
    TrainingDiverged(const std::string& what, TrainHistory history)
        : ModelError(what), history_(std::move(history)) {}
    const TrainHistory& history() const { return history_; }

private:
    TrainHistory history_;
};

/// Patience-based early stopping on validation loss.
class EarlyStopping {
public:
    explicit EarlyStopping(std::size_t patience) : patience_(patience) {}
    /// Records one epoch; returns true when training should stop.
    bool update(Real val_loss);
    bool improved() const { return improved_; }
    std::size_t best_epoch() const { return best_epoch_; }
    Real best() const { return best_; }

private:
    std::size_t patience_;
    std::size_t epoch_ = 0, best_epoch_ = 0, wait_ = 0;
    Real best_ = 0;
    bool improved_ = false;
};

struct LabeledSequences {
    std::vector<seqdata::EncodedSequence> encoded;
    std::vector<int> labels;
};

LabeledSequences encode_dataset(const seqdata::Dataset& dataset, const seqdata::Vocabulary& vocab, std::size_t k,
                                std::size_t max_len);

struct TrainResult {
    ModelParams params;
    TrainHistory history;
};

/// Mini-batch Adam with per-epoch seeded shuffling. The model is left holding
/// the weights of the best validation epoch.
TrainResult train(Classifier& model, const LabeledSequences& data, const TrainConfig& config);

Real accuracy(std::span<const Real> scores, std::span<const int> labels, Real threshold = 0.5);

/// Tokenizes raw sequences with the model's token length and predicts. Throws
/// seqdata::DataError for invalid or too-short sequences.
std::vector<Real> predict_sequences(Classifier& model, std::span<const std::string> sequences);

/// Binary container: magic, format version, text header with the shapes
/// manifest, raw little-endian float64 tensors, the embedding text section and
/// an FNV-1a 64 checksum.
std::string serialize_params(const ModelParams& params);
ModelParams deserialize_params(std::string_view bytes);
void save_params(const ModelParams& params, const std::filesystem::path& path);
ModelParams load_params(const std::filesystem::path& path);

}  // namespace pepclass::models
