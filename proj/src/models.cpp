#include "pepclass/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace pepclass::models {

Architecture architecture_from_string(const std::string& name) {
    if (name == "cnn" || name == "CNN") return Architecture::cnn;
    if (name == "lstm" || name == "LSTM") return Architecture::lstm;
    if (name == "bilstm" || name == "BiLSTM") return Architecture::bilstm;
    throw ModelError("unknown architecture '" + name + "' (expected cnn, lstm or bilstm)");
}

std::string to_string(Architecture a) {
    switch (a) {
        case Architecture::cnn: return "cnn";
        case Architecture::lstm: return "lstm";
        case Architecture::bilstm: return "bilstm";
    }
    return "?";
}

std::string display_name(Architecture a) {
    switch (a) {
        case Architecture::cnn: return "CNN";
        case Architecture::lstm: return "LSTM";
        case Architecture::bilstm: return "BiLSTM";
    }
    return "?";
}

ClassHead head_from_string(const std::string& name) {
    if (name == "softmax2") return ClassHead::softmax2;
    if (name == "sigmoid1") return ClassHead::sigmoid1;
    throw ModelError("unknown class head '" + name + "' (expected softmax2 or sigmoid1)");
}

std::string to_string(ClassHead h) { return h == ClassHead::softmax2 ? "softmax2" : "sigmoid1"; }

ClassHead default_head(Architecture a) { return a == Architecture::bilstm ? ClassHead::sigmoid1 : ClassHead::softmax2; }

ReluPlacement relu_placement_from_string(const std::string& name) {
    if (name == "in_cell") return ReluPlacement::in_cell;
    if (name == "after_layer") return ReluPlacement::after_layer;
    throw ModelError("unknown relu placement '" + name + "' (expected in_cell or after_layer)");
}

std::string to_string(ReluPlacement p) { return p == ReluPlacement::in_cell ? "in_cell" : "after_layer"; }

ModelConfig ModelConfig::for_architecture(Architecture a, std::size_t max_len, std::size_t token_k, std::uint64_t seed) {
    ModelConfig c;
    c.architecture = a;
    c.head = default_head(a);
    c.max_len = max_len;
    c.token_k = token_k;
    c.seed = seed;
    return c;
}

Batch make_batch(std::span<const seqdata::EncodedSequence> sequences, std::span<const std::size_t> indices) {
    std::vector<std::size_t> all;
    if (indices.empty()) {
        all.resize(sequences.size());
        std::iota(all.begin(), all.end(), std::size_t{0});
        indices = all;
    }
    Batch b;
    b.size = indices.size();
    b.length = b.size ? sequences[indices[0]].ids.size() : 0;
    b.ids.resize(b.size * b.length);
    b.mask = Tensor({b.size, b.length});
    for (std::size_t r = 0; r < b.size; ++r) {
        const auto& s = sequences[indices[r]];
        if (s.ids.size() != b.length) throw ModelError("batch sequences differ in encoded length");
        for (std::size_t t = 0; t < b.length; ++t) {
            b.ids[r * b.length + t] = s.ids[t];
            b.mask.at(r, t) = s.mask[t] ? 1.0 : 0.0;
        }
    }
    return b;
}

// ------------------------------------------------------------ Classifier

Classifier::Classifier(Classifier&&) noexcept = default;
Classifier& Classifier::operator=(Classifier&&) noexcept = default;
Classifier::~Classifier() = default;

Classifier::Classifier(const ModelConfig& config, EmbeddingSource source)
    : config_(config), vocab_(std::move(source.vocab)) {
    if (source.table.rows() != static_cast<Eigen::Index>(vocab_.size()))
        throw ModelError("embedding table has " + std::to_string(source.table.rows()) + " rows for a vocabulary of " +
                         std::to_string(vocab_.size()));
    if (config.max_len == 0) throw ModelError("max_len must be >= 1");
    const std::size_t dim = static_cast<std::size_t>(source.table.cols());
    if (dim == 0) throw ModelError("embedding dimension must be >= 1");
    Tensor table({vocab_.size(), dim});
    table.matrix() = source.table;
    table.matrix().row(seqdata::Vocabulary::kPad).setZero();
    embedding_ = nn::Parameter("embedding", std::move(table));

    Rng init(mix_seed(config.seed, 0x1417));
    using nn::Activation;
    switch (config.architecture) {
        case Architecture::cnn: {
            if (config.max_len < config.conv_kernel)
                throw ModelError("max_len " + std::to_string(config.max_len) + " is shorter than the conv kernel " +
                                 std::to_string(config.conv_kernel));
            layers_.push_back(std::make_unique<nn::Conv1d>(config.conv_kernel, dim, 64, 1, nn::Padding::valid, init, "conv1d"));
            layers_.push_back(std::make_unique<nn::ActivationLayer>(Activation::relu));
            layers_.push_back(std::make_unique<nn::GlobalMaxPool1d>());
            layers_.push_back(std::make_unique<nn::Dropout>(0.3));
            layers_.push_back(std::make_unique<nn::Dropout>(0.3));
            break;
        }
        case Architecture::lstm: {
            const bool in_cell = config.lstm_relu == ReluPlacement::in_cell;
            layers_.push_back(std::make_unique<nn::Lstm>(
                dim, 32, in_cell ? nn::CellActivation::relu : nn::CellActivation::tanh, false, false, init, "lstm"));
            if (!in_cell) layers_.push_back(std::make_unique<nn::ActivationLayer>(Activation::relu));
            layers_.push_back(std::make_unique<nn::Dropout>(0.3));
            layers_.push_back(std::make_unique<nn::Dropout>(0.3));
            break;
        }
        case Architecture::bilstm: {
            layers_.push_back(std::make_unique<nn::Bilstm>(dim, 64, nn::CellActivation::tanh, true, init, "bilstm1"));
            layers_.push_back(std::make_unique<nn::Dropout>(0.2));
            layers_.push_back(std::make_unique<nn::Bilstm>(128, 32, nn::CellActivation::tanh, true, init, "bilstm2"));
            layers_.push_back(std::make_unique<nn::Dropout>(0.2));
            layers_.push_back(std::make_unique<nn::Bilstm>(64, 16, nn::CellActivation::tanh, false, init, "bilstm3"));
            layers_.push_back(std::make_unique<nn::Dropout>(0.2));
            break;
        }
    }
    const std::size_t features = config.architecture == Architecture::cnn ? 64
                                 : config.architecture == Architecture::lstm ? 32
                                                                             : 32;
    if (config.head == ClassHead::softmax2)
        layers_.push_back(std::make_unique<nn::Dense>(features, 2, Activation::softmax, init, "dense"));
    else
        layers_.push_back(std::make_unique<nn::Dense>(features, 1, Activation::sigmoid, init, "dense"));
}

Tensor Classifier::forward(const Batch& batch, nn::Mode mode, Rng* dropout_rng) {
    const std::size_t dim = embedding_dim();
    if (batch.length != config_.max_len)
        throw ModelError("batch length " + std::to_string(batch.length) + " does not match model max_len " +
                         std::to_string(config_.max_len));
    Tensor x({batch.size, batch.length, dim});
    for (std::size_t i = 0; i < batch.ids.size(); ++i) {
        const int id = batch.ids[i];
        if (id < 0 || static_cast<std::size_t>(id) >= vocab_.size()) throw ModelError("token id out of range");
        if (id == seqdata::Vocabulary::kPad) continue;  // PAD embeds as the zero vector
        std::copy_n(embedding_.value.data() + static_cast<std::size_t>(id) * dim, dim, x.data() + i * dim);
    }
    last_ids_ = batch.ids;
    last_batch_ = batch.size;
    last_len_ = batch.length;
    nn::ForwardContext ctx{mode, &batch.mask, dropout_rng};
    for (auto& layer : layers_) x = layer->forward(x, ctx);
    return x;
}

void Classifier::backward(const Tensor& grad_output) {
    Tensor g = grad_output;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
    if (!config_.embedding_trainable) return;
    const std::size_t dim = embedding_dim();
    for (std::size_t i = 0; i < last_ids_.size(); ++i) {
        const int id = last_ids_[i];
        if (id == seqdata::Vocabulary::kPad) continue;
        Real* dst = embedding_.grad.data() + static_cast<std::size_t>(id) * dim;
        const Real* src = g.data() + i * dim;
        for (std::size_t j = 0; j < dim; ++j) dst[j] += src[j];
    }
}

std::vector<nn::Parameter*> Classifier::parameters() {
    std::vector<nn::Parameter*> out;
    if (config_.embedding_trainable) out.push_back(&embedding_);
    for (auto& l : layers_)
        for (auto* p : l->parameters()) out.push_back(p);
    return out;
}

std::vector<nn::Parameter*> Classifier::all_tensors() {
    std::vector<nn::Parameter*> out{&embedding_};
    for (auto& l : layers_)
        for (auto* p : l->parameters()) out.push_back(p);
    return out;
}

std::size_t Classifier::parameter_count() {
    std::size_t n = 0;
    for (auto* p : parameters()) n += p->value.size();
    return n;
}

std::vector<std::string> Classifier::layer_names() const {
    std::vector<std::string> names{"embedding"};
    for (const auto& l : layers_) names.push_back(l->name());
    return names;
}

std::vector<Real> Classifier::positive_scores(const Tensor& out, ClassHead head) {
    std::vector<Real> s(out.dim(0));
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = head == ClassHead::softmax2 ? out.at(i, 1) : out[i];
    return s;
}

Tensor Classifier::targets(std::span<const int> labels) const {
    if (config_.head == ClassHead::sigmoid1) {
        Tensor t({labels.size(), 1});
        for (std::size_t i = 0; i < labels.size(); ++i) t[i] = labels[i];
        return t;
    }
    Tensor t({labels.size(), 2});
    for (std::size_t i = 0; i < labels.size(); ++i) t.at(i, labels[i] == 1 ? 1 : 0) = 1.0;
    return t;
}

std::vector<Real> Classifier::predict(std::span<const seqdata::EncodedSequence> sequences, std::size_t batch_size) {
    std::vector<Real> out;
    out.reserve(sequences.size());
    for (std::size_t start = 0; start < sequences.size(); start += batch_size) {
        const std::size_t end = std::min(sequences.size(), start + batch_size);
        auto b = make_batch(sequences.subspan(start, end - start));
        auto scores = positive_scores(forward(b, nn::Mode::infer), config_.head);
        out.insert(out.end(), scores.begin(), scores.end());
    }
    return out;
}

ModelParams Classifier::export_params() const {
    ModelParams p;
    p.config = config_;
    for (const auto& l : layers_)
        for (auto* t : l->parameters()) p.tensors.emplace_back(t->name, t->value);
    p.embedding.mode = embed::EmbeddingMode::skipgram;
    p.embedding.vocab = vocab_;
    p.embedding.input_vectors = embedding_.value.matrix();
    p.embedding.output_vectors = nn::RowMatrix::Zero(p.embedding.input_vectors.rows(), p.embedding.input_vectors.cols());
    return p;
}

Classifier Classifier::from_params(const ModelParams& params) {
    Classifier c(params.config, EmbeddingSource{params.embedding.vocab, params.embedding.input_vectors});
    std::vector<nn::Parameter*> slots;
    for (auto& l : c.layers_)
        for (auto* p : l->parameters()) slots.push_back(p);
    if (slots.size() != params.tensors.size())
        throw ModelError("parameter file holds " + std::to_string(params.tensors.size()) + " tensors, the " +
                         to_string(params.config.architecture) + " architecture needs " + std::to_string(slots.size()));
    for (std::size_t i = 0; i < slots.size(); ++i) {
        const auto& [name, tensor] = params.tensors[i];
        if (name != slots[i]->name || tensor.shape() != slots[i]->value.shape())
            throw ModelError("tensor '" + name + "' " + nn::shape_string(tensor.shape()) + " does not match expected '" +
                             slots[i]->name + "' " + nn::shape_string(slots[i]->value.shape()));
        slots[i]->value = tensor;
    }
    // the stored embedding already carries fine-tuned values, including the PAD row
    c.embedding_.value.matrix() = params.embedding.input_vectors;
    return c;
}

Classifier build_cnn(const ModelConfig& config, EmbeddingSource source) {
    auto c = config;
    c.architecture = Architecture::cnn;
    return Classifier(c, std::move(source));
}

Classifier build_lstm(const ModelConfig& config, EmbeddingSource source) {
    auto c = config;
    c.architecture = Architecture::lstm;
    return Classifier(c, std::move(source));
}

Classifier build_bilstm(const ModelConfig& config, EmbeddingSource source) {
    auto c = config;
    c.architecture = Architecture::bilstm;
    return Classifier(c, std::move(source));
}

Classifier build_model(const ModelConfig& config, EmbeddingSource source) { return Classifier(config, std::move(source)); }

// ------------------------------------------------------------ training

void TrainConfig::validate() const {
    if (max_epochs == 0) throw ModelError("max_epochs must be >= 1");
    if (batch_size == 0) throw ModelError("batch_size must be >= 1");
    if (!(lr > 0)) throw ModelError("learning rate must be positive");
    if (!(validation_fraction >= 0.0 && validation_fraction < 1.0))
        throw ModelError("validation_fraction must lie in [0, 1)");
}

bool EarlyStopping::update(Real val_loss) {
    ++epoch_;
    improved_ = epoch_ == 1 || val_loss < best_;
    if (improved_) {
        best_ = val_loss;
        best_epoch_ = epoch_;
        wait_ = 0;
        return false;
    }
    ++wait_;
    return wait_ >= patience_;
}

LabeledSequences encode_dataset(const seqdata::Dataset& dataset, const seqdata::Vocabulary& vocab, std::size_t k,
                                std::size_t max_len) {
    LabeledSequences out;
    auto tokens = seqdata::tokenize_records(dataset, k);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        out.encoded.push_back(seqdata::encode(tokens[i], vocab, max_len));
        out.labels.push_back(dataset.records[i].label);
    }
    return out;
}

namespace {

Real evaluate_loss(Classifier& model, const LabeledSequences& data, std::span<const std::size_t> idx,
                   nn::LossKind kind, std::size_t batch_size) {
    Real total = 0;
    for (std::size_t start = 0; start < idx.size(); start += batch_size) {
        auto part = idx.subspan(start, std::min(batch_size, idx.size() - start));
        auto batch = make_batch(data.encoded, part);
        std::vector<int> labels;
        for (auto i : part) labels.push_back(data.labels[i]);
        auto out = model.forward(batch, nn::Mode::infer);
        total += nn::compute_loss(kind, out, model.targets(labels)).value * static_cast<Real>(part.size());
    }
    return total / static_cast<Real>(idx.size());
}

}  // namespace

TrainResult train(Classifier& model, const LabeledSequences& data, const TrainConfig& config) {
    config.validate();
    if (data.encoded.empty() || data.encoded.size() != data.labels.size()) throw ModelError("training data is empty");
    const bool has_pos = std::count(data.labels.begin(), data.labels.end(), 1) > 0;
    const bool has_neg = std::count(data.labels.begin(), data.labels.end(), 0) > 0;
    if (!has_pos || !has_neg) throw ModelError("training data must contain both classes");
    const nn::LossKind kind = config.loss_kind.value_or(model.loss_kind());
    if (kind == nn::LossKind::categorical_ce && model.config().head != ClassHead::softmax2)
        throw ModelError("categorical cross-entropy needs a softmax2 head");

    // stratified validation hold-out
    std::vector<std::size_t> train_idx, val_idx;
    Rng split_rng(mix_seed(config.seed, 0x5A1));
    for (int cls : {1, 0}) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < data.labels.size(); ++i)
            if (data.labels[i] == cls) members.push_back(i);
        split_rng.shuffle(members.begin(), members.end());
        const auto take = static_cast<std::size_t>(std::lround(config.validation_fraction * static_cast<Real>(members.size())));
        for (std::size_t i = 0; i < members.size(); ++i) (i < take ? val_idx : train_idx).push_back(members[i]);
    }
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(val_idx.begin(), val_idx.end());
    if (train_idx.empty()) throw ModelError("validation_fraction leaves no training data");
    const bool validate = !val_idx.empty();

    Rng shuffle_rng(mix_seed(config.seed, 0x5F1));
    Rng dropout_rng(mix_seed(config.seed, 0xD80));
    nn::Adam adam(config.lr);
    auto params = model.parameters();
    nn::zero_grads(params);

    TrainHistory history;
    EarlyStopping stopper(config.patience);
    std::vector<Tensor> best_weights;
    auto snapshot = [&]() {
        best_weights.clear();
        for (auto* p : model.all_tensors()) best_weights.push_back(p->value);
    };

    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        std::vector<std::size_t> order = train_idx;
        shuffle_rng.shuffle(order.begin(), order.end());
        Real epoch_loss = 0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            std::span<const std::size_t> part(order.data() + start, std::min(config.batch_size, order.size() - start));
            auto batch = make_batch(data.encoded, part);
            std::vector<int> labels;
            for (auto i : part) labels.push_back(data.labels[i]);
            auto out = model.forward(batch, nn::Mode::train, &dropout_rng);
            auto loss = nn::compute_loss(kind, out, model.targets(labels));
            if (!std::isfinite(loss.value)) {
                history.stopped_epoch = epoch - 1;
                throw TrainingDiverged("training loss became non-finite in epoch " + std::to_string(epoch), history);
            }
            epoch_loss += loss.value * static_cast<Real>(part.size());
            model.backward(loss.grad);
            adam.step(params);
        }
        epoch_loss /= static_cast<Real>(order.size());
        const Real val = validate ? evaluate_loss(model, data, val_idx, kind, 64) : std::numeric_limits<Real>::quiet_NaN();
        history.train_loss.push_back(epoch_loss);
        history.val_loss.push_back(val);
        if (config.track_train_accuracy) {
            std::vector<seqdata::EncodedSequence> seqs;
            std::vector<int> labels;
            for (auto i : train_idx) {
                seqs.push_back(data.encoded[i]);
                labels.push_back(data.labels[i]);
            }
            history.train_accuracy.push_back(accuracy(model.predict(seqs), labels));
        }
        history.stopped_epoch = epoch;
        if (validate && !std::isfinite(val))
            throw TrainingDiverged("validation loss became non-finite in epoch " + std::to_string(epoch), history);

        if (!validate) {
            history.best_epoch = epoch;
            continue;
        }
        const bool stop = stopper.update(val);
        if (stopper.improved()) {
            snapshot();
            history.best_epoch = epoch;
        }
        if (stop) break;
    }
    if (validate && !best_weights.empty()) {
        auto slots = model.all_tensors();
        for (std::size_t i = 0; i < slots.size(); ++i) slots[i]->value = best_weights[i];
    }
    return TrainResult{model.export_params(), std::move(history)};
}

Real accuracy(std::span<const Real> scores, std::span<const int> labels, Real threshold) {
    if (scores.size() != labels.size() || scores.empty()) throw ModelError("accuracy: size mismatch");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) correct += ((scores[i] >= threshold ? 1 : 0) == labels[i]);
    return static_cast<Real>(correct) / static_cast<Real>(scores.size());
}

std::vector<Real> predict_sequences(Classifier& model, std::span<const std::string> sequences) {
    std::vector<seqdata::EncodedSequence> enc;
    for (std::size_t i = 0; i < sequences.size(); ++i) {
        seqdata::validate_sequence(sequences[i], i + 1);
        enc.push_back(seqdata::encode(seqdata::tokenize(sequences[i], model.config().token_k), model.vocab(),
                                      model.config().max_len));
    }
    return model.predict(enc);
}

}  // namespace pepclass::models
