#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pepclass/embed.hpp"
#include "pepclass/models.hpp"
#include "pepclass/seqdata.hpp"

namespace pepclass::eval {

using nn::Real;

class EvalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ------------------------------------------------------------ metrics

struct ConfusionCounts {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    std::size_t total() const { return tp + fp + tn + fn; }
    bool operator==(const ConfusionCounts&) const = default;
};

/// A record is predicted positive iff score >= threshold.
ConfusionCounts confusion(std::span<const Real> scores, std::span<const int> labels, Real threshold = 0.5);

struct Metrics {
    Real acc = 0, sen = 0, spe = 0, mcc = 0;
    bool sen_degenerate = false;
    bool spe_degenerate = false;
    bool mcc_degenerate = false;
    bool degenerate() const { return sen_degenerate || spe_degenerate || mcc_degenerate; }
};

/// Fractions in [0,1] (mcc in [-1,1]). A zero denominator reports 0 and sets
/// the matching degenerate flag.
Metrics metrics(const ConfusionCounts& c);

struct RocPoint {
    Real fpr = 0, tpr = 0, threshold = 0;
};

struct RocCurve {
    std::vector<RocPoint> points;  // from (0,0) at threshold +inf to (1,1)
    Real auc = 0;
};

/// Threshold sweep over distinct scores in descending order with tied scores
/// grouped; trapezoidal area.
RocCurve roc_auc(std::span<const Real> scores, std::span<const int> labels);

// ------------------------------------------------------------ experiments

enum class EmbeddingKind { word2vec_skipgram, word2vec_cbow, fasttext };

struct EmbeddingSpec {
    EmbeddingKind kind = EmbeddingKind::fasttext;
    std::size_t n = 3;  // FastText n-gram size; ignored for Word2Vec

    static EmbeddingSpec ws() { return {EmbeddingKind::word2vec_skipgram, 1}; }
    static EmbeddingSpec wc() { return {EmbeddingKind::word2vec_cbow, 1}; }
    static EmbeddingSpec ft(std::size_t n) { return {EmbeddingKind::fasttext, n}; }
    /// Parses "WS", "WC" or "FT(n)" (case-insensitive; "ft3" also accepted).
    static EmbeddingSpec parse(const std::string& label);

    std::string label() const;
    /// Token length: 1 for Word2Vec, n for FT(n).
    std::size_t token_k() const { return kind == EmbeddingKind::fasttext ? n : 1; }
    /// `base` with mode, maxn = n, minn clipped to n and seed filled in.
    embed::EmbeddingConfig configure(embed::EmbeddingConfig base, std::uint64_t seed) const;
};

struct ExperimentConfig {
    embed::EmbeddingConfig embedding;  // dim, window, negatives, epochs, lr, buckets, min_count
    models::TrainConfig train;
    bool embedding_trainable = true;
    std::optional<models::ClassHead> head;  // defaults to the architecture's head
    models::ReluPlacement lstm_relu = models::ReluPlacement::in_cell;
    std::size_t n_runs = 10;
    std::uint64_t seed_base = 1;
    Real test_fraction = 0.2;
    Real threshold = 0.5;
    std::size_t threads = 0;  // 0 = hardware concurrency
};

struct RunResult {
    std::uint64_t seed = 0;
    bool failed = false;
    std::string error;
    // percentages
    Real acc = 0, sen = 0, spe = 0, mcc = 0, auc = 0;
    ConfusionCounts counts;
    models::TrainHistory history;
    RocCurve roc;
    std::vector<Real> scores;
    std::vector<int> labels;
};

struct MetricSummary {
    Real acc = 0, sen = 0, spe = 0, mcc = 0, auc = 0;
};

struct EvalReport {
    std::string config_fingerprint;
    std::string dataset;
    std::string embedding;
    std::string architecture;
    std::vector<RunResult> runs;
    MetricSummary mean, std, max;
    std::size_t failures = 0;

    std::string row_label() const { return embedding + "+" + architecture; }
};

std::string config_fingerprint(const std::string& dataset, const EmbeddingSpec& spec, models::Architecture arch,
                               const ExperimentConfig& config);

/// One holdout run: split, embedding trained on the training side only,
/// classifier trained, test split scored at the configured threshold.
RunResult run_once(const seqdata::Dataset& dataset, const EmbeddingSpec& spec, models::Architecture arch,
                   const ExperimentConfig& config, std::uint64_t seed);

/// n_runs holdout runs with seeds seed_base + r; runs may execute in parallel
/// and are merged by run index.
EvalReport run_experiment(const seqdata::Dataset& dataset, const EmbeddingSpec& spec, models::Architecture arch,
                          const ExperimentConfig& config);

/// Mean, sample standard deviation and maximum over the non-failed runs.
void aggregate(EvalReport& report);

struct GridCell {
    EmbeddingSpec embedding;
    models::Architecture architecture;
    std::string label() const;
};

struct GridResult {
    GridCell cell;
    std::optional<EvalReport> report;
    std::string error;
};

std::vector<GridCell> word2vec_grid();  // CNN/LSTM/BiLSTM x WS/WC, architecture-major
std::vector<GridCell> fasttext_grid();  // CNN/LSTM/BiLSTM x FT(2..4), architecture-major

std::vector<GridResult> experiment_grid(const seqdata::Dataset& dataset, std::span<const GridCell> grid,
                                        const ExperimentConfig& config);

/// Tab-separated `MODELS ACC SEN SPE MCC AUC` table of mean percentages.
std::string format_table(std::span<const GridResult> results);

// ------------------------------------------------------------ export

enum class ReportFormat { json, csv };

std::string report_to_json(const EvalReport& report);
EvalReport report_from_json(std::string_view text);
/// Header `seed,acc,sen,spe,mcc,auc` plus one row per run.
std::string report_to_csv(const EvalReport& report);
/// Columns `threshold,fpr,tpr`; the first point's threshold is written as inf.
std::string roc_to_csv(const RocCurve& curve);
/// Columns `epoch,train_loss,val_loss`, one row per trained epoch.
std::string history_to_csv(const models::TrainHistory& history);

/// ROC over the concatenated test predictions of every completed run.
RocCurve pooled_roc(const EvalReport& report);

/// Writes the report plus sidecars next to it: `<stem>_roc.csv` (pooled),
/// `<stem>_run<r>_roc.csv` and `<stem>_run<r>_loss.csv` per completed run.
void export_report(const EvalReport& report, const std::filesystem::path& path, ReportFormat format);

}  // namespace pepclass::eval
