#include <algorithm>
#include <array>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <optional>
#include <sstream>
#include <thread>

#include "pepclass/eval.hpp"
#include "pepclass/fileutil.hpp"

namespace pepclass::eval {

EmbeddingSpec EmbeddingSpec::parse(const std::string& label) {
    std::string s;
    for (char c : label)
        if (c != '(' && c != ')' && !std::isspace(static_cast<unsigned char>(c)))
            s += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (s == "WS") return ws();
    if (s == "WC") return wc();
    if (s.size() > 2 && s.rfind("FT", 0) == 0) {
        auto digits = s.substr(2);
        if (std::all_of(digits.begin(), digits.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
            auto n = std::stoul(digits);
            if (n >= 1) return ft(n);
        }
    }
    throw EvalError("unknown embedding '" + label + "' (expected WS, WC or FT(n))");
}

std::string EmbeddingSpec::label() const {
    switch (kind) {
        case EmbeddingKind::word2vec_skipgram: return "WS";
        case EmbeddingKind::word2vec_cbow: return "WC";
        case EmbeddingKind::fasttext: return "FT(" + std::to_string(n) + ")";
    }
    return "?";
}

embed::EmbeddingConfig EmbeddingSpec::configure(embed::EmbeddingConfig base, std::uint64_t seed) const {
    switch (kind) {
        case EmbeddingKind::word2vec_skipgram: base.mode = embed::EmbeddingMode::skipgram; break;
        case EmbeddingKind::word2vec_cbow: base.mode = embed::EmbeddingMode::cbow; break;
        case EmbeddingKind::fasttext:
            base.mode = embed::EmbeddingMode::fasttext;
            base.minn = std::min(base.minn, n);
            base.maxn = n;
            break;
    }
    base.seed = seed;
    return base;
}

std::string GridCell::label() const { return embedding.label() + "+" + models::display_name(architecture); }

std::string config_fingerprint(const std::string& dataset, const EmbeddingSpec& spec, models::Architecture arch,
                               const ExperimentConfig& c) {
    std::ostringstream os;
    const auto& e = c.embedding;
    const auto& t = c.train;
    os << "dataset=" << dataset << ";embedding=" << spec.label() << ";architecture=" << models::to_string(arch)
       << ";dim=" << e.dim << ";window=" << e.window << ";negatives=" << e.negatives << ";emb_epochs=" << e.epochs
       << ";emb_lr=" << format_real(e.lr_initial) << ";buckets=" << e.bucket_count << ";min_count=" << e.min_count
       << ";trainable=" << c.embedding_trainable << ";head=" << (c.head ? models::to_string(*c.head) : "auto") << ";lstm_relu=" << models::to_string(c.lstm_relu)
       << ";max_epochs=" << t.max_epochs << ";batch=" << t.batch_size << ";lr=" << format_real(t.lr)
       << ";patience=" << t.patience << ";val=" << format_real(t.validation_fraction)
       << ";loss=" << (t.loss_kind ? nn::to_string(*t.loss_kind) : "auto") << ";n_runs=" << c.n_runs
       << ";seed_base=" << c.seed_base << ";test_fraction=" << format_real(c.test_fraction)
       << ";threshold=" << format_real(c.threshold);
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : os.str()) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

RunResult run_once(const seqdata::Dataset& dataset, const EmbeddingSpec& spec, models::Architecture arch,
                   const ExperimentConfig& config, std::uint64_t seed) {
    RunResult result;
    result.seed = seed;
    try {
        auto [train_set, test_set] = seqdata::split_holdout(dataset, config.test_fraction, seed);
        const std::size_t k = spec.token_k();

        auto train_tokens = seqdata::tokenize_records(train_set, k);
        std::vector<seqdata::TokenList> corpus;
        for (const auto& t : train_tokens)
            if (!t.empty()) corpus.push_back(t);
        if (corpus.empty()) throw EvalError("no training sequence is long enough for k=" + std::to_string(k));

        auto ecfg = spec.configure(config.embedding, mix_seed(seed, 0xE3B));
        embed::EmbeddingMatrix matrix;
        std::optional<embed::SubwordIndex> subwords;
        if (ecfg.mode == embed::EmbeddingMode::fasttext) {
            auto ft = embed::train_fasttext(corpus, ecfg);
            matrix = std::move(ft.matrix);
            subwords = std::move(ft.subwords);
        } else {
            matrix = embed::train_word2vec(corpus, ecfg);
        }

        auto vocab = seqdata::Vocabulary::build(train_tokens, 1, k);
        std::size_t max_len = std::max<std::size_t>(1, seqdata::longest(train_tokens));
        models::EmbeddingSource source{vocab, embed::embedding_table(vocab, matrix, subwords ? &*subwords : nullptr)};

        auto mcfg = models::ModelConfig::for_architecture(arch, max_len, k, mix_seed(seed, 0x30D));
        mcfg.embedding_trainable = config.embedding_trainable;
        mcfg.lstm_relu = config.lstm_relu;
        if (config.head) mcfg.head = *config.head;
        auto model = models::build_model(mcfg, std::move(source));

        auto train_data = models::encode_dataset(train_set, vocab, k, max_len);
        auto tcfg = config.train;
        tcfg.seed = mix_seed(seed, 0x7A1);
        auto trained = models::train(model, train_data, tcfg);
        result.history = std::move(trained.history);

        auto test_data = models::encode_dataset(test_set, vocab, k, max_len);
        result.scores = model.predict(test_data.encoded, std::max<std::size_t>(tcfg.batch_size, 64));
        result.labels = test_data.labels;
        for (auto s : result.scores)
            if (!std::isfinite(s)) throw models::TrainingDiverged("non-finite test prediction", result.history);

        result.counts = confusion(result.scores, result.labels, config.threshold);
        auto m = metrics(result.counts);
        result.acc = 100 * m.acc;
        result.sen = 100 * m.sen;
        result.spe = 100 * m.spe;
        result.mcc = 100 * m.mcc;
        result.roc = roc_auc(result.scores, result.labels);
        result.auc = 100 * result.roc.auc;
    } catch (const models::TrainingDiverged& e) {
        result.failed = true;
        result.error = e.what();
        result.history = e.history();
    } catch (const std::exception& e) {
        result.failed = true;
        result.error = e.what();
    }
    return result;
}

void aggregate(EvalReport& report) {
    std::vector<const RunResult*> ok;
    report.failures = 0;
    for (const auto& r : report.runs) {
        if (r.failed)
            ++report.failures;
        else
            ok.push_back(&r);
    }
    auto fields = [](MetricSummary& s) {
        return std::array<Real*, 5>{&s.acc, &s.sen, &s.spe, &s.mcc, &s.auc};
    };
    auto values = [](const RunResult& r) { return std::array<Real, 5>{r.acc, r.sen, r.spe, r.mcc, r.auc}; };
    auto mean = fields(report.mean), sd = fields(report.std), mx = fields(report.max);
    const Real nan = std::numeric_limits<Real>::quiet_NaN();
    for (std::size_t f = 0; f < 5; ++f) {
        if (ok.empty()) {
            *mean[f] = *sd[f] = *mx[f] = nan;
            continue;
        }
        Real sum = 0, best = -std::numeric_limits<Real>::infinity();
        for (auto* r : ok) {
            sum += values(*r)[f];
            best = std::max(best, values(*r)[f]);
        }
        Real mu = sum / static_cast<Real>(ok.size());
        Real ss = 0;
        for (auto* r : ok) ss += (values(*r)[f] - mu) * (values(*r)[f] - mu);
        *mean[f] = mu;
        *sd[f] = ok.size() > 1 ? std::sqrt(ss / static_cast<Real>(ok.size() - 1)) : 0.0;
        *mx[f] = best;
    }
}

namespace {

template <typename Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, n);
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) fn(i);
        });
    for (auto& th : pool) th.join();
}

}  // namespace

EvalReport run_experiment(const seqdata::Dataset& dataset, const EmbeddingSpec& spec, models::Architecture arch,
                          const ExperimentConfig& config) {
    if (dataset.empty()) throw EvalError("dataset is empty");
    if (config.n_runs == 0) throw EvalError("n_runs must be positive");
    if (!(config.test_fraction > 0 && config.test_fraction < 1)) throw EvalError("test_fraction must be in (0, 1)");
    config.embedding.validate();
    config.train.validate();

    EvalReport report;
    report.config_fingerprint = config_fingerprint(dataset.name, spec, arch, config);
    report.dataset = dataset.name;
    report.embedding = spec.label();
    report.architecture = models::display_name(arch);
    report.runs.resize(config.n_runs);
    parallel_for(config.n_runs, config.threads, [&](std::size_t r) {
        report.runs[r] = run_once(dataset, spec, arch, config, config.seed_base + r);
    });
    aggregate(report);
    return report;
}

std::vector<GridCell> word2vec_grid() {
    std::vector<GridCell> grid;
    for (auto a : {models::Architecture::cnn, models::Architecture::lstm, models::Architecture::bilstm})
        for (auto e : {EmbeddingSpec::ws(), EmbeddingSpec::wc()}) grid.push_back({e, a});
    return grid;
}

std::vector<GridCell> fasttext_grid() {
    std::vector<GridCell> grid;
    for (auto a : {models::Architecture::cnn, models::Architecture::lstm, models::Architecture::bilstm})
        for (std::size_t n : {2, 3, 4}) grid.push_back({EmbeddingSpec::ft(n), a});
    return grid;
}

std::vector<GridResult> experiment_grid(const seqdata::Dataset& dataset, std::span<const GridCell> grid,
                                        const ExperimentConfig& config) {
    if (grid.empty()) throw EvalError("experiment grid is empty");
    std::vector<GridResult> results;
    for (const auto& cell : grid) {
        GridResult r;
        r.cell = cell;
        try {
            r.report = run_experiment(dataset, cell.embedding, cell.architecture, config);
            if (r.report->failures == r.report->runs.size()) r.error = "all runs failed: " + r.report->runs[0].error;
        } catch (const std::exception& e) {
            r.error = e.what();
        }
        results.push_back(std::move(r));
    }
    return results;
}

std::string format_table(std::span<const GridResult> results) {
    std::string out = "MODELS\tACC\tSEN\tSPE\tMCC\tAUC\n";
    char buf[64];
    for (const auto& r : results) {
        out += r.cell.label();
        if (!r.report || r.report->failures == r.report->runs.size()) {
            out += "\tfailed: " + r.error + "\n";
            continue;
        }
        const auto& m = r.report->mean;
        for (Real v : {m.acc, m.sen, m.spe, m.mcc, m.auc}) {
            std::snprintf(buf, sizeof buf, "\t%.2f", v);
            out += buf;
        }
        if (r.report->failures > 0) out += "\t(" + std::to_string(r.report->failures) + " failed runs)";
        out += "\n";
    }
    return out;
}

}  // namespace pepclass::eval
