#include "pepclass/embed.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "pepclass/fileutil.hpp"
#include "pepclass/layers.hpp"

namespace pepclass::embed {

EmbeddingMode mode_from_string(const std::string& name) {
    if (name == "skipgram") return EmbeddingMode::skipgram;
    if (name == "cbow") return EmbeddingMode::cbow;
    if (name == "fasttext") return EmbeddingMode::fasttext;
    throw EmbedError("unknown embedding mode '" + name + "' (expected skipgram, cbow or fasttext)");
}

std::string to_string(EmbeddingMode mode) {
    switch (mode) {
        case EmbeddingMode::skipgram: return "skipgram";
        case EmbeddingMode::cbow: return "cbow";
        case EmbeddingMode::fasttext: return "fasttext";
    }
    return "?";
}

void EmbeddingConfig::validate() const {
    if (dim < 1) throw EmbedError("embedding dim must be >= 1");
    if (window < 1) throw EmbedError("embedding window must be >= 1");
    if (negatives < 1) throw EmbedError("negatives must be >= 1");
    if (!(lr_initial > 0)) throw EmbedError("lr_initial must be positive");
    if (bucket_count < 1) throw EmbedError("bucket_count must be >= 1");
    if (mode == EmbeddingMode::fasttext && (minn < 1 || minn > maxn))
        throw EmbedError("fasttext needs 1 <= minn <= maxn");
}

// ------------------------------------------------------------ windows

std::vector<TrainingInstance> generate_pairs(std::span<const int> tokens, std::size_t window, EmbeddingMode mode,
                                             Rng& rng) {
    std::vector<TrainingInstance> out;
    if (window == 0) return out;
    const std::size_t n = tokens.size();
    for (std::size_t c = 0; c < n; ++c) {
        const std::size_t radius = 1 + static_cast<std::size_t>(rng.index(window));
        const std::size_t lo = c >= radius ? c - radius : 0;
        const std::size_t hi = std::min(n - 1, c + radius);
        if (mode == EmbeddingMode::cbow) {
            TrainingInstance inst{tokens[c], {}, radius};
            for (std::size_t j = lo; j <= hi; ++j)
                if (j != c) inst.context.push_back(tokens[j]);
            if (!inst.context.empty()) out.push_back(std::move(inst));
        } else {
            for (std::size_t j = lo; j <= hi; ++j)
                if (j != c) out.push_back(TrainingInstance{tokens[c], {tokens[j]}, radius});
        }
    }
    return out;
}

// ------------------------------------------------------------ negatives

NegativeSampler::NegativeSampler(std::span<const std::uint64_t> counts) {
    std::size_t distinct = 0;
    long double total = 0;
    std::vector<long double> w(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i) {
        if (counts[i] == 0) continue;
        ++distinct;
        w[i] = std::pow(static_cast<long double>(counts[i]), 0.75L);
        total += w[i];
    }
    if (distinct < 2) throw EmbedError("negative sampling needs at least 2 distinct tokens");
    prob_.resize(counts.size());
    cdf_.resize(counts.size());
    long double acc = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        prob_[i] = static_cast<Real>(w[i] / total);
        acc += w[i];
        cdf_[i] = static_cast<Real>(acc / total);
    }
    cdf_.back() = 1.0;
}

int NegativeSampler::sample(Rng& rng) const {
    const Real u = rng.uniform01();
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    auto idx = static_cast<std::size_t>(it - cdf_.begin());
    if (idx >= cdf_.size()) idx = cdf_.size() - 1;
    // zero-probability entries share their cdf value with a predecessor and are never hit
    return static_cast<int>(idx);
}

NegativeSampler build_negative_table(std::span<const std::uint64_t> counts) { return NegativeSampler(counts); }

namespace {

Real dot(const Real* a, const Real* b, std::size_t n) {
    Real s = 0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

}  // namespace

NegativeSamplingGrad negative_sampling_loss(std::span<const Real> center, std::span<const Real> positive,
                                            const std::vector<std::span<const Real>>& negatives) {
    const std::size_t d = center.size();
    if (positive.size() != d) throw EmbedError("negative_sampling_loss: dimension mismatch");
    NegativeSamplingGrad g;
    g.d_center.assign(d, 0.0);
    g.d_positive.assign(d, 0.0);
    const Real sp = nn::sigmoid(dot(positive.data(), center.data(), d));
    g.loss = -std::log(sp);
    for (std::size_t j = 0; j < d; ++j) {
        g.d_center[j] -= (1.0 - sp) * positive[j];
        g.d_positive[j] = -(1.0 - sp) * center[j];
    }
    for (const auto& neg : negatives) {
        if (neg.size() != d) throw EmbedError("negative_sampling_loss: dimension mismatch");
        const Real sn = nn::sigmoid(dot(neg.data(), center.data(), d));
        g.loss -= std::log(1.0 - sn);
        std::vector<Real> dn(d);
        for (std::size_t j = 0; j < d; ++j) {
            g.d_center[j] += sn * neg[j];
            dn[j] = sn * center[j];
        }
        g.d_negatives.push_back(std::move(dn));
    }
    return g;
}

// ------------------------------------------------------------ subwords

std::uint32_t fnv1a32(std::string_view bytes) {
    std::uint32_t h = 2166136261u;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 16777619u;
    }
    return h;
}

std::vector<std::string> subword_strings(std::string_view token, std::size_t minn, std::size_t maxn) {
    const std::string wrapped = "<" + std::string(token) + ">";
    std::vector<std::string> out;
    for (std::size_t n = minn; n <= maxn && n < wrapped.size(); ++n) {
        if (n == 0) continue;
        for (std::size_t i = 0; i + n <= wrapped.size(); ++i) out.push_back(wrapped.substr(i, n));
    }
    out.push_back(wrapped);
    return out;
}

std::vector<std::uint32_t> extract_subwords(std::string_view token, std::size_t minn, std::size_t maxn,
                                            std::uint32_t bucket_count) {
    std::vector<std::uint32_t> ids;
    for (const auto& s : subword_strings(token, minn, maxn)) ids.push_back(fnv1a32(s) % bucket_count);
    return ids;
}

SubwordIndex::SubwordIndex(std::uint32_t bucket_count, std::size_t dim, std::size_t minn, std::size_t maxn,
                           std::uint64_t seed)
    : bucket_count_(bucket_count), dim_(dim), minn_(minn), maxn_(maxn), seed_(seed) {
    if (bucket_count == 0) throw EmbedError("bucket_count must be >= 1");
}

void SubwordIndex::initial_row(std::uint32_t bucket, Real* out) const {
    Rng rng(mix_seed(seed_, bucket));
    const Real r = 0.5 / static_cast<Real>(dim_);
    for (std::size_t j = 0; j < dim_; ++j) out[j] = rng.uniform(-r, r);
}

std::vector<Real> SubwordIndex::row(std::uint32_t bucket) const {
    std::vector<Real> v(dim_);
    auto it = slot_.find(bucket);
    if (it != slot_.end())
        std::copy_n(data_.data() + it->second * dim_, dim_, v.data());
    else
        initial_row(bucket, v.data());
    return v;
}

Real* SubwordIndex::materialize(std::uint32_t bucket) {
    auto it = slot_.find(bucket);
    if (it != slot_.end()) return data_.data() + it->second * dim_;
    const std::size_t slot = slot_.size();
    slot_.emplace(bucket, slot);
    data_.resize((slot + 1) * dim_);
    initial_row(bucket, data_.data() + slot * dim_);
    return data_.data() + slot * dim_;
}

void SubwordIndex::reserve(std::size_t rows) { data_.reserve(rows * dim_); }

std::vector<std::uint32_t> SubwordIndex::stored_buckets() const {
    std::vector<std::uint32_t> ids;
    ids.reserve(slot_.size());
    for (const auto& [b, s] : slot_) ids.push_back(b);
    std::sort(ids.begin(), ids.end());
    return ids;
}

bool SubwordIndex::operator==(const SubwordIndex& other) const {
    if (bucket_count_ != other.bucket_count_ || dim_ != other.dim_ || minn_ != other.minn_ ||
        maxn_ != other.maxn_ || seed_ != other.seed_ || stored_buckets() != other.stored_buckets())
        return false;
    for (auto b : stored_buckets())
        if (row(b) != other.row(b)) return false;
    return true;
}

namespace {

constexpr char kBucketMagic[8] = {'P', 'E', 'P', 'B', 'K', 'T', '0', '1'};

template <typename T>
void put(std::string& out, T v) {
    unsigned char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    // little-endian on disk
    if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
    out.append(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T get(std::string_view data, std::size_t& pos) {
    if (pos + sizeof(T) > data.size()) throw EmbedError("bucket file is truncated");
    unsigned char buf[sizeof(T)];
    std::memcpy(buf, data.data() + pos, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
    pos += sizeof(T);
    T v;
    std::memcpy(&v, buf, sizeof(T));
    return v;
}

}  // namespace

void SubwordIndex::save(const std::filesystem::path& path) const {
    std::string out(kBucketMagic, sizeof kBucketMagic);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(dim_));
    put<std::uint32_t>(out, bucket_count_);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(minn_));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(maxn_));
    put<std::uint64_t>(out, seed_);
    const auto ids = stored_buckets();
    put<std::uint64_t>(out, ids.size());
    for (auto b : ids) {
        put<std::uint32_t>(out, b);
        const Real* r = data_.data() + slot_.at(b) * dim_;
        for (std::size_t j = 0; j < dim_; ++j) put<double>(out, r[j]);
    }
    write_file_atomic(path, out);
}

SubwordIndex SubwordIndex::load(const std::filesystem::path& path) {
    std::string data;
    try {
        data = read_file(path);
    } catch (const std::runtime_error& e) {
        throw EmbedError(e.what());
    }
    if (data.size() < sizeof kBucketMagic || std::memcmp(data.data(), kBucketMagic, sizeof kBucketMagic) != 0)
        throw EmbedError("not a bucket file: " + path.string());
    std::size_t pos = sizeof kBucketMagic;
    const auto dim = get<std::uint32_t>(data, pos);
    const auto buckets = get<std::uint32_t>(data, pos);
    const auto minn = get<std::uint32_t>(data, pos);
    const auto maxn = get<std::uint32_t>(data, pos);
    const auto seed = get<std::uint64_t>(data, pos);
    const auto rows = get<std::uint64_t>(data, pos);
    SubwordIndex idx(buckets, dim, minn, maxn, seed);
    idx.reserve(rows);
    for (std::uint64_t r = 0; r < rows; ++r) {
        const auto b = get<std::uint32_t>(data, pos);
        Real* dst = idx.materialize(b);
        for (std::uint32_t j = 0; j < dim; ++j) dst[j] = get<double>(data, pos);
    }
    if (pos != data.size()) throw EmbedError("bucket file has trailing bytes: " + path.string());
    return idx;
}

// ------------------------------------------------------------ training

bool EmbeddingMatrix::all_finite() const {
    return input_vectors.allFinite() && output_vectors.allFinite();
}

namespace {

struct Prepared {
    Vocabulary vocab;
    std::vector<std::vector<int>> sentences;
    std::size_t total_tokens = 0;
};

Prepared prepare(const std::vector<TokenList>& corpus, const EmbeddingConfig& config) {
    if (corpus.empty()) throw EmbedError("cannot train embeddings on an empty corpus");
    Prepared p;
    try {
        p.vocab = Vocabulary::build(corpus, config.min_count, corpus.front().empty() ? 1 : corpus.front().front().size());
    } catch (const seqdata::DataError& e) {
        throw EmbedError(e.what());
    }
    for (const auto& tokens : corpus) {
        std::vector<int> ids;
        for (const auto& t : tokens) {
            const int id = p.vocab.index_of(t);
            if (id != Vocabulary::kUnk) ids.push_back(id);
        }
        p.total_tokens += ids.size();
        p.sentences.push_back(std::move(ids));
    }
    if (p.total_tokens == 0) throw EmbedError("corpus contains no in-vocabulary tokens");
    return p;
}

EmbeddingMatrix init_matrix(const Vocabulary& vocab, const EmbeddingConfig& config, Rng& rng) {
    EmbeddingMatrix m;
    m.mode = config.mode;
    m.vocab = vocab;
    const auto v = static_cast<Eigen::Index>(vocab.size());
    const auto d = static_cast<Eigen::Index>(config.dim);
    m.input_vectors = RowMatrix::Zero(v, d);
    m.output_vectors = RowMatrix::Zero(v, d);
    const Real r = 0.5 / static_cast<Real>(config.dim);
    for (Eigen::Index i = Vocabulary::kUnk + 1; i < v; ++i)
        for (Eigen::Index j = 0; j < d; ++j) m.input_vectors(i, j) = rng.uniform(-r, r);
    return m;
}

// Accumulates into grad_v the (already lr-scaled) descent direction for v and
// updates the output rows in place.
void ns_step(const Real* v, Real* grad_v, int target, RowMatrix& out, const NegativeSampler& sampler,
             std::size_t negatives, Real lr, Rng& rng) {
    const std::size_t d = static_cast<std::size_t>(out.cols());
    for (std::size_t k = 0; k <= negatives; ++k) {
        int idx;
        Real label;
        if (k == 0) {
            idx = target;
            label = 1.0;
        } else {
            idx = sampler.sample(rng);
            if (idx == target) continue;
            label = 0.0;
        }
        Real* u = out.row(idx).data();
        const Real g = (label - nn::sigmoid(dot(u, v, d))) * lr;
        for (std::size_t j = 0; j < d; ++j) grad_v[j] += g * u[j];
        for (std::size_t j = 0; j < d; ++j) u[j] += g * v[j];
    }
}

void finalize_unk(EmbeddingMatrix& m) {
    const auto v = m.input_vectors.rows();
    if (v > 2) m.input_vectors.row(Vocabulary::kUnk) = m.input_vectors.bottomRows(v - 2).colwise().mean();
    m.input_vectors.row(Vocabulary::kPad).setZero();
}

Real learning_rate(const EmbeddingConfig& config, std::size_t step, std::size_t total) {
    const Real progress = total == 0 ? 0.0 : static_cast<Real>(step) / static_cast<Real>(total);
    const Real floor = config.lr_initial * 1e-4;
    return config.lr_initial + (floor - config.lr_initial) * std::min<Real>(progress, 1.0);
}

}  // namespace

EmbeddingMatrix train_word2vec(const std::vector<TokenList>& corpus, const EmbeddingConfig& config) {
    config.validate();
    if (config.mode == EmbeddingMode::fasttext) throw EmbedError("train_word2vec: mode must be skipgram or cbow");
    Prepared p = prepare(corpus, config);
    Rng rng(config.seed);
    EmbeddingMatrix m = init_matrix(p.vocab, config, rng);
    NegativeSampler sampler(p.vocab.counts());
    const std::size_t d = config.dim;
    const std::size_t total = config.epochs * p.total_tokens;
    std::size_t step = 0;
    std::vector<Real> grad(d), hidden(d);

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        for (const auto& sentence : p.sentences) {
            const std::size_t n = sentence.size();
            for (std::size_t c = 0; c < n; ++c) {
                const Real lr = learning_rate(config, step++, total);
                const std::size_t radius = 1 + static_cast<std::size_t>(rng.index(config.window));
                const std::size_t lo = c >= radius ? c - radius : 0;
                const std::size_t hi = std::min(n - 1, c + radius);
                if (config.mode == EmbeddingMode::skipgram) {
                    for (std::size_t j = lo; j <= hi; ++j) {
                        if (j == c) continue;
                        Real* v = m.input_vectors.row(sentence[c]).data();
                        std::fill(grad.begin(), grad.end(), 0.0);
                        ns_step(v, grad.data(), sentence[j], m.output_vectors, sampler, config.negatives, lr, rng);
                        for (std::size_t k = 0; k < d; ++k) v[k] += grad[k];
                    }
                } else {
                    std::fill(hidden.begin(), hidden.end(), 0.0);
                    std::size_t count = 0;
                    for (std::size_t j = lo; j <= hi; ++j) {
                        if (j == c) continue;
                        const Real* v = m.input_vectors.row(sentence[j]).data();
                        for (std::size_t k = 0; k < d; ++k) hidden[k] += v[k];
                        ++count;
                    }
                    if (count == 0) continue;
                    for (auto& h : hidden) h /= static_cast<Real>(count);
                    std::fill(grad.begin(), grad.end(), 0.0);
                    ns_step(hidden.data(), grad.data(), sentence[c], m.output_vectors, sampler, config.negatives, lr,
                            rng);
                    const Real share = 1.0 / static_cast<Real>(count);
                    for (std::size_t j = lo; j <= hi; ++j) {
                        if (j == c) continue;
                        Real* v = m.input_vectors.row(sentence[j]).data();
                        for (std::size_t k = 0; k < d; ++k) v[k] += share * grad[k];
                    }
                }
            }
        }
    }
    finalize_unk(m);
    if (!m.all_finite()) throw EmbedError("word2vec training produced non-finite vectors");
    return m;
}

FastTextModel train_fasttext(const std::vector<TokenList>& corpus, const EmbeddingConfig& config) {
    config.validate();
    if (config.mode != EmbeddingMode::fasttext) throw EmbedError("train_fasttext: mode must be fasttext");
    Prepared p = prepare(corpus, config);
    Rng rng(config.seed);
    FastTextModel model;
    model.matrix = init_matrix(p.vocab, config, rng);
    model.matrix.minn = config.minn;
    model.matrix.maxn = config.maxn;
    model.subwords = SubwordIndex(config.bucket_count, config.dim, config.minn, config.maxn, mix_seed(config.seed, 0xB0C));
    auto& m = model.matrix;
    NegativeSampler sampler(p.vocab.counts());
    const std::size_t d = config.dim;

    // materialize every bucket the vocabulary touches before taking row pointers
    std::vector<std::vector<std::uint32_t>> token_buckets(p.vocab.size());
    for (std::size_t i = Vocabulary::kUnk + 1; i < p.vocab.size(); ++i)
        token_buckets[i] = model.subwords.subwords(p.vocab.token(static_cast<int>(i)));
    for (const auto& bs : token_buckets)
        for (auto b : bs) model.subwords.materialize(b);
    std::vector<std::vector<Real*>> rows(p.vocab.size());
    for (std::size_t i = Vocabulary::kUnk + 1; i < p.vocab.size(); ++i) {
        rows[i].push_back(m.input_vectors.row(static_cast<Eigen::Index>(i)).data());
        for (auto b : token_buckets[i]) rows[i].push_back(model.subwords.materialize(b));
    }

    const std::size_t total = config.epochs * p.total_tokens;
    std::size_t step = 0;
    std::vector<Real> grad(d), rep(d);
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        for (const auto& sentence : p.sentences) {
            const std::size_t n = sentence.size();
            for (std::size_t c = 0; c < n; ++c) {
                const Real lr = learning_rate(config, step++, total);
                const std::size_t radius = 1 + static_cast<std::size_t>(rng.index(config.window));
                const std::size_t lo = c >= radius ? c - radius : 0;
                const std::size_t hi = std::min(n - 1, c + radius);
                const auto& parts = rows[static_cast<std::size_t>(sentence[c])];
                const Real share = 1.0 / static_cast<Real>(parts.size());
                for (std::size_t j = lo; j <= hi; ++j) {
                    if (j == c) continue;
                    std::fill(rep.begin(), rep.end(), 0.0);
                    for (const Real* r : parts)
                        for (std::size_t k = 0; k < d; ++k) rep[k] += r[k];
                    for (auto& x : rep) x *= share;
                    std::fill(grad.begin(), grad.end(), 0.0);
                    ns_step(rep.data(), grad.data(), sentence[j], m.output_vectors, sampler, config.negatives, lr, rng);
                    for (Real* r : parts)
                        for (std::size_t k = 0; k < d; ++k) r[k] += share * grad[k];
                }
            }
        }
    }
    finalize_unk(m);
    if (!m.all_finite()) throw EmbedError("fasttext training produced non-finite vectors");
    return model;
}

// ------------------------------------------------------------ lookup

std::vector<Real> embedding_for(std::string_view token, const EmbeddingMatrix& matrix, const SubwordIndex* subwords) {
    const std::size_t d = matrix.dim();
    std::vector<Real> out(d, 0.0);
    if (token == Vocabulary::kPadToken) return out;
    auto copy_row = [&](int idx) {
        for (std::size_t j = 0; j < d; ++j) out[j] = matrix.input_vectors(idx, static_cast<Eigen::Index>(j));
    };
    if (token == Vocabulary::kUnkToken) {
        copy_row(Vocabulary::kUnk);
        return out;
    }
    if (matrix.mode != EmbeddingMode::fasttext || subwords == nullptr) {
        copy_row(matrix.vocab.index_of(token));
        return out;
    }
    std::size_t n = 0;
    for (auto b : subwords->subwords(token)) {
        const auto r = subwords->row(b);
        for (std::size_t j = 0; j < d; ++j) out[j] += r[j];
        ++n;
    }
    if (matrix.vocab.contains(token)) {
        const int idx = matrix.vocab.index_of(token);
        for (std::size_t j = 0; j < d; ++j) out[j] += matrix.input_vectors(idx, static_cast<Eigen::Index>(j));
        ++n;
    }
    for (auto& x : out) x /= static_cast<Real>(n);
    return out;
}

RowMatrix embedding_table(const Vocabulary& vocab, const EmbeddingMatrix& matrix, const SubwordIndex* subwords) {
    RowMatrix t(static_cast<Eigen::Index>(vocab.size()), static_cast<Eigen::Index>(matrix.dim()));
    for (std::size_t i = 0; i < vocab.size(); ++i) {
        const auto v = embedding_for(vocab.token(static_cast<int>(i)), matrix, subwords);
        for (std::size_t j = 0; j < v.size(); ++j) t(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v[j];
    }
    return t;
}

Real cosine(std::span<const Real> a, std::span<const Real> b) {
    Real ab = 0, aa = 0, bb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ab += a[i] * b[i];
        aa += a[i] * a[i];
        bb += b[i] * b[i];
    }
    if (aa == 0 || bb == 0) return 0.0;
    return ab / std::sqrt(aa * bb);
}

// ------------------------------------------------------------ text format

std::string embedding_to_text(const EmbeddingMatrix& matrix) {
    std::string out;
    out += std::to_string(matrix.dim()) + " " + std::to_string(matrix.vocab.size()) + " " + to_string(matrix.mode) +
           " " + std::to_string(matrix.minn) + " " + std::to_string(matrix.maxn) + "\n";
    for (std::size_t i = 0; i < matrix.vocab.size(); ++i) {
        out += matrix.vocab.token(static_cast<int>(i));
        for (Eigen::Index j = 0; j < matrix.input_vectors.cols(); ++j) {
            out += ' ';
            out += format_real(matrix.input_vectors(static_cast<Eigen::Index>(i), j));
        }
        out += '\n';
    }
    return out;
}

EmbeddingMatrix embedding_from_text(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    if (!std::getline(in, line)) throw EmbedError("embedding file is empty");
    std::istringstream header(line);
    std::size_t dim = 0, vocab_size = 0, minn = 0, maxn = 0;
    std::string mode;
    if (!(header >> dim >> vocab_size >> mode >> minn >> maxn))
        throw EmbedError("embedding header must be 'dim vocab_size mode minn maxn'");
    EmbeddingMatrix m;
    m.mode = mode_from_string(mode);
    m.minn = minn;
    m.maxn = maxn;
    m.input_vectors = RowMatrix::Zero(static_cast<Eigen::Index>(vocab_size), static_cast<Eigen::Index>(dim));
    m.output_vectors = RowMatrix::Zero(static_cast<Eigen::Index>(vocab_size), static_cast<Eigen::Index>(dim));
    std::vector<std::string> tokens;
    for (std::size_t i = 0; i < vocab_size; ++i) {
        if (!std::getline(in, line))
            throw EmbedError("embedding file ends after " + std::to_string(i) + " of " + std::to_string(vocab_size) +
                             " rows");
        std::istringstream row(line);
        std::string tok;
        row >> tok;
        for (std::size_t j = 0; j < dim; ++j) {
            std::string field;
            if (!(row >> field)) throw EmbedError("embedding row " + std::to_string(i + 2) + " has too few values");
            try {
                m.input_vectors(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = std::stod(field);
            } catch (const std::exception&) {
                throw EmbedError("embedding row " + std::to_string(i + 2) + ": bad value '" + field + "'");
            }
        }
        tokens.push_back(std::move(tok));
    }
    std::size_t k = 1;
    if (tokens.size() > 2) k = tokens[2].size();
    try {
        m.vocab = Vocabulary::from_tokens(std::move(tokens), {}, k);
    } catch (const seqdata::DataError& e) {
        throw EmbedError(e.what());
    }
    return m;
}

void save_embedding(const EmbeddingMatrix& matrix, const std::filesystem::path& path) {
    write_file_atomic(path, embedding_to_text(matrix));
}

EmbeddingMatrix load_embedding(const std::filesystem::path& path) {
    try {
        return embedding_from_text(read_file(path));
    } catch (const std::runtime_error& e) {
        if (dynamic_cast<const EmbedError*>(&e)) throw;
        throw EmbedError(e.what());
    }
}

std::filesystem::path bucket_path(const std::filesystem::path& embedding_path) {
    auto p = embedding_path;
    p += ".buckets";
    return p;
}

}  // namespace pepclass::embed
