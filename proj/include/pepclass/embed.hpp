#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "pepclass/rng.hpp"
#include "pepclass/seqdata.hpp"
#include "pepclass/tensor.hpp"

namespace pepclass::embed {

using nn::Real;
using nn::RowMatrix;
using seqdata::TokenList;
using seqdata::Vocabulary;

class EmbedError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class EmbeddingMode { skipgram, cbow, fasttext };

EmbeddingMode mode_from_string(const std::string& name);
std::string to_string(EmbeddingMode mode);

struct EmbeddingConfig {
    std::size_t dim = 100;
    std::size_t window = 5;
    std::size_t negatives = 5;
    std::size_t epochs = 50;
    Real lr_initial = 0.025;
    EmbeddingMode mode = EmbeddingMode::skipgram;
    std::size_t minn = 2;
    std::size_t maxn = 3;
    std::uint32_t bucket_count = 200000;
    std::size_t min_count = 1;
    std::uint64_t seed = 1;

    /// Throws EmbedError when an invariant does not hold.
    void validate() const;
};

/// One training instance: skip-gram instances carry a single context index,
/// CBOW instances carry the whole window around `center`.
struct TrainingInstance {
    int center = 0;
    std::vector<int> context;
    std::size_t radius = 0;

    bool operator==(const TrainingInstance&) const = default;
};

/// For every center position a radius is drawn uniformly from [1, window];
/// all positions within that radius (clipped at the sentence ends) form the
/// context. Skip-gram emits one instance per (center, context) pair in
/// position order, CBOW one instance per center with a non-empty context.
std::vector<TrainingInstance> generate_pairs(std::span<const int> tokens, std::size_t window,
                                             EmbeddingMode mode, Rng& rng);

/// Unigram^0.75 negative-sampling distribution.
class NegativeSampler {
public:
    explicit NegativeSampler(std::span<const std::uint64_t> counts);

    int sample(Rng& rng) const;
    Real probability(std::size_t index) const { return prob_.at(index); }
    const std::vector<Real>& probabilities() const { return prob_; }

private:
    std::vector<Real> prob_;
    std::vector<Real> cdf_;
};

NegativeSampler build_negative_table(std::span<const std::uint64_t> counts);

struct NegativeSamplingGrad {
    Real loss = 0.0;
    std::vector<Real> d_center;
    std::vector<Real> d_positive;
    std::vector<std::vector<Real>> d_negatives;
};

/// -log sigma(u.v) - sum_n log sigma(-u_n.v) and its gradients, where v is the
/// center (input-side) vector, u the positive output vector and u_n the
/// negative output vectors.
NegativeSamplingGrad negative_sampling_loss(std::span<const Real> center, std::span<const Real> positive,
                                            const std::vector<std::span<const Real>>& negatives);

std::uint32_t fnv1a32(std::string_view bytes);

/// Character n-grams (lengths minn..maxn, shorter than the wrapped token) of
/// '<' + token + '>', followed by the wrapped token itself.
std::vector<std::string> subword_strings(std::string_view token, std::size_t minn, std::size_t maxn);

/// FNV-1a hashes of subword_strings modulo bucket_count.
std::vector<std::uint32_t> extract_subwords(std::string_view token, std::size_t minn, std::size_t maxn,
                                            std::uint32_t bucket_count);

/// Hashed subword vectors. Only buckets that have been touched are stored;
/// any other bucket reads as its deterministic seeded initial value, so the
/// index behaves like a dense bucket_count x dim matrix.
class SubwordIndex {
public:
    SubwordIndex() = default;
    SubwordIndex(std::uint32_t bucket_count, std::size_t dim, std::size_t minn, std::size_t maxn,
                 std::uint64_t seed);

    std::vector<std::uint32_t> subwords(std::string_view token) const {
        return extract_subwords(token, minn_, maxn_, bucket_count_);
    }

    /// Current value of a bucket row.
    std::vector<Real> row(std::uint32_t bucket) const;
    /// Stores the bucket row if needed and returns a pointer valid until the
    /// next materialize() of a new bucket.
    Real* materialize(std::uint32_t bucket);
    bool is_stored(std::uint32_t bucket) const { return slot_.count(bucket) > 0; }
    std::vector<std::uint32_t> stored_buckets() const;
    void reserve(std::size_t rows);

    std::uint32_t bucket_count() const { return bucket_count_; }
    std::size_t dim() const { return dim_; }
    std::size_t minn() const { return minn_; }
    std::size_t maxn() const { return maxn_; }
    std::uint64_t seed() const { return seed_; }
    std::string hash_name() const { return "fnv1a32"; }

    void save(const std::filesystem::path& path) const;
    static SubwordIndex load(const std::filesystem::path& path);

    bool operator==(const SubwordIndex& other) const;

private:
    void initial_row(std::uint32_t bucket, Real* out) const;

    std::uint32_t bucket_count_ = 1;
    std::size_t dim_ = 0;
    std::size_t minn_ = 0, maxn_ = 0;
    std::uint64_t seed_ = 0;
    std::unordered_map<std::uint32_t, std::size_t> slot_;
    std::vector<Real> data_;
};

struct EmbeddingMatrix {
    EmbeddingMode mode = EmbeddingMode::skipgram;
    std::size_t minn = 0, maxn = 0;
    Vocabulary vocab;
    RowMatrix input_vectors;   // vocab.size() x dim
    RowMatrix output_vectors;  // vocab.size() x dim

    std::size_t dim() const { return static_cast<std::size_t>(input_vectors.cols()); }
    bool all_finite() const;
};

struct FastTextModel {
    EmbeddingMatrix matrix;
    SubwordIndex subwords;
};

/// Skip-gram or CBOW with negative sampling. Each token list is one sentence;
/// context never crosses sentence boundaries.
EmbeddingMatrix train_word2vec(const std::vector<TokenList>& corpus, const EmbeddingConfig& config);

/// Skip-gram where the center representation is the mean of the token vector
/// and its subword bucket vectors.
FastTextModel train_fasttext(const std::vector<TokenList>& corpus, const EmbeddingConfig& config);

/// PAD is the zero vector. Word2Vec: in-vocab row, otherwise the UNK row.
/// FastText: mean of the subword rows plus the token row when in vocab.
std::vector<Real> embedding_for(std::string_view token, const EmbeddingMatrix& matrix,
                                const SubwordIndex* subwords = nullptr);

/// Rows of embedding_for for every token of a classifier vocabulary.
RowMatrix embedding_table(const Vocabulary& vocab, const EmbeddingMatrix& matrix,
                          const SubwordIndex* subwords = nullptr);

Real cosine(std::span<const Real> a, std::span<const Real> b);

/// Text format: header `dim vocab_size mode minn maxn`, then one line per
/// vocabulary row: token followed by dim values.
std::string embedding_to_text(const EmbeddingMatrix& matrix);
EmbeddingMatrix embedding_from_text(std::string_view text);
void save_embedding(const EmbeddingMatrix& matrix, const std::filesystem::path& path);
EmbeddingMatrix load_embedding(const std::filesystem::path& path);

/// Sidecar path for a FastText bucket file.
std::filesystem::path bucket_path(const std::filesystem::path& embedding_path);

}  // namespace pepclass::embed
