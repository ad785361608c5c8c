#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace pepclass::seqdata {

class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kMaxSequenceLength = 200;

/// The 20 standard residues plus the rare/ambiguous letters B, J, O, U, X, Z.
bool is_valid_residue(char c);

struct PeptideRecord {
    std::size_t id = 0;
    std::string sequence;
    int label = 0;  // 1 = anticancer, 0 = non-anticancer

    bool operator==(const PeptideRecord&) const = default;
};

struct Dataset {
    std::string name;
    std::vector<PeptideRecord> records;
    std::size_t positive_count = 0;
    std::size_t negative_count = 0;

    /// Builds a dataset and tallies class counts.
    static Dataset from_records(std::string name, std::vector<PeptideRecord> records);

    std::size_t size() const { return records.size(); }
    bool empty() const { return records.empty(); }
};

enum class DatasetFormat { csv, fasta };

DatasetFormat format_from_path(const std::filesystem::path& path);

/// Loads and validates a CSV (`sample,content,label`) or FASTA (`>id|label`) file.
/// The dataset name is the file stem.
Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format);
Dataset load_dataset(const std::filesystem::path& path);

/// Same parsers over in-memory text; `name` becomes Dataset::name.
Dataset parse_csv(std::string_view text, std::string name);
Dataset parse_fasta(std::string_view text, std::string name);

/// Throws DataError naming `id` and the offending character when invalid.
void validate_sequence(std::string_view sequence, std::size_t id);

using TokenList = std::vector<std::string>;

/// Overlapping windows of length k taken every `stride` characters; partial
/// windows are not emitted. Throws DataError when k exceeds the sequence length.
TokenList tokenize(std::string_view sequence, std::size_t k, std::size_t stride = 1);

class Vocabulary {
public:
    static constexpr int kPad = 0;
    static constexpr int kUnk = 1;
    static constexpr std::string_view kPadToken = "<pad>";
    static constexpr std::string_view kUnkToken = "<unk>";

    Vocabulary();

    /// Tokens with frequency >= min_count get indices >= 2 in descending
    /// frequency order, ties broken lexicographically.
    static Vocabulary build(const std::vector<TokenList>& corpus, std::size_t min_count,
                            std::size_t k = 1);

    /// Rebuilds a vocabulary from an explicit index order. The first two
    /// entries must be the PAD and UNK tokens.
    static Vocabulary from_tokens(std::vector<std::string> index_to_token,
                                  std::vector<std::uint64_t> counts, std::size_t k);

    int index_of(std::string_view token) const;
    bool contains(std::string_view token) const;
    const std::string& token(int index) const { return index_to_token_.at(static_cast<std::size_t>(index)); }
    std::size_t size() const { return index_to_token_.size(); }
    std::size_t k() const { return k_; }

    /// Corpus frequency per index (zero for PAD and UNK).
    const std::vector<std::uint64_t>& counts() const { return counts_; }
    const std::vector<std::string>& tokens() const { return index_to_token_; }

    bool operator==(const Vocabulary& other) const {
        return index_to_token_ == other.index_to_token_ && k_ == other.k_;
    }

private:
    std::unordered_map<std::string, int> token_to_index_;
    std::vector<std::string> index_to_token_;
    std::vector<std::uint64_t> counts_;
    std::size_t k_ = 1;
};

struct EncodedSequence {
    std::vector<int> ids;          // length max_len
    std::vector<std::uint8_t> mask;  // 1 on non-PAD positions
};

EncodedSequence encode(const TokenList& tokens, const Vocabulary& vocab, std::size_t max_len);

/// Inverse of encode over the masked positions.
TokenList decode(const EncodedSequence& encoded, const Vocabulary& vocab);

struct TokenStream {
    std::vector<TokenList> tokens;
    std::vector<EncodedSequence> encoded;
    std::size_t max_len = 0;
};

/// Tokenizes every record with window k (stride 1). Sequences shorter than k
/// yield an empty token list, which encodes to an all-PAD row.
std::vector<TokenList> tokenize_records(const Dataset& dataset, std::size_t k);

TokenStream make_token_stream(std::vector<TokenList> tokens, const Vocabulary& vocab,
                              std::size_t max_len);

std::size_t longest(const std::vector<TokenList>& tokens);

/// Stratified split: each class is shuffled with a generator seeded by `seed`
/// and round(test_fraction * class_size) records go to the test side.
/// Both outputs keep the original file order.
std::pair<Dataset, Dataset> split_holdout(const Dataset& dataset, double test_fraction,
                                          std::uint64_t seed);

}  // namespace pepclass::seqdata
