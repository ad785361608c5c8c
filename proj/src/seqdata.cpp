#include "pepclass/seqdata.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "pepclass/rng.hpp"

namespace pepclass::seqdata {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r' ||
                          s.front() == '\n' || s.front() == '\xEF' || s.front() == '\xBB' ||
                          s.front() == '\xBF'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '\n'))
        s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        lines.push_back(text.substr(start, end - start));
        start = end + 1;
    }
    return lines;
}

std::vector<std::string_view> split_fields(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto end = line.find(sep, start);
        if (end == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            break;
        }
        out.push_back(trim(line.substr(start, end - start)));
        start = end + 1;
    }
    return out;
}

bool parse_size(std::string_view s, std::size_t& out) {
    if (s.empty()) return false;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

int parse_label(std::string_view s) {
    if (s == "0") return 0;
    if (s == "1") return 1;
    return -1;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open dataset file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

bool is_valid_residue(char c) {
    switch (c) {
        case 'A': case 'C': case 'D': case 'E': case 'F': case 'G': case 'H':
        case 'I': case 'K': case 'L': case 'M': case 'N': case 'P': case 'Q':
        case 'R': case 'S': case 'T': case 'V': case 'W': case 'Y':
        case 'B': case 'J': case 'O': case 'U': case 'X': case 'Z':
            return true;
        default:
            return false;
    }
}

void validate_sequence(std::string_view sequence, std::size_t id) {
    if (sequence.empty()) throw DataError("record " + std::to_string(id) + ": empty sequence");
    if (sequence.size() > kMaxSequenceLength)
        throw DataError("record " + std::to_string(id) + ": sequence length " +
                        std::to_string(sequence.size()) + " exceeds " +
                        std::to_string(kMaxSequenceLength));
    for (char c : sequence) {
        if (!is_valid_residue(c))
            throw DataError("record " + std::to_string(id) + ": invalid residue '" +
                            std::string(1, c) + "'");
    }
}

Dataset Dataset::from_records(std::string name, std::vector<PeptideRecord> records) {
    Dataset d;
    d.name = std::move(name);
    d.records = std::move(records);
    for (const auto& r : d.records) (r.label == 1 ? d.positive_count : d.negative_count)++;
    return d;
}

DatasetFormat format_from_path(const std::filesystem::path& path) {
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".fa" || ext == ".fasta" || ext == ".faa") return DatasetFormat::fasta;
    return DatasetFormat::csv;
}

Dataset parse_csv(std::string_view text, std::string name) {
    auto lines = split_lines(text);
    std::vector<PeptideRecord> records;
    bool header_seen = false;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::size_t row = i + 1;
        auto line = trim(lines[i]);
        if (line.empty()) continue;
        auto fields = split_fields(line, ',');
        if (!header_seen) {
            header_seen = true;
            if (fields.size() != 3 || fields[0] != "sample" || fields[1] != "content" ||
                fields[2] != "label")
                throw DataError("row " + std::to_string(row) +
                                ": expected header 'sample,content,label'");
            continue;
        }
        if (fields.size() != 3)
            throw DataError("row " + std::to_string(row) + ": expected 3 fields, got " +
                            std::to_string(fields.size()));
        PeptideRecord rec;
        if (!parse_size(fields[0], rec.id) || rec.id == 0)
            throw DataError("row " + std::to_string(row) + ": sample id must be a positive integer");
        rec.label = parse_label(fields[2]);
        if (rec.label < 0) throw DataError("row " + std::to_string(row) + ": label must be 0 or 1");
        rec.sequence = std::string(fields[1]);
        validate_sequence(rec.sequence, rec.id);
        records.push_back(std::move(rec));
    }
    if (records.empty()) throw DataError("dataset '" + name + "' contains no records");
    return Dataset::from_records(std::move(name), std::move(records));
}

Dataset parse_fasta(std::string_view text, std::string name) {
    auto lines = split_lines(text);
    std::vector<PeptideRecord> records;
    bool open = false;
    auto close = [&]() {
        if (open) validate_sequence(records.back().sequence, records.back().id);
        open = false;
    };
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::size_t row = i + 1;
        auto line = trim(lines[i]);
        if (line.empty()) continue;
        if (line.front() == '>') {
            close();
            auto fields = split_fields(line.substr(1), '|');
            if (fields.size() != 2)
                throw DataError("row " + std::to_string(row) + ": expected header '>id|label'");
            PeptideRecord rec;
            if (!parse_size(fields[0], rec.id) || rec.id == 0)
                throw DataError("row " + std::to_string(row) + ": id must be a positive integer");
            rec.label = parse_label(fields[1]);
            if (rec.label < 0) throw DataError("row " + std::to_string(row) + ": label must be 0 or 1");
            records.push_back(std::move(rec));
            open = true;
        } else {
            if (!open)
                throw DataError("row " + std::to_string(row) + ": sequence line before any header");
            records.back().sequence.append(line);
        }
    }
    close();
    if (records.empty()) throw DataError("dataset '" + name + "' contains no records");
    return Dataset::from_records(std::move(name), std::move(records));
}

Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format) {
    auto text = read_file(path);
    auto name = path.stem().string();
    if (trim(text).empty()) throw DataError("dataset file is empty: " + path.string());
    return format == DatasetFormat::csv ? parse_csv(text, name) : parse_fasta(text, name);
}

Dataset load_dataset(const std::filesystem::path& path) {
    return load_dataset(path, format_from_path(path));
}

TokenList tokenize(std::string_view sequence, std::size_t k, std::size_t stride) {
    if (k == 0) throw DataError("token length k must be >= 1");
    if (stride == 0) throw DataError("stride must be >= 1");
    if (k > sequence.size())
        throw DataError("sequence of length " + std::to_string(sequence.size()) +
                        " is too short for k=" + std::to_string(k));
    TokenList tokens;
    for (std::size_t i = 0; i + k <= sequence.size(); i += stride)
        tokens.emplace_back(sequence.substr(i, k));
    return tokens;
}

Vocabulary::Vocabulary()
    : index_to_token_{std::string(kPadToken), std::string(kUnkToken)}, counts_{0, 0} {
    token_to_index_.emplace(kPadToken, kPad);
    token_to_index_.emplace(kUnkToken, kUnk);
}

Vocabulary Vocabulary::build(const std::vector<TokenList>& corpus, std::size_t min_count,
                             std::size_t k) {
    if (corpus.empty()) throw DataError("cannot build a vocabulary from an empty corpus");
    std::map<std::string, std::uint64_t> freq;
    for (const auto& tokens : corpus)
        for (const auto& t : tokens) ++freq[t];
    std::vector<std::pair<std::string, std::uint64_t>> kept;
    for (auto& [tok, n] : freq)
        if (n >= min_count && n > 0 && tok != kPadToken && tok != kUnkToken) kept.emplace_back(tok, n);
    if (kept.empty()) throw DataError("vocabulary is empty: no token reaches min_count");
    // freq is already lexicographic, so a stable sort on count keeps the tie order
    std::stable_sort(kept.begin(), kept.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    Vocabulary v;
    v.k_ = k;
    for (auto& [tok, n] : kept) {
        v.token_to_index_.emplace(tok, static_cast<int>(v.index_to_token_.size()));
        v.index_to_token_.push_back(tok);
        v.counts_.push_back(n);
    }
    return v;
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> index_to_token,
                                   std::vector<std::uint64_t> counts, std::size_t k) {
    if (index_to_token.size() < 2 || index_to_token[0] != kPadToken || index_to_token[1] != kUnkToken)
        throw DataError("vocabulary must start with the <pad> and <unk> tokens");
    if (counts.empty()) counts.assign(index_to_token.size(), 0);
    if (counts.size() != index_to_token.size())
        throw DataError("vocabulary counts and tokens differ in length");
    Vocabulary v;
    v.k_ = k;
    v.index_to_token_ = std::move(index_to_token);
    v.counts_ = std::move(counts);
    v.token_to_index_.clear();
    for (std::size_t i = 0; i < v.index_to_token_.size(); ++i) {
        if (!v.token_to_index_.emplace(v.index_to_token_[i], static_cast<int>(i)).second)
            throw DataError("duplicate vocabulary token '" + v.index_to_token_[i] + "'");
    }
    return v;
}

int Vocabulary::index_of(std::string_view token) const {
    auto it = token_to_index_.find(std::string(token));
    return it == token_to_index_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(std::string_view token) const {
    return token_to_index_.count(std::string(token)) > 0;
}

EncodedSequence encode(const TokenList& tokens, const Vocabulary& vocab, std::size_t max_len) {
    EncodedSequence e;
    e.ids.assign(max_len, Vocabulary::kPad);
    e.mask.assign(max_len, 0);
    const std::size_t n = std::min(tokens.size(), max_len);
    for (std::size_t i = 0; i < n; ++i) {
        e.ids[i] = vocab.index_of(tokens[i]);
        e.mask[i] = 1;
    }
    return e;
}

TokenList decode(const EncodedSequence& encoded, const Vocabulary& vocab) {
    TokenList out;
    for (std::size_t i = 0; i < encoded.ids.size(); ++i)
        if (encoded.mask[i]) out.push_back(vocab.token(encoded.ids[i]));
    return out;
}

std::vector<TokenList> tokenize_records(const Dataset& dataset, std::size_t k) {
    std::vector<TokenList> out;
    out.reserve(dataset.size());
    for (const auto& r : dataset.records) {
        if (r.sequence.size() < k)
            out.emplace_back();
        else
            out.push_back(tokenize(r.sequence, k));
    }
    return out;
}

TokenStream make_token_stream(std::vector<TokenList> tokens, const Vocabulary& vocab,
                              std::size_t max_len) {
    TokenStream s;
    s.max_len = max_len;
    s.encoded.reserve(tokens.size());
    for (const auto& t : tokens) s.encoded.push_back(encode(t, vocab, max_len));
    s.tokens = std::move(tokens);
    return s;
}

std::size_t longest(const std::vector<TokenList>& tokens) {
    std::size_t n = 0;
    for (const auto& t : tokens) n = std::max(n, t.size());
    return n;
}

std::pair<Dataset, Dataset> split_holdout(const Dataset& dataset, double test_fraction,
                                          std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw DataError("test_fraction must lie in (0, 1)");
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < dataset.records.size(); ++i)
        (dataset.records[i].label == 1 ? pos : neg).push_back(i);
    if (pos.empty() || neg.empty())
        throw DataError("stratified split needs at least one record of each class");

    Rng rng(seed);
    std::vector<bool> in_test(dataset.records.size(), false);
    std::size_t n_test = 0;
    for (auto* cls : {&pos, &neg}) {
        rng.shuffle(cls->begin(), cls->end());
        const auto take = static_cast<std::size_t>(std::lround(test_fraction * static_cast<double>(cls->size())));
        for (std::size_t i = 0; i < take; ++i) in_test[(*cls)[i]] = true;
        n_test += take;
    }
    if (n_test == 0 || n_test == dataset.records.size())
        throw DataError("test_fraction " + std::to_string(test_fraction) +
                        " leaves the train or test split empty");

    std::vector<PeptideRecord> train, test;
    for (std::size_t i = 0; i < dataset.records.size(); ++i)
        (in_test[i] ? test : train).push_back(dataset.records[i]);
    return {Dataset::from_records(dataset.name, std::move(train)),
            Dataset::from_records(dataset.name, std::move(test))};
}

}  // namespace pepclass::seqdata
