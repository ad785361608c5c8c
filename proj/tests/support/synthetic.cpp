#include "synthetic.hpp"

#include <sstream>

#include "pepclass/rng.hpp"

namespace pepclass::testing {

namespace {

constexpr const char* kBackground = "ACDEFGHIKLMNPQRSTVWY";
const char* const kMotifs[] = {"KLAKLAK", "KWKLFKK", "FLKKLLK", "GLFKKIL"};

}  // namespace

seqdata::Dataset synthetic_peptides(std::size_t positives, std::size_t negatives, std::uint64_t seed,
                                    std::size_t min_len, std::size_t max_len) {
    Rng rng(seed);
    std::vector<seqdata::PeptideRecord> records;
    auto background = [&](std::size_t n) {
        std::string s;
        for (std::size_t i = 0; i < n; ++i) s += kBackground[rng.index(20)];
        return s;
    };
    for (std::size_t i = 0; i < positives + negatives; ++i) {
        const bool positive = i < positives;
        std::size_t len = min_len + rng.index(max_len - min_len + 1);
        std::string seq = background(len);
        if (positive) {
            std::size_t copies = 1 + rng.index(2);
            for (std::size_t c = 0; c < copies; ++c) {
                std::string motif = kMotifs[rng.index(4)];
                if (motif.size() > seq.size()) break;
                std::size_t at = rng.index(seq.size() - motif.size() + 1);
                seq.replace(at, motif.size(), motif);
            }
        }
        records.push_back({i + 1, seq, positive ? 1 : 0});
    }
    return seqdata::Dataset::from_records("synthetic", std::move(records));
}

CooccurrenceCorpus cooccurrence_corpus(std::uint64_t seed, std::size_t sentences_per_group) {
    Rng rng(seed);
    CooccurrenceCorpus corpus;
    // letters are disjoint across groups and contexts so subwords never link groups
    corpus.groups = {{"AC", "DE"}, {"FG", "HI"}, {"KL", "MN"}};
    const std::vector<std::vector<std::string>> contexts = {
        {"PQ", "QP"}, {"RS", "SR"}, {"TV", "VT"}};
    for (std::size_t s = 0; s < sentences_per_group * corpus.groups.size(); ++s) {
        const std::size_t g = s % corpus.groups.size();
        seqdata::TokenList sentence;
        const std::size_t len = 6 + rng.index(5);
        for (std::size_t i = 0; i < len; ++i) {
            if (i % 2 == 0)
                sentence.push_back(contexts[g][rng.index(contexts[g].size())]);
            else
                sentence.push_back(corpus.groups[g][rng.index(corpus.groups[g].size())]);
        }
        corpus.sentences.push_back(std::move(sentence));
    }
    return corpus;
}

std::string to_csv(const seqdata::Dataset& dataset) {
    std::ostringstream os;
    os << "sample,content,label\n";
    for (const auto& r : dataset.records) os << r.id << ',' << r.sequence << ',' << r.label << '\n';
    return os.str();
}

}  // namespace pepclass::testing
