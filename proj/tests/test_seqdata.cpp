#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "pepclass/rng.hpp"
#include "pepclass/seqdata.hpp"
#include "synthetic.hpp"

using namespace pepclass::seqdata;

namespace {

std::filesystem::path temp_file(const std::string& name, const std::string& contents) {
    auto dir = std::filesystem::temp_directory_path() / "pepclass_seqdata_test";
    std::filesystem::create_directories(dir);
    auto path = dir / name;
    std::ofstream(path, std::ios::binary) << contents;
    return path;
}

std::string error_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const DataError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST(Loader, SingleRowCsv) {
    auto d = parse_csv("sample,content,label\n1,KWK,1\n", "one");
    EXPECT_EQ(d.size(), 1u);
    EXPECT_EQ(d.positive_count, 1u);
    EXPECT_EQ(d.negative_count, 0u);
    EXPECT_EQ(d.records[0].sequence, "KWK");
}

TEST(Loader, FastaFormat) {
    auto d = parse_fasta(">1|1\nKWK\nLL\n>2|0\nAAGG\n", "fa");
    ASSERT_EQ(d.size(), 2u);
    EXPECT_EQ(d.records[0].sequence, "KWKLL");
    EXPECT_EQ(d.records[1].label, 0);
    EXPECT_EQ(d.positive_count, 1u);
}

TEST(Loader, MalformedRowNamesRowNumber) {
    auto msg = error_of([] { parse_csv("sample,content,label\n1,KWK,1\n2,KWK\n", "bad"); });
    EXPECT_NE(msg.find("row 3"), std::string::npos) << msg;
}

TEST(Loader, InvalidResidueNamesRecordAndCharacter) {
    auto msg = error_of([] { parse_csv("sample,content,label\n7,KW1K,1\n", "bad"); });
    EXPECT_NE(msg.find("record 7"), std::string::npos) << msg;
    EXPECT_NE(msg.find("'1'"), std::string::npos) << msg;
}

TEST(Loader, EmptyFileIsError) {
    auto path = temp_file("empty.csv", "");
    EXPECT_THROW(load_dataset(path), DataError);
}

TEST(Loader, MissingFileIsError) {
    EXPECT_THROW(load_dataset("/nonexistent/pepclass.csv"), DataError);
}

TEST(Loader, ExtendedAlphabetAccepted) {
    for (char c : std::string("BJOUXZ")) EXPECT_TRUE(is_valid_residue(c));
    for (char c : std::string("1*-b ")) EXPECT_FALSE(is_valid_residue(c));
}

TEST(Loader, LoadingTwiceIsIdentical) {
    auto data = pepclass::testing::synthetic_peptides(20, 20, 4);
    auto path = temp_file("twice.csv", pepclass::testing::to_csv(data));
    auto a = load_dataset(path);
    auto b = load_dataset(path);
    EXPECT_EQ(a.records, b.records);
    EXPECT_EQ(a.records, data.records);
    EXPECT_EQ(a.name, "twice");
}

TEST(Tokenize, Examples) {
    EXPECT_EQ(tokenize("KWKL", 2), (TokenList{"KW", "WK", "KL"}));
    EXPECT_EQ(tokenize("KWKL", 1), (TokenList{"K", "W", "K", "L"}));
    EXPECT_EQ(tokenize("KWKL", 4), (TokenList{"KWKL"}));
    EXPECT_EQ(tokenize("KWKLA", 2, 2), (TokenList{"KW", "KL"}));
}

TEST(Tokenize, TooShortIsError) { EXPECT_THROW(tokenize("KW", 3), DataError); }

TEST(Tokenize, CountProperty) {
    pepclass::Rng rng(21);
    for (int trial = 0; trial < 200; ++trial) {
        std::string s;
        const std::size_t len = 1 + rng.index(40);
        for (std::size_t i = 0; i < len; ++i) s += "ACDEFGHIKLMNPQRSTVWY"[rng.index(20)];
        const std::size_t k = 1 + rng.index(len);
        auto tokens = tokenize(s, k);
        ASSERT_EQ(tokens.size(), len - k + 1);
        for (std::size_t i = 0; i < tokens.size(); ++i) EXPECT_EQ(tokens[i], s.substr(i, k));
    }
}

TEST(Vocab, FrequencyOrder) {
    auto v = Vocabulary::build({{"A", "A", "B"}}, 1);
    EXPECT_EQ(v.index_of("A"), 2);
    EXPECT_EQ(v.index_of("B"), 3);
    EXPECT_EQ(v.size(), 4u);
    EXPECT_EQ(v.token(0), Vocabulary::kPadToken);
    EXPECT_EQ(v.token(1), Vocabulary::kUnkToken);
}

TEST(Vocab, MinCountThreshold) {
    auto v = Vocabulary::build({{"A", "B"}, {"B"}}, 2);
    EXPECT_EQ(v.index_of("B"), 2);
    EXPECT_EQ(v.index_of("A"), Vocabulary::kUnk);
    EXPECT_EQ(v.size(), 3u);
}

TEST(Vocab, TiesBreakLexicographically) {
    auto v = Vocabulary::build({{"C", "B", "A", "C"}}, 1);
    EXPECT_EQ(v.index_of("C"), 2);
    EXPECT_EQ(v.index_of("A"), 3);
    EXPECT_EQ(v.index_of("B"), 4);
}

TEST(Vocab, AllBelowMinCountIsError) { EXPECT_THROW(Vocabulary::build({{"A", "B"}}, 2), DataError); }

TEST(Vocab, CharacterVocabMatchesDistinctResidues) {
    auto data = pepclass::testing::synthetic_peptides(30, 30, 8);
    std::set<char> distinct;
    for (const auto& r : data.records) distinct.insert(r.sequence.begin(), r.sequence.end());
    auto v = Vocabulary::build(tokenize_records(data, 1), 1, 1);
    EXPECT_EQ(v.size(), distinct.size() + 2);
}

TEST(Encode, PaddingExample) {
    auto v = Vocabulary::build({{"A", "A", "B"}}, 1);
    auto e = encode({"A", "B"}, v, 4);
    EXPECT_EQ(e.ids, (std::vector<int>{2, 3, 0, 0}));
    EXPECT_EQ(e.mask, (std::vector<std::uint8_t>{1, 1, 0, 0}));
}

TEST(Encode, UnknownExample) {
    auto v = Vocabulary::build({{"A"}}, 1);
    EXPECT_EQ(encode({"A", "C"}, v, 2).ids, (std::vector<int>{2, 1}));
}

TEST(Encode, TruncationExample) {
    auto v = Vocabulary::build({{"A", "A", "B"}}, 1);
    EXPECT_EQ(encode({"A", "B", "A"}, v, 2).ids, (std::vector<int>{2, 3}));
}

TEST(Encode, RoundTripProperty) {
    pepclass::Rng rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<TokenList> corpus(3);
        for (auto& s : corpus)
            for (std::size_t i = 0; i < 1 + rng.index(10); ++i) s.push_back(std::string(1, "ABCDEFG"[rng.index(7)]));
        auto v = Vocabulary::build(corpus, 1);
        const auto& tokens = corpus[rng.index(3)];
        auto e = encode(tokens, v, tokens.size() + rng.index(5));
        EXPECT_EQ(decode(e, v), tokens);
    }
}

TEST(Split, StratifiedCounts) {
    auto data = pepclass::testing::synthetic_peptides(250, 250, 1);
    auto [train, test] = split_holdout(data, 0.2, 1);
    EXPECT_EQ(train.size(), 400u);
    EXPECT_EQ(train.positive_count, 200u);
    EXPECT_EQ(test.size(), 100u);
    EXPECT_EQ(test.positive_count, 50u);

    auto ind = pepclass::testing::synthetic_peptides(150, 150, 2);
    auto [tr2, te2] = split_holdout(ind, 0.2, 7);
    EXPECT_EQ(tr2.size(), 240u);
    EXPECT_EQ(te2.size(), 60u);
}

TEST(Split, Deterministic) {
    auto data = pepclass::testing::synthetic_peptides(40, 40, 3);
    auto a = split_holdout(data, 0.2, 9);
    auto b = split_holdout(data, 0.2, 9);
    EXPECT_EQ(a.first.records, b.first.records);
    EXPECT_EQ(a.second.records, b.second.records);
    auto c = split_holdout(data, 0.2, 10);
    EXPECT_NE(a.second.records, c.second.records);
}

TEST(Split, PartitionAndRatioProperty) {
    pepclass::Rng rng(77);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t pos = 2 + rng.index(60), neg = 2 + rng.index(60);
        const double frac = 0.1 + 0.6 * rng.uniform01();
        auto data = pepclass::testing::synthetic_peptides(pos, neg, trial);
        std::pair<Dataset, Dataset> parts;
        try {
            parts = split_holdout(data, frac, trial);
        } catch (const DataError&) {
            continue;  // a class rounds to an empty side
        }
        auto& [train, test] = parts;
        EXPECT_EQ(train.size() + test.size(), data.size());
        std::set<std::size_t> ids;
        for (const auto& r : train.records) ids.insert(r.id);
        for (const auto& r : test.records) EXPECT_TRUE(ids.insert(r.id).second);
        EXPECT_NEAR(static_cast<double>(test.positive_count), frac * pos, 1.0);
        EXPECT_NEAR(static_cast<double>(test.negative_count), frac * neg, 1.0);
    }
}

TEST(Split, EmptySideIsError) {
    auto data = pepclass::testing::synthetic_peptides(2, 2, 1);
    EXPECT_THROW(split_holdout(data, 0.1, 1), DataError);
    EXPECT_THROW(split_holdout(data, 1.0, 1), DataError);
}
