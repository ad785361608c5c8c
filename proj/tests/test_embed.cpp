#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <set>

#include "pepclass/embed.hpp"
#include "pepclass/rng.hpp"
#include "synthetic.hpp"

using namespace pepclass::embed;
using pepclass::Rng;

namespace {

using Pair = std::pair<int, int>;

std::multiset<Pair> skipgram_pairs(const std::vector<TrainingInstance>& instances) {
    std::multiset<Pair> out;
    for (const auto& inst : instances) out.insert({inst.center, inst.context.at(0)});
    return out;
}

EmbeddingConfig small_config(EmbeddingMode mode, std::uint64_t seed) {
    EmbeddingConfig c;
    c.mode = mode;
    c.dim = 16;
    c.window = 2;
    c.epochs = 20;
    c.seed = seed;
    c.minn = 2;
    c.maxn = 2;
    c.bucket_count = 20000;
    return c;
}

std::vector<Real> row_of(const EmbeddingMatrix& m, const std::string& token) {
    const int idx = m.vocab.index_of(token);
    std::vector<Real> v(m.dim());
    for (std::size_t j = 0; j < v.size(); ++j) v[j] = m.input_vectors(idx, static_cast<Eigen::Index>(j));
    return v;
}

}  // namespace

TEST(EmbeddingConfig, RejectsInvalid) {
    EmbeddingConfig c;
    c.validate();
    c.dim = 0;
    EXPECT_THROW(c.validate(), EmbedError);
    c = {};
    c.window = 0;
    EXPECT_THROW(c.validate(), EmbedError);
    c = {};
    c.negatives = 0;
    EXPECT_THROW(c.validate(), EmbedError);
    c = {};
    c.mode = EmbeddingMode::fasttext;
    c.minn = 4;
    c.maxn = 3;
    EXPECT_THROW(c.validate(), EmbedError);
}

TEST(GeneratePairs, FixedRadiusExample) {
    Rng rng(1);
    const std::vector<int> tokens{2, 3, 4};
    auto pairs = skipgram_pairs(generate_pairs(tokens, 1, EmbeddingMode::skipgram, rng));
    EXPECT_EQ(pairs, (std::multiset<Pair>{{2, 3}, {3, 2}, {3, 4}, {4, 3}}));
}

TEST(GeneratePairs, SingleTokenHasNoPairs) {
    Rng rng(1);
    const std::vector<int> tokens{2};
    EXPECT_TRUE(generate_pairs(tokens, 5, EmbeddingMode::skipgram, rng).empty());
    EXPECT_TRUE(generate_pairs(tokens, 5, EmbeddingMode::cbow, rng).empty());
}

TEST(GeneratePairs, MatchesExhaustiveEnumeration) {
    // every center gets a radius in [1, 2]; the emitted multiset must equal the
    // brute-force enumeration for those radii, and every radius combination occurs
    const std::vector<int> tokens{2, 3, 4, 5};
    std::set<std::vector<std::size_t>> combos_seen;
    for (std::uint64_t seed = 0; seed < 400; ++seed) {
        Rng rng(seed);
        auto instances = generate_pairs(tokens, 2, EmbeddingMode::skipgram, rng);
        std::vector<std::size_t> radius(4, 0);
        for (const auto& inst : instances) {
            const auto c = static_cast<std::size_t>(inst.center - 2);
            ASSERT_GE(inst.radius, 1u);
            ASSERT_LE(inst.radius, 2u);
            if (radius[c] == 0) radius[c] = inst.radius;
            ASSERT_EQ(radius[c], inst.radius);
        }
        std::multiset<Pair> expected;
        for (int c = 0; c < 4; ++c)
            for (int j = 0; j < 4; ++j)
                if (j != c && std::abs(j - c) <= static_cast<int>(radius[static_cast<std::size_t>(c)]))
                    expected.insert({tokens[static_cast<std::size_t>(c)], tokens[static_cast<std::size_t>(j)]});
        ASSERT_EQ(skipgram_pairs(instances), expected);
        combos_seen.insert(radius);
    }
    EXPECT_EQ(combos_seen.size(), 16u);
}

TEST(GeneratePairs, CbowGroupsTheWindow) {
    Rng rng(3);
    const std::vector<int> tokens{2, 3, 4};
    auto instances = generate_pairs(tokens, 1, EmbeddingMode::cbow, rng);
    ASSERT_EQ(instances.size(), 3u);
    EXPECT_EQ(instances[1].center, 3);
    EXPECT_EQ(instances[1].context, (std::vector<int>{2, 4}));
}

TEST(NegativeSampler, SymmetricCounts) {
    const std::vector<std::uint64_t> counts{0, 0, 1, 1};
    auto s = build_negative_table(counts);
    EXPECT_DOUBLE_EQ(s.probability(2), 0.5);
    EXPECT_DOUBLE_EQ(s.probability(3), 0.5);
    EXPECT_EQ(s.probability(0), 0.0);
}

TEST(NegativeSampler, PowerLawExample) {
    const std::vector<std::uint64_t> counts{0, 0, 16, 1};
    auto s = build_negative_table(counts);
    EXPECT_NEAR(s.probability(2), 8.0 / 9.0, 1e-12);
    Rng rng(5);
    const int draws = 200000;
    int hits = 0;
    for (int i = 0; i < draws; ++i) {
        const int idx = s.sample(rng);
        ASSERT_TRUE(idx == 2 || idx == 3);
        hits += idx == 2;
    }
    EXPECT_NEAR(static_cast<double>(hits) / draws, 8.0 / 9.0, 0.005);
}

TEST(NegativeSampler, ProbabilitiesSumToOne) {
    Rng rng(9);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<std::uint64_t> counts(2 + rng.index(200));
        for (auto& c : counts) c = rng.index(1000);
        counts[0] = 1;
        counts[1] = 2;
        auto s = build_negative_table(counts);
        Real total = 0;
        for (Real p : s.probabilities()) total += p;
        EXPECT_NEAR(total, 1.0, 1e-12);
    }
}

TEST(NegativeSampler, SingleTokenIsError) {
    const std::vector<std::uint64_t> counts{0, 0, 5};
    EXPECT_THROW(build_negative_table(counts), EmbedError);
}

TEST(NegativeSamplingLoss, GradientMatchesFiniteDifferences) {
    Rng rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t d = 6;
        std::vector<std::vector<Real>> vecs(5, std::vector<Real>(d));
        for (auto& v : vecs)
            for (auto& x : v) x = rng.uniform(-1, 1);
        auto loss = [&] {
            std::vector<std::span<const Real>> negs{vecs[2], vecs[3], vecs[4]};
            return negative_sampling_loss(vecs[0], vecs[1], negs);
        };
        const auto g = loss();
        auto check = [&](std::vector<Real>& v, const std::vector<Real>& analytic) {
            for (std::size_t j = 0; j < d; ++j) {
                const Real saved = v[j];
                v[j] = saved + 1e-5;
                const Real up = loss().loss;
                v[j] = saved - 1e-5;
                const Real down = loss().loss;
                v[j] = saved;
                const Real numeric = (up - down) / 2e-5;
                const Real rel = std::abs(numeric - analytic[j]) /
                                 std::max({std::abs(numeric), std::abs(analytic[j]), 1e-8});
                EXPECT_LT(rel, 1e-5);
            }
        };
        check(vecs[0], g.d_center);
        check(vecs[1], g.d_positive);
        for (std::size_t n = 0; n < 3; ++n) check(vecs[2 + n], g.d_negatives[n]);
    }
}

TEST(NegativeSamplingLoss, SmallStepDecreasesLoss) {
    Rng rng(23);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t d = 8;
        std::vector<std::vector<Real>> vecs(4, std::vector<Real>(d));
        for (auto& v : vecs)
            for (auto& x : v) x = rng.uniform(-1, 1);
        auto eval = [&] {
            std::vector<std::span<const Real>> negs{vecs[2], vecs[3]};
            return negative_sampling_loss(vecs[0], vecs[1], negs);
        };
        const auto g = eval();
        const Real lr = 1e-3;
        for (std::size_t j = 0; j < d; ++j) {
            vecs[0][j] -= lr * g.d_center[j];
            vecs[1][j] -= lr * g.d_positive[j];
            vecs[2][j] -= lr * g.d_negatives[0][j];
            vecs[3][j] -= lr * g.d_negatives[1][j];
        }
        EXPECT_LT(eval().loss, g.loss);
    }
}

TEST(Subwords, TwoLetterToken) {
    auto s = subword_strings("KW", 2, 3);
    std::multiset<std::string> got(s.begin(), s.end());
    EXPECT_EQ(got, (std::multiset<std::string>{"<K", "KW", "W>", "<KW", "KW>", "<KW>"}));
    EXPECT_EQ(s.back(), "<KW>");
}

TEST(Subwords, SingleLetterToken) {
    auto s = subword_strings("K", 2, 3);
    std::multiset<std::string> got(s.begin(), s.end());
    EXPECT_EQ(got, (std::multiset<std::string>{"<K", "K>", "<K>"}));
}

TEST(Subwords, HashIsDeterministicFnv1a) {
    // published FNV-1a 32 test vectors
    EXPECT_EQ(fnv1a32(""), 0x811c9dc5u);
    EXPECT_EQ(fnv1a32("a"), 0xe40c292cu);
    EXPECT_EQ(fnv1a32("foobar"), 0xbf9cf968u);
    EXPECT_EQ(extract_subwords("KWK", 2, 3, 1000), extract_subwords("KWK", 2, 3, 1000));
    for (auto id : extract_subwords("KWKLAK", 2, 4, 97)) EXPECT_LT(id, 97u);
}

TEST(SubwordIndex, UntouchedBucketsReadInitialValue) {
    SubwordIndex idx(1000, 4, 2, 3, 7);
    const auto before = idx.row(42);
    EXPECT_FALSE(idx.is_stored(42));
    Real* p = idx.materialize(42);
    EXPECT_TRUE(idx.is_stored(42));
    EXPECT_EQ(std::vector<Real>(p, p + 4), before);
    for (Real x : before) EXPECT_LE(std::abs(x), 0.5 / 4);
}

TEST(SubwordIndex, SaveLoadRoundTrip) {
    SubwordIndex idx(1000, 3, 2, 3, 7);
    idx.materialize(5)[0] = 1.25;
    idx.materialize(999)[2] = -3.5;
    auto path = std::filesystem::temp_directory_path() / "pepclass_buckets_test.bin";
    idx.save(path);
    EXPECT_EQ(SubwordIndex::load(path), idx);
}

TEST(Word2Vec, SharedContextRanksHigher) {
    // A and B always appear between X and Y; C only between P and Q
    std::vector<pepclass::seqdata::TokenList> corpus;
    for (int i = 0; i < 200; ++i) {
        corpus.push_back({"X", i % 2 ? "A" : "B", "Y"});
        corpus.push_back({"P", "C", "Q"});
    }
    for (auto mode : {EmbeddingMode::skipgram, EmbeddingMode::cbow}) {
        auto cfg = small_config(mode, 3);
        cfg.window = 1;
        auto m = train_word2vec(corpus, cfg);
        EXPECT_GT(cosine(row_of(m, "A"), row_of(m, "B")), cosine(row_of(m, "A"), row_of(m, "C")))
            << to_string(mode);
    }
}

TEST(Word2Vec, ShapeFiniteAndDeterministic) {
    auto corpus = pepclass::testing::cooccurrence_corpus(2, 30).sentences;
    auto cfg = small_config(EmbeddingMode::skipgram, 11);
    auto a = train_word2vec(corpus, cfg);
    auto b = train_word2vec(corpus, cfg);
    EXPECT_EQ(a.dim(), 16u);
    EXPECT_EQ(static_cast<std::size_t>(a.input_vectors.rows()), a.vocab.size());
    EXPECT_TRUE(a.all_finite());
    EXPECT_TRUE(a.input_vectors == b.input_vectors);
    EXPECT_TRUE(a.output_vectors == b.output_vectors);
    cfg.seed = 12;
    EXPECT_FALSE(train_word2vec(corpus, cfg).input_vectors == a.input_vectors);
}

TEST(Word2Vec, EmptyCorpusIsError) {
    EXPECT_THROW(train_word2vec({}, small_config(EmbeddingMode::skipgram, 1)), EmbedError);
}

TEST(Word2Vec, LookupRules) {
    auto corpus = pepclass::testing::cooccurrence_corpus(2, 30).sentences;
    auto m = train_word2vec(corpus, small_config(EmbeddingMode::cbow, 1));
    EXPECT_EQ(embedding_for("AC", m), row_of(m, "AC"));
    EXPECT_EQ(embedding_for("ZZ", m), embedding_for("<unk>", m));
    for (Real x : embedding_for("<pad>", m)) EXPECT_EQ(x, 0.0);
}

TEST(FastText, OutOfVocabularyGetsFiniteVector) {
    auto corpus = pepclass::testing::cooccurrence_corpus(4, 30).sentences;
    auto ft = train_fasttext(corpus, small_config(EmbeddingMode::fasttext, 4));
    auto v = embedding_for("AZ", ft.matrix, &ft.subwords);
    ASSERT_EQ(v.size(), 16u);
    Real norm = 0;
    for (Real x : v) {
        EXPECT_TRUE(std::isfinite(x));
        norm += x * x;
    }
    EXPECT_GT(norm, 0.0);
    for (Real x : embedding_for("<pad>", ft.matrix, &ft.subwords)) EXPECT_EQ(x, 0.0);
}

TEST(FastText, InVocabularyVectorIsMeanOfParts) {
    auto corpus = pepclass::testing::cooccurrence_corpus(4, 30).sentences;
    auto ft = train_fasttext(corpus, small_config(EmbeddingMode::fasttext, 4));
    for (const std::string token : {"AC", "HI", "PQ"}) {
        std::vector<Real> sum(16, 0.0);
        std::size_t n = 0;
        for (const auto& s : subword_strings(token, 2, 2)) {
            const auto r = ft.subwords.row(fnv1a32(s) % 20000);
            for (std::size_t j = 0; j < 16; ++j) sum[j] += r[j];
            ++n;
        }
        const auto own = row_of(ft.matrix, token);
        for (std::size_t j = 0; j < 16; ++j) sum[j] += own[j];
        ++n;
        const auto v = embedding_for(token, ft.matrix, &ft.subwords);
        for (std::size_t j = 0; j < 16; ++j) EXPECT_NEAR(v[j], sum[j] / static_cast<Real>(n), 1e-15);
    }
}

TEST(FastText, SubwordOverlapRaisesSimilarity) {
    // contexts carry no signal, so similarity comes from shared subwords
    Rng rng(8);
    const std::vector<std::string> tokens{"KLAKL", "KLAKW", "WYQPS", "DEFGH", "MNRTV", "CIQES"};
    std::vector<pepclass::seqdata::TokenList> corpus;
    for (int s = 0; s < 300; ++s) {
        pepclass::seqdata::TokenList sentence;
        for (int i = 0; i < 6; ++i) sentence.push_back(tokens[rng.index(tokens.size())]);
        corpus.push_back(sentence);
    }
    auto cfg = small_config(EmbeddingMode::fasttext, 5);
    cfg.maxn = 3;
    auto ft = train_fasttext(corpus, cfg);
    // uniform contexts pull every vector toward one shared direction; compare what is left
    std::vector<Real> mean(16, 0.0);
    for (const auto& t : tokens) {
        const auto v = embedding_for(t, ft.matrix, &ft.subwords);
        for (std::size_t j = 0; j < 16; ++j) mean[j] += v[j] / static_cast<Real>(tokens.size());
    }
    auto vec = [&](const std::string& t) {
        auto v = embedding_for(t, ft.matrix, &ft.subwords);
        for (std::size_t j = 0; j < 16; ++j) v[j] -= mean[j];
        return v;
    };
    EXPECT_GT(cosine(vec("KLAKL"), vec("KLAKW")), cosine(vec("KLAKL"), vec("WYQPS")));
    EXPECT_GT(cosine(vec("KLAKL"), vec("KLAKW")), cosine(vec("KLAKL"), vec("MNRTV")));
}

TEST(FastText, Deterministic) {
    auto corpus = pepclass::testing::cooccurrence_corpus(6, 20).sentences;
    auto cfg = small_config(EmbeddingMode::fasttext, 6);
    auto a = train_fasttext(corpus, cfg);
    auto b = train_fasttext(corpus, cfg);
    EXPECT_TRUE(a.matrix.input_vectors == b.matrix.input_vectors);
    EXPECT_EQ(a.subwords, b.subwords);
}

TEST(EmbeddingFile, TextRoundTrip) {
    auto corpus = pepclass::testing::cooccurrence_corpus(2, 20).sentences;
    auto m = train_word2vec(corpus, small_config(EmbeddingMode::skipgram, 1));
    auto text = embedding_to_text(m);
    EXPECT_EQ(text.substr(0, text.find('\n')), "16 " + std::to_string(m.vocab.size()) + " skipgram 0 0");
    auto back = embedding_from_text(text);
    EXPECT_EQ(back.vocab, m.vocab);
    EXPECT_TRUE(back.input_vectors == m.input_vectors);
}

TEST(EmbeddingFile, TruncatedIsError) {
    auto corpus = pepclass::testing::cooccurrence_corpus(2, 20).sentences;
    auto text = embedding_to_text(train_word2vec(corpus, small_config(EmbeddingMode::skipgram, 1)));
    EXPECT_THROW(embedding_from_text(text.substr(0, text.size() / 2)), EmbedError);
    EXPECT_THROW(embedding_from_text(""), EmbedError);
}
