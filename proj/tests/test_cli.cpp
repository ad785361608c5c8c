#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "pepclass/fileutil.hpp"
#include "synthetic.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
    int code = -1;
    std::string out;
};

// Runs the CLI with stderr folded into the captured output.
Result run(const std::string& args) {
    const std::string cmd = std::string(PEPCLASS_BIN) + " " + args + " 2>&1";
    Result r;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return r;
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

class CliTest : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        // one directory per process so parallel ctest runs do not collide
        dir_ = fs::temp_directory_path() / ("pepclass_cli_test_" + std::to_string(getpid()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
        std::ofstream(dir_ / "data.csv") << pepclass::testing::to_csv(pepclass::testing::synthetic_peptides(24, 24, 3));
        std::ofstream(dir_ / "small.json") << R"({
            "embedding": {"dim": 8, "epochs": 3, "bucket_count": 5000},
            "training": {"epochs": 3, "batch_size": 16},
            "eval": {"n_runs": 2, "threads": 2}
        })";
    }
    static std::string common(const std::string& out) {
        return "--config " + (dir_ / "small.json").string() + " --dataset " + (dir_ / "data.csv").string() +
               " --out " + (dir_ / out).string();
    }
    static fs::path dir_;
};

fs::path CliTest::dir_;

}  // namespace

TEST_F(CliTest, MissingDatasetExitsTwoNamingPath) {
    auto r = run("embed --dataset /nonexistent/peptides.csv --out " + (dir_ / "x").string());
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.out.find("/nonexistent/peptides.csv"), std::string::npos) << r.out;
}

TEST_F(CliTest, UnknownConfigKeyExitsTwo) {
    std::ofstream(dir_ / "typo.json") << R"({"training": {"epochz": 3}})";
    auto r = run("evaluate --config " + (dir_ / "typo.json").string() + " --dataset " + (dir_ / "data.csv").string());
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.out.find("epochz"), std::string::npos) << r.out;
}

TEST_F(CliTest, UnknownPresetListsValidOnes) {
    auto r = run("reproduce --preset table9");
    EXPECT_EQ(r.code, 2);
    for (const char* p : {"acps250-ft3-bilstm", "independent-ft2-bilstm", "word2vec-grids", "fasttext-grids"})
        EXPECT_NE(r.out.find(p), std::string::npos) << r.out;
}

TEST_F(CliTest, ReproduceWithoutDataExitsTwo) {
    auto r = run("reproduce --preset acps250-ft3-bilstm --data-dir " + (dir_ / "nodata").string());
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.out.find("ACPs250.csv"), std::string::npos) << r.out;
}

TEST_F(CliTest, EmbedFastTextHeader) {
    auto r = run("embed " + common("embed_ft") + " --embedding 'FT(3)'");
    ASSERT_EQ(r.code, 0) << r.out;
    auto text = pepclass::read_file(dir_ / "embed_ft" / "embedding.txt");
    std::istringstream header(text.substr(0, text.find('\n')));
    std::string dim, vocab, mode, minn, maxn;
    header >> dim >> vocab >> mode >> minn >> maxn;
    EXPECT_EQ(dim, "8");
    EXPECT_EQ(mode, "fasttext");
    EXPECT_EQ(minn, "2");
    EXPECT_EQ(maxn, "3");
    EXPECT_TRUE(fs::exists(dir_ / "embed_ft" / "embedding.txt.buckets"));
}

TEST_F(CliTest, EmbedSkipGramVocabulary) {
    auto r = run("embed " + common("embed_ws") + " --embedding WS");
    ASSERT_EQ(r.code, 0) << r.out;
    auto text = pepclass::read_file(dir_ / "embed_ws" / "embedding.txt");
    std::istringstream header(text.substr(0, text.find('\n')));
    std::size_t dim = 0, vocab = 0;
    header >> dim >> vocab;
    EXPECT_LE(vocab, 26u + 2u);
    EXPECT_GE(vocab, 3u);
}

TEST_F(CliTest, TrainThenPredict) {
    auto r = run("train " + common("train") + " --embedding WS --arch cnn");
    ASSERT_EQ(r.code, 0) << r.out;
    auto loss = pepclass::read_file(dir_ / "train" / "loss.csv");
    EXPECT_EQ(loss.substr(0, loss.find('\n')), "epoch,train_loss,val_loss");
    const auto rows = static_cast<std::size_t>(std::count(loss.begin(), loss.end(), '\n')) - 1;
    EXPECT_GE(rows, 1u);
    EXPECT_LE(rows, 3u);

    auto again = run("train " + common("train2") + " --embedding WS --arch cnn");
    ASSERT_EQ(again.code, 0);
    EXPECT_EQ(pepclass::read_file(dir_ / "train2" / "loss.csv"), loss);

    std::ofstream(dir_ / "query.txt") << "KLAKLAKKLAKLAK\n";
    const auto model = (dir_ / "train" / "model.bin").string();
    auto p = run("predict " + model + " " + (dir_ / "query.txt").string());
    ASSERT_EQ(p.code, 0) << p.out;
    std::istringstream lines(p.out);
    std::string header, line;
    std::getline(lines, header);
    EXPECT_EQ(header, "id,sequence,probability,label@0.5");
    std::getline(lines, line);
    auto parts = std::vector<std::string>{};
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, ',');) parts.push_back(f);
    ASSERT_EQ(parts.size(), 4u) << line;
    const double prob = std::stod(parts[2]);
    EXPECT_GE(prob, 0.0);
    EXPECT_LE(prob, 1.0);
    EXPECT_EQ(parts[3], prob >= 0.5 ? "1" : "0");
    EXPECT_EQ(run("predict " + model + " " + (dir_ / "query.txt").string()).out, p.out);
}

TEST_F(CliTest, PredictErrorLines) {
    ASSERT_EQ(run("train " + common("train_ft") + " --embedding 'FT(3)' --arch cnn").code, 0);
    const auto model = (dir_ / "train_ft" / "model.bin").string();
    std::ofstream(dir_ / "mixed.fasta") << ">a\nKLAKLAKKLA\n>b\nKL\n>c\nKL1AK\n";
    auto r = run("predict " + model + " " + (dir_ / "mixed.fasta").string());
    EXPECT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("b,KL,error,"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("c,KL1AK,error,"), std::string::npos) << r.out;

    std::ofstream(dir_ / "bad.txt") << "KL\nK*K\n";
    EXPECT_EQ(run("predict " + model + " " + (dir_ / "bad.txt").string()).code, 2);
}

TEST_F(CliTest, EvaluateReportMatchesRuns) {
    auto r = run("evaluate " + common("eval") + " --embedding 'FT(2)' --arch cnn --runs 1");
    ASSERT_EQ(r.code, 0) << r.out;
    auto j = nlohmann::json::parse(pepclass::read_file(dir_ / "eval" / "report.json"));
    ASSERT_EQ(j["runs"].size(), 1u);
    for (const char* k : {"acc", "sen", "spe", "mcc", "auc"})
        EXPECT_NEAR(j["mean"][k].get<double>(), j["runs"][0][k].get<double>(), 1e-12) << k;
    EXPECT_TRUE(fs::exists(dir_ / "eval" / "report_roc.csv"));
    EXPECT_TRUE(fs::exists(dir_ / "eval" / "table.tsv"));
}

TEST_F(CliTest, EvaluateMeanIsRecomputable) {
    auto r = run("evaluate " + common("eval2") + " --embedding WC --arch cnn");
    ASSERT_EQ(r.code, 0) << r.out;
    auto j = nlohmann::json::parse(pepclass::read_file(dir_ / "eval2" / "report.json"));
    ASSERT_EQ(j["runs"].size(), 2u);
    for (const char* k : {"acc", "sen", "spe", "mcc", "auc"}) {
        const double mean = (j["runs"][0][k].get<double>() + j["runs"][1][k].get<double>()) / 2;
        EXPECT_NEAR(j["mean"][k].get<double>(), mean, 1e-9) << k;
    }
    auto again = run("evaluate " + common("eval3") + " --embedding WC --arch cnn");
    ASSERT_EQ(again.code, 0);
    for (const char* f : {"report.json", "report.csv", "report_roc.csv", "table.tsv"})
        EXPECT_EQ(pepclass::read_file(dir_ / "eval2" / f), pepclass::read_file(dir_ / "eval3" / f)) << f;
}

TEST_F(CliTest, EnvironmentOverridesOutput) {
    const auto target = dir_ / "from_env";
    const std::string cmd = "PEPCLASS_OUT=" + target.string() + " " + std::string(PEPCLASS_BIN) +
                            " embed --config " + (dir_ / "small.json").string() + " --dataset " +
                            (dir_ / "data.csv").string() + " --embedding WS > /dev/null 2>&1";
    ASSERT_EQ(std::system(cmd.c_str()), 0);
    EXPECT_TRUE(fs::exists(target / "embedding.txt"));
}

TEST_F(CliTest, GradcheckPassesAndListsArchitectures) {
    auto r = run("gradcheck --instances 2");
    EXPECT_EQ(r.code, 0) << r.out;
    for (const char* a : {"model:cnn", "model:lstm", "model:bilstm"}) {
        const auto first = r.out.find(a);
        ASSERT_NE(first, std::string::npos) << a;
        EXPECT_EQ(r.out.find(a, first + 1), std::string::npos) << a;
    }
}

TEST_F(CliTest, GradcheckDetectsBrokenConv) {
    auto r = run("gradcheck --instances 2 --inject-fault conv1d");
    EXPECT_EQ(r.code, 4);
    EXPECT_NE(r.out.find("gradient check failed: conv1d"), std::string::npos) << r.out;
}

TEST_F(CliTest, BadArgumentsExitTwo) {
    EXPECT_EQ(run("").code, 2);
    EXPECT_EQ(run("evaluate --grid everything").code, 2);
}
