#include <gtest/gtest.h>

#include <map>

#include "pepclass/run_config.hpp"

using namespace pepclass;

namespace {

std::function<const char*(const char*)> env(std::map<std::string, std::string> vars) {
    auto store = std::make_shared<std::map<std::string, std::string>>(std::move(vars));
    return [store](const char* name) -> const char* {
        auto it = store->find(name);
        return it == store->end() ? nullptr : it->second.c_str();
    };
}

}  // namespace

TEST(RunConfigParse, EmptyObjectGivesDefaults) {
    auto c = parse_run_config("{}");
    EXPECT_EQ(c.seed, 1u);
    EXPECT_EQ(c.output_dir, "out");
    EXPECT_EQ(c.embedding_spec.label(), "FT(3)");
    EXPECT_EQ(c.architecture, models::Architecture::bilstm);
    auto e = c.experiment_config();
    EXPECT_EQ(e.n_runs, 10u);
    EXPECT_EQ(e.seed_base, 1u);
    EXPECT_DOUBLE_EQ(e.test_fraction, 0.2);
    EXPECT_EQ(e.embedding.dim, 100u);
    EXPECT_EQ(e.train.batch_size, 32u);
    EXPECT_DOUBLE_EQ(e.train.lr, 0.01);
}

TEST(RunConfigParse, SectionsAreApplied) {
    auto c = parse_run_config(R"({
        "seed": 7,
        "dataset": {"path": "data/x.fasta", "format": "fasta"},
        "embedding": {"kind": "WC", "dim": 32, "window": 3, "seed": 99},
        "model": {"architecture": "cnn", "trainable": false, "head": "sigmoid1"},
        "training": {"lr": 0.001, "batch_size": 64, "epochs": 9, "patience": 2},
        "eval": {"n_runs": 4, "test_fraction": 0.25}
    })");
    EXPECT_EQ(c.dataset_path, "data/x.fasta");
    EXPECT_EQ(c.dataset_format, seqdata::DatasetFormat::fasta);
    EXPECT_EQ(c.embedding_spec.label(), "WC");
    EXPECT_EQ(c.embedding_config().dim, 32u);
    EXPECT_EQ(c.embedding_config().seed, 99u);
    EXPECT_EQ(c.architecture, models::Architecture::cnn);
    auto e = c.experiment_config();
    EXPECT_FALSE(e.embedding_trainable);
    EXPECT_EQ(e.head, models::ClassHead::sigmoid1);
    EXPECT_EQ(e.train.max_epochs, 9u);
    EXPECT_EQ(e.n_runs, 4u);
    EXPECT_EQ(e.seed_base, 7u);
}

TEST(RunConfigParse, UnknownKeysFail) {
    EXPECT_THROW(parse_run_config(R"({"sed": 1})"), ConfigError);
    EXPECT_THROW(parse_run_config(R"({"training": {"learning_rate": 0.1}})"), ConfigError);
    EXPECT_THROW(parse_run_config(R"({"embedding": {"dims": 10}})"), ConfigError);
    try {
        parse_run_config(R"({"eval": {"nruns": 3}})");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("nruns"), std::string::npos) << e.what();
    }
}

TEST(RunConfigParse, BadValuesFail) {
    EXPECT_THROW(parse_run_config("{"), ConfigError);
    EXPECT_THROW(parse_run_config(R"({"seed": "one"})"), ConfigError);
    EXPECT_THROW(parse_run_config(R"({"model": {"architecture": "gru"}})"), ConfigError);
    EXPECT_THROW(parse_run_config(R"({"embedding": {"dim": 0}})"), ConfigError);
    EXPECT_THROW(parse_run_config(R"({"eval": {"test_fraction": 1.5}})"), ConfigError);
    EXPECT_THROW(parse_run_config(R"({"training": {"lr": -1}})"), ConfigError);
}

TEST(RunConfigParse, ResolvedJsonRoundTrips) {
    auto c = parse_run_config(R"j({"seed": 3, "embedding": {"kind": "FT(2)", "dim": 12}})j");
    auto text = run_config_to_json(c);
    auto back = parse_run_config(text);
    EXPECT_EQ(run_config_to_json(back), text);
    EXPECT_EQ(back.embedding_spec.label(), "FT(2)");
}

TEST(RunConfigEnv, OverridesOutputAndSeed) {
    auto c = parse_run_config(R"({"seed": 3})");
    apply_env_overrides(c, env({{"PEPCLASS_OUT", "/tmp/elsewhere"}, {"PEPCLASS_SEED", "11"}}));
    EXPECT_EQ(c.output_dir, "/tmp/elsewhere");
    EXPECT_EQ(c.seed, 11u);
    EXPECT_EQ(c.experiment_config().seed_base, 11u);
    EXPECT_THROW(apply_env_overrides(c, env({{"PEPCLASS_SEED", "x1"}})), ConfigError);
    auto d = parse_run_config("{}");
    apply_env_overrides(d, env({}));
    EXPECT_EQ(d.output_dir, "out");
}
