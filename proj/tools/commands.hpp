#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace pepclass::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitRuntime = 3;
inline constexpr int kExitSelfCheck = 4;

struct Options {
    std::string config;
    std::string dataset;
    std::string preset;
    std::string grid = "none";
    std::string embedding;
    std::string architecture;
    std::string embedding_file;
    std::string data_dir = "data";
    std::optional<std::size_t> runs;
    std::optional<std::uint64_t> seed;
    std::string out;
    // predict
    std::string model_path;
    std::string input_path;
    // gradcheck
    std::size_t instances = 20;
    std::string inject_fault;
};

int cmd_embed(const Options& opts);
int cmd_train(const Options& opts);
int cmd_evaluate(const Options& opts);
int cmd_predict(const Options& opts);
int cmd_reproduce(const Options& opts);
int cmd_gradcheck(const Options& opts);

}  // namespace pepclass::cli
