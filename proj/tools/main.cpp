#include <CLI11.hpp>

#include "commands.hpp"

using namespace pepclass::cli;

namespace {

void add_common(CLI::App* sub, Options& opts) {
    sub->add_option("--config", opts.config, "JSON run configuration");
    sub->add_option("--dataset", opts.dataset, "Dataset file (CSV or FASTA)");
    sub->add_option("--seed", opts.seed, "Global seed");
    sub->add_option("--out", opts.out, "Output directory");
    sub->add_option("--embedding", opts.embedding, "Embedding: WS, WC or FT(n)");
    sub->add_option("--arch", opts.architecture, "Architecture: cnn, lstm or bilstm");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Anticancer peptide classification with learned k-mer embeddings"};
    app.require_subcommand(1);
    Options opts;

    auto* embed = app.add_subcommand("embed", "Train an embedding on a dataset and write it to the output directory");
    add_common(embed, opts);

    auto* train = app.add_subcommand("train", "Train one classifier on one holdout split");
    add_common(train, opts);
    train->add_option("--embedding-file", opts.embedding_file, "Pretrained embedding text file");

    auto* evaluate = app.add_subcommand("evaluate", "Repeated holdout evaluation of one model or a grid");
    add_common(evaluate, opts);
    evaluate->add_option("--grid", opts.grid, "none, word2vec, fasttext or all")
        ->check(CLI::IsMember({"none", "word2vec", "fasttext", "all"}));
    evaluate->add_option("--runs", opts.runs, "Number of holdout runs");

    auto* predict = app.add_subcommand("predict", "Score sequences with a saved model");
    predict->add_option("model", opts.model_path, "Model file")->required();
    predict->add_option("input", opts.input_path, "Sequences: FASTA, CSV or one per line")->required();

    auto* reproduce = app.add_subcommand("reproduce", "Run a locked reference experiment");
    reproduce->add_option("--preset", opts.preset, "acps250-ft3-bilstm, independent-ft2-bilstm, word2vec-grids, fasttext-grids")
        ->required();
    reproduce->add_option("--data-dir", opts.data_dir, "Directory holding ACPs250.csv and Independent.csv");
    reproduce->add_option("--dataset", opts.dataset, "Dataset file for single-dataset presets");
    reproduce->add_option("--runs", opts.runs, "Number of holdout runs");
    reproduce->add_option("--seed", opts.seed, "Global seed");
    reproduce->add_option("--out", opts.out, "Output directory");

    auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of every layer and architecture");
    gradcheck->add_option("--instances", opts.instances, "Random instances per component");
    gradcheck->add_option("--seed", opts.seed, "Seed");
    gradcheck->add_option("--inject-fault", opts.inject_fault)->group("");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInput;
    }

    if (embed->parsed()) return cmd_embed(opts);
    if (train->parsed()) return cmd_train(opts);
    if (evaluate->parsed()) return cmd_evaluate(opts);
    if (predict->parsed()) return cmd_predict(opts);
    if (reproduce->parsed()) return cmd_reproduce(opts);
    if (gradcheck->parsed()) return cmd_gradcheck(opts);
    return kExitInput;
}
