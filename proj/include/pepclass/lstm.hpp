#pragma once

#include "pepclass/layers.hpp"

namespace pepclass::nn {

enum class CellActivation { tanh, relu };

/// Gate weights are packed column-wise in the order input, forget, output,
/// candidate: input_weight is [in, 4H], recurrent_weight is [H, 4H] and
/// bias is [4H].
struct LstmCellParams {
    std::size_t input_dim = 0;
    std::size_t hidden = 0;
    Parameter input_weight;
    Parameter recurrent_weight;
    Parameter bias;

    LstmCellParams() = default;
    LstmCellParams(std::size_t input_dim, std::size_t hidden, Rng& init_rng, const std::string& prefix);

    std::size_t parameter_count() const { return 4 * hidden * (input_dim + hidden + 1); }
};

/// Single-direction LSTM over [batch, time, in].
///
/// Steps whose mask entry is 0 leave (h, c) unchanged; the output at such a
/// step repeats the carried h. With `reverse` the sequence is consumed from
/// t = T-1 down to 0 and per-step outputs stay aligned to their time index.
class Lstm final : public Layer {
public:
    Lstm(std::size_t input_dim, std::size_t hidden, CellActivation activation, bool return_sequences,
         bool reverse, Rng& init_rng, std::string prefix = "lstm");

    std::string name() const override { return "lstm"; }
    Tensor forward(const Tensor& input, const ForwardContext& ctx) override;
    Tensor backward(const Tensor& grad_output) override;
    std::vector<Parameter*> parameters() override {
        return {&params_.input_weight, &params_.recurrent_weight, &params_.bias};
    }

    LstmCellParams& params() { return params_; }
    std::size_t hidden() const { return params_.hidden; }

private:
    LstmCellParams params_;
    CellActivation activation_;
    bool return_sequences_;
    bool reverse_;

    // caches, indexed by processing step s (not time index)
    Tensor input_;
    RowMatrix valid_;  // [batch, time] in time order
    std::vector<RowMatrix> gates_;     // [batch, 4H] post-activation i, f, o, g
    std::vector<RowMatrix> cells_;     // c after step s, s = 0..T (cells_[0] initial)
    std::vector<RowMatrix> hiddens_;   // h after step s
    std::vector<RowMatrix> cell_act_;  // act(c_s)
    std::vector<RowMatrix> cand_pre_;  // candidate pre-activation (for relu derivative)
};

/// Forward and reverse LSTMs with per-step outputs concatenated on the feature
/// axis: output width 2H. Without return_sequences the result is the final
/// forward state followed by the final reverse state.
class Bilstm final : public Layer {
public:
    Bilstm(std::size_t input_dim, std::size_t hidden, CellActivation activation, bool return_sequences,
           Rng& init_rng, std::string prefix = "bilstm");

    std::string name() const override { return "bilstm"; }
    Tensor forward(const Tensor& input, const ForwardContext& ctx) override;
    Tensor backward(const Tensor& grad_output) override;
    std::vector<Parameter*> parameters() override;

    Lstm& forward_direction() { return fwd_; }
    Lstm& backward_direction() { return bwd_; }

private:
    Lstm fwd_, bwd_;
    bool return_sequences_;
    Shape out_shape_;
};

}  // namespace pepclass::nn
