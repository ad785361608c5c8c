#include "pepclass/lstm.hpp"

#include <cmath>

namespace pepclass::nn {

namespace {

Eigen::ArrayXXd apply_cell(const RowMatrix& x, CellActivation a) {
    if (a == CellActivation::tanh) return x.array().tanh();
    return x.array().max(0.0);
}

// derivative expressed through the pre-activation x and output y
Eigen::ArrayXXd cell_derivative(const RowMatrix& x, const RowMatrix& y, CellActivation a) {
    if (a == CellActivation::tanh) return 1.0 - y.array().square();
    return (x.array() > 0.0).cast<double>();
}

Eigen::ArrayXXd sigmoid_array(const Eigen::ArrayXXd& x) {
    return x.unaryExpr([](double v) { return sigmoid(v); });
}

}  // namespace

LstmCellParams::LstmCellParams(std::size_t in, std::size_t h, Rng& init_rng, const std::string& prefix)
    : input_dim(in),
      hidden(h),
      input_weight(prefix + ".input_weight", glorot_uniform({in, 4 * h}, in, 4 * h, init_rng)),
      recurrent_weight(prefix + ".recurrent_weight", orthogonal(h, 4 * h, init_rng)),
      bias(prefix + ".bias", Tensor({4 * h}, 0.0)) {
    // forget-gate bias starts at 1
    for (std::size_t j = h; j < 2 * h; ++j) bias.value[j] = 1.0;
}

Lstm::Lstm(std::size_t input_dim, std::size_t hidden, CellActivation activation, bool return_sequences,
           bool reverse, Rng& init_rng, std::string prefix)
    : params_(input_dim, hidden, init_rng, prefix),
      activation_(activation),
      return_sequences_(return_sequences),
      reverse_(reverse) {}

Tensor Lstm::forward(const Tensor& input, const ForwardContext& ctx) {
    require_shape(input, 3, "lstm");
    const std::size_t batch = input.dim(0), time = input.dim(1), in = input.dim(2);
    const std::size_t h = params_.hidden;
    if (in != params_.input_dim)
        throw ShapeError("lstm: input feature width " + std::to_string(in) + " does not match " +
                         std::to_string(params_.input_dim));
    if (ctx.mask && ctx.mask->shape() != Shape{batch, time})
        throw ShapeError("lstm: mask shape " + shape_string(ctx.mask->shape()) + " does not match input " +
                         shape_string(input.shape()));
    input_ = input;
    valid_ = ctx.mask ? RowMatrix(ctx.mask->matrix()) : RowMatrix::Ones(static_cast<Eigen::Index>(batch),
                                                                        static_cast<Eigen::Index>(time));
    const auto B = static_cast<Eigen::Index>(batch);
    const auto H = static_cast<Eigen::Index>(h);

    RowMatrix xw = input.reshaped({batch * time, in}).matrix() * params_.input_weight.value.matrix();
    const Eigen::RowVectorXd bias = params_.bias.value.matrix().row(0);
    auto u = params_.recurrent_weight.value.matrix();

    gates_.assign(time, RowMatrix());
    cand_pre_.assign(time, RowMatrix());
    cell_act_.assign(time, RowMatrix());
    cells_.assign(time + 1, RowMatrix::Zero(B, H));
    hiddens_.assign(time + 1, RowMatrix::Zero(B, H));

    Tensor out = return_sequences_ ? Tensor({batch, time, h}) : Tensor({batch, h});
    for (std::size_t s = 0; s < time; ++s) {
        const std::size_t t = reverse_ ? time - 1 - s : s;
        RowMatrix pre(B, 4 * H);
        for (Eigen::Index b = 0; b < B; ++b)
            pre.row(b) = xw.row(b * static_cast<Eigen::Index>(time) + static_cast<Eigen::Index>(t));
        pre.noalias() += hiddens_[s] * u;
        pre.rowwise() += bias;

        RowMatrix g(B, 4 * H);
        g.leftCols(3 * H) = sigmoid_array(pre.leftCols(3 * H).array()).matrix();
        cand_pre_[s] = pre.rightCols(H);
        g.rightCols(H) = apply_cell(cand_pre_[s], activation_).matrix();

        RowMatrix c_new = (g.middleCols(H, H).array() * cells_[s].array() +
                           g.leftCols(H).array() * g.rightCols(H).array()).matrix();
        RowMatrix c_act = apply_cell(c_new, activation_).matrix();
        RowMatrix h_new = (g.middleCols(2 * H, H).array() * c_act.array()).matrix();

        const Eigen::ArrayXd m = valid_.col(static_cast<Eigen::Index>(t)).array();
        cells_[s + 1] = ((c_new.array().colwise() * m) + (cells_[s].array().colwise() * (1.0 - m))).matrix();
        hiddens_[s + 1] = ((h_new.array().colwise() * m) + (hiddens_[s].array().colwise() * (1.0 - m))).matrix();
        gates_[s] = std::move(g);
        cell_act_[s] = std::move(c_act);

        if (return_sequences_)
            for (Eigen::Index b = 0; b < B; ++b)
                Eigen::Map<Eigen::RowVectorXd>(out.data() + (static_cast<std::size_t>(b) * time + t) * h, H) =
                    hiddens_[s + 1].row(b);
    }
    if (!return_sequences_) out.matrix() = hiddens_[time];
    return out;
}

Tensor Lstm::backward(const Tensor& grad_output) {
    const std::size_t batch = input_.dim(0), time = input_.dim(1), in = input_.dim(2);
    const std::size_t h = params_.hidden;
    const auto B = static_cast<Eigen::Index>(batch);
    const auto H = static_cast<Eigen::Index>(h);
    const Shape expected = return_sequences_ ? Shape{batch, time, h} : Shape{batch, h};
    if (grad_output.shape() != expected)
        throw ShapeError("lstm: gradient shape " + shape_string(grad_output.shape()) + " does not match output " +
                         shape_string(expected));

    auto u = params_.recurrent_weight.value.matrix();
    RowMatrix dh = return_sequences_ ? RowMatrix::Zero(B, H) : RowMatrix(grad_output.matrix());
    RowMatrix dc = RowMatrix::Zero(B, H);
    RowMatrix dxw = RowMatrix::Zero(B * static_cast<Eigen::Index>(time), 4 * H);
    RowMatrix du = RowMatrix::Zero(H, 4 * H);
    Eigen::RowVectorXd db = Eigen::RowVectorXd::Zero(4 * H);

    for (std::size_t si = time; si-- > 0;) {
        const std::size_t t = reverse_ ? time - 1 - si : si;
        if (return_sequences_)
            for (Eigen::Index b = 0; b < B; ++b)
                dh.row(b) += Eigen::Map<const Eigen::RowVectorXd>(
                    grad_output.data() + (static_cast<std::size_t>(b) * time + t) * h, H);
        const Eigen::ArrayXd m = valid_.col(static_cast<Eigen::Index>(t)).array();
        const RowMatrix& g = gates_[si];
        const auto i_g = g.leftCols(H).array();
        const auto f_g = g.middleCols(H, H).array();
        const auto o_g = g.middleCols(2 * H, H).array();
        const auto c_g = g.rightCols(H).array();

        // gradients entering the fresh (unmasked) step
        const Eigen::ArrayXXd dh_new = dh.array().colwise() * m;
        const Eigen::ArrayXXd dc_in = dc.array().colwise() * m;
        RowMatrix c_new_pre = (f_g * cells_[si].array() + i_g * c_g).matrix();
        const Eigen::ArrayXXd dcell = dc_in + dh_new * o_g * cell_derivative(c_new_pre, cell_act_[si], activation_);

        RowMatrix dpre(B, 4 * H);
        dpre.leftCols(H) = (dcell * c_g * i_g * (1.0 - i_g)).matrix();
        dpre.middleCols(H, H) = (dcell * cells_[si].array() * f_g * (1.0 - f_g)).matrix();
        dpre.middleCols(2 * H, H) = (dh_new * cell_act_[si].array() * o_g * (1.0 - o_g)).matrix();
        dpre.rightCols(H) = (dcell * i_g * cell_derivative(cand_pre_[si], g.rightCols(H), activation_)).matrix();

        du.noalias() += hiddens_[si].transpose() * dpre;
        db += dpre.colwise().sum();
        for (Eigen::Index b = 0; b < B; ++b)
            dxw.row(b * static_cast<Eigen::Index>(time) + static_cast<Eigen::Index>(t)) = dpre.row(b);

        RowMatrix dh_prev = dpre * u.transpose();
        dh_prev.array() += dh.array().colwise() * (1.0 - m);
        RowMatrix dc_prev = (dcell * f_g).matrix();
        dc_prev.array() += dc.array().colwise() * (1.0 - m);
        dh = std::move(dh_prev);
        dc = std::move(dc_prev);
    }

    auto x = input_.reshaped({batch * time, in});
    params_.input_weight.grad.matrix().noalias() += x.matrix().transpose() * dxw;
    params_.recurrent_weight.grad.matrix() += du;
    params_.bias.grad.matrix().row(0) += db;
    Tensor dx({batch, time, in});
    MatrixMap(dx.data(), static_cast<Eigen::Index>(batch * time), static_cast<Eigen::Index>(in)).noalias() =
        dxw * params_.input_weight.value.matrix().transpose();
    return dx;
}

Bilstm::Bilstm(std::size_t input_dim, std::size_t hidden, CellActivation activation, bool return_sequences,
               Rng& init_rng, std::string prefix)
    : fwd_(input_dim, hidden, activation, return_sequences, false, init_rng, prefix + ".fwd"),
      bwd_(input_dim, hidden, activation, return_sequences, true, init_rng, prefix + ".bwd"),
      return_sequences_(return_sequences) {}

std::vector<Parameter*> Bilstm::parameters() {
    auto p = fwd_.parameters();
    for (auto* q : bwd_.parameters()) p.push_back(q);
    return p;
}

Tensor Bilstm::forward(const Tensor& input, const ForwardContext& ctx) {
    Tensor a = fwd_.forward(input, ctx);
    Tensor b = bwd_.forward(input, ctx);
    const std::size_t h = fwd_.hidden();
    out_shape_ = a.shape();
    out_shape_.back() = 2 * h;
    Tensor out(out_shape_);
    const std::size_t rows = a.size() / h;
    for (std::size_t r = 0; r < rows; ++r) {
        std::copy_n(a.data() + r * h, h, out.data() + r * 2 * h);
        std::copy_n(b.data() + r * h, h, out.data() + r * 2 * h + h);
    }
    return out;
}

Tensor Bilstm::backward(const Tensor& grad_output) {
    if (grad_output.shape() != out_shape_)
        throw ShapeError("bilstm: gradient shape " + shape_string(grad_output.shape()) + " does not match output " +
                         shape_string(out_shape_));
    const std::size_t h = fwd_.hidden();
    Shape half = out_shape_;
    half.back() = h;
    Tensor ga(half), gb(half);
    const std::size_t rows = ga.size() / h;
    for (std::size_t r = 0; r < rows; ++r) {
        std::copy_n(grad_output.data() + r * 2 * h, h, ga.data() + r * h);
        std::copy_n(grad_output.data() + r * 2 * h + h, h, gb.data() + r * h);
    }
    Tensor dx = fwd_.backward(ga);
    Tensor dxb = bwd_.backward(gb);
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dxb[i];
    return dx;
}

}  // namespace pepclass::nn
