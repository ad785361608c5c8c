#include "pepclass/gradcheck_suite.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <functional>
#include <memory>
#include <numeric>

#include "pepclass/gradcheck.hpp"
#include "pepclass/layers.hpp"
#include "pepclass/lstm.hpp"
#include "pepclass/models.hpp"
#include "pepclass/optim.hpp"

namespace pepclass::nn {

namespace {

constexpr Real kLayerTol = 1e-5;
constexpr Real kDefaultTol = 1e-4;
constexpr Real kLossTol = 1e-6;
constexpr Real kFaultScale = 1.01;
constexpr Real kEps = 1e-5;
// Below this absolute difference a central difference cannot resolve the
// gradient (roundoff of an O(1) loss divided by 2 eps).
constexpr Real kAbsFloor = 1e-10;

// Gradients smaller than this are reported but not used for the headline
// maximum, which would otherwise be dominated by roundoff.
constexpr Real kReportFloor = 1e-6;

struct Stats {
    Real tolerance = 0;
    Real max_rel = 0;  // over coordinates with |gradient| >= kReportFloor
    std::size_t checked = 0;
    std::size_t kinks = 0;
    std::size_t violations = 0;
};

/// Central differences like grad_check, but coordinates where the one-sided
/// slopes disagree (a ReLU or max boundary lies within eps) are skipped. A
/// coordinate violates the tolerance when both its relative error and its
/// absolute difference (against kAbsFloor) are too large.
void compare(const std::function<Real()>& fn, std::span<Real> x, std::span<const Real> analytic, Stats& stats,
             std::span<const std::size_t> indices = {}) {
    const Real f0 = fn();
    auto visit = [&](std::size_t i) {
        const Real orig = x[i];
        x[i] = orig + kEps;
        const Real fp = fn();
        x[i] = orig - kEps;
        const Real fm = fn();
        x[i] = orig;
        if (!std::isfinite(fp) || !std::isfinite(fm) || !std::isfinite(analytic[i]))
            throw NonFiniteError("non-finite value at coordinate " + std::to_string(i));
        const Real right = (fp - f0) / kEps, left = (f0 - fm) / kEps;
        if (std::abs(right - left) > std::max(1e-6, 1e-2 * std::max(std::abs(right), std::abs(left)))) {
            ++stats.kinks;
            return;
        }
        const Real numeric = (fp - fm) / (2 * kEps);
        ++stats.checked;
        const Real rel = relative_error(analytic[i], numeric);
        if (std::max(std::abs(analytic[i]), std::abs(numeric)) >= kReportFloor) stats.max_rel = std::max(stats.max_rel, rel);
        if (rel >= stats.tolerance && std::abs(analytic[i] - numeric) >= kAbsFloor) ++stats.violations;
    };
    if (indices.empty())
        for (std::size_t i = 0; i < x.size(); ++i) visit(i);
    else
        for (auto i : indices) visit(i);
}

Tensor random_tensor(Shape shape, Rng& rng, Real scale = 1.0) {
    Tensor t(std::move(shape));
    for (auto& v : t.values()) v = scale * rng.normal();
    return t;
}

Tensor random_mask(std::size_t batch, std::size_t time, Rng& rng) {
    Tensor m({batch, time});
    for (std::size_t b = 0; b < batch; ++b) {
        auto len = 1 + rng.index(time);
        for (std::size_t t = 0; t < len; ++t) m.at(b, t) = 1.0;
    }
    return m;
}

Real dot(const Tensor& a, const Tensor& b) {
    Real s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, Rng& rng) {
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    if (k >= n) return all;
    rng.shuffle(all.begin(), all.end());
    all.resize(k);
    std::sort(all.begin(), all.end());
    return all;
}

/// Checks dL/dx and dL/dparams of L = sum(r * layer(x)) for one instance.
void check_layer(Layer& layer, Tensor x, Mode mode, const Tensor* mask, Rng& rng, bool fault, Stats& stats) {
    const std::uint64_t drop_seed = rng.next_u64();
    auto run = [&]() {
        Rng drop(drop_seed);
        ForwardContext ctx{mode, mask, &drop};
        return layer.forward(x, ctx);
    };
    Tensor out = run();
    Tensor r = random_tensor(out.shape(), rng);
    auto params = layer.parameters();
    zero_grads(params);
    run();
    Tensor dx = layer.backward(r);
    std::vector<std::vector<Real>> grads;
    for (auto* p : params) grads.push_back(p->grad.values());
    if (fault) {
        for (auto& v : dx.values()) v *= kFaultScale;
        for (auto& g : grads)
            for (auto& v : g) v *= kFaultScale;
    }
    auto fn = [&]() { return dot(run(), r); };
    compare(fn, x.values(), dx.values(), stats);
    for (std::size_t i = 0; i < params.size(); ++i) compare(fn, params[i]->value.values(), grads[i], stats);
}

void check_loss(LossKind kind, Rng& rng, bool fault, Stats& stats) {
    const std::size_t batch = 2 + rng.index(7);
    const std::size_t classes = kind == LossKind::binary_ce ? 1 : 2 + rng.index(3);
    Tensor pred({batch, classes}), target({batch, classes});
    for (std::size_t b = 0; b < batch; ++b) {
        if (kind == LossKind::binary_ce) {
            pred.at(b, 0) = rng.uniform(0.05, 0.95);
            target.at(b, 0) = rng.bernoulli(0.5) ? 1.0 : 0.0;
        } else {
            Real sum = 0;
            for (std::size_t c = 0; c < classes; ++c) sum += pred.at(b, c) = rng.uniform(0.1, 1.0);
            for (std::size_t c = 0; c < classes; ++c) pred.at(b, c) /= sum;
            target.at(b, rng.index(classes)) = 1.0;
        }
    }
    auto analytic = compute_loss(kind, pred, target).grad.values();
    if (fault)
        for (auto& v : analytic) v *= kFaultScale;
    compare([&]() { return compute_loss(kind, pred, target).value; }, pred.values(), analytic, stats);
}

void check_architecture(models::Architecture arch, const GradcheckOptions& options, Rng& rng, bool fault,
                        Stats& stats) {
    const std::size_t dim = 4, max_len = 6, batch = 2;
    std::vector<std::string> tokens{std::string(seqdata::Vocabulary::kPadToken),
                                    std::string(seqdata::Vocabulary::kUnkToken), "A", "C", "D", "E", "F", "G"};
    std::vector<std::uint64_t> counts(tokens.size(), 1);
    counts[0] = counts[1] = 0;
    auto vocab = seqdata::Vocabulary::from_tokens(tokens, counts, 1);
    RowMatrix table(static_cast<Eigen::Index>(tokens.size()), static_cast<Eigen::Index>(dim));
    for (Eigen::Index i = 0; i < table.size(); ++i) table.data()[i] = 0.5 * rng.normal();
    table.row(0).setZero();

    auto config = models::ModelConfig::for_architecture(arch, max_len, 1, rng.next_u64());
    auto model = models::build_model(config, {vocab, table});

    std::vector<seqdata::EncodedSequence> seqs(batch);
    std::vector<int> labels;
    for (std::size_t b = 0; b < batch; ++b) {
        seqs[b].ids.assign(max_len, seqdata::Vocabulary::kPad);
        seqs[b].mask.assign(max_len, 0);
        auto len = 3 + rng.index(max_len - 2);
        for (std::size_t t = 0; t < len; ++t) {
            seqs[b].ids[t] = static_cast<int>(1 + rng.index(tokens.size() - 1));
            seqs[b].mask[t] = 1;
        }
        labels.push_back(static_cast<int>(b % 2));
    }
    auto data = models::make_batch(seqs);
    Tensor target = model.targets(labels);
    const std::uint64_t drop_seed = rng.next_u64();
    auto forward = [&]() {
        Rng drop(drop_seed);
        return model.forward(data, Mode::train, &drop);
    };

    auto params = model.parameters();
    zero_grads(params);
    auto loss = compute_loss(model.loss_kind(), forward(), target);
    model.backward(loss.grad);
    auto fn = [&]() { return compute_loss(model.loss_kind(), forward(), target).value; };

    for (auto* p : params) {
        auto analytic = p->grad.values();
        if (fault)
            for (auto& v : analytic) v *= kFaultScale;
        auto idx = sample_indices(p->value.size(), options.samples_per_tensor, rng);
        compare(fn, p->value.values(), analytic, stats, idx);
    }
}

struct Component {
    std::string name;
    Real tolerance;
    std::function<void(Rng&, bool, Stats&)> check;
};

std::vector<Component> components(const GradcheckOptions& options) {
    std::vector<Component> out;
    out.push_back({"dense", kLayerTol, [](Rng& rng, bool fault, Stats& stats) {
                       static const Activation acts[] = {Activation::identity, Activation::relu, Activation::sigmoid,
                                                         Activation::tanh, Activation::softmax};
                       auto in = 1 + rng.index(6), outn = 1 + rng.index(6), batch = 1 + rng.index(4);
                       Dense layer(in, outn, acts[rng.index(5)], rng);
                       layer.bias().value = random_tensor({outn}, rng, 0.1);
                       check_layer(layer, random_tensor({batch, in}, rng), Mode::train, nullptr, rng, fault, stats);
                   }});
    out.push_back({"conv1d", kLayerTol, [](Rng& rng, bool fault, Stats& stats) {
                       auto kernel = 1 + rng.index(4), channels = 1 + rng.index(3), filters = 1 + rng.index(4);
                       auto stride = 1 + rng.index(2), batch = 1 + rng.index(3);
                       auto time = kernel + rng.index(5);
                       Padding pad = rng.bernoulli(0.5) ? Padding::valid : Padding::same;
                       Conv1d layer(kernel, channels, filters, stride, pad, rng);
                       layer.bias().value = random_tensor({filters}, rng, 0.1);
                       check_layer(layer, random_tensor({batch, time, channels}, rng), Mode::train, nullptr,
                                          rng, fault, stats);
                   }});
    out.push_back({"maxpool1d", kDefaultTol, [](Rng& rng, bool fault, Stats& stats) {
                       auto pool = 1 + rng.index(3), batch = 1 + rng.index(3), channels = 1 + rng.index(3);
                       auto time = pool + rng.index(6);
                       MaxPool1d layer(pool);
                       check_layer(layer, random_tensor({batch, time, channels}, rng), Mode::train, nullptr,
                                          rng, fault, stats);
                   }});
    out.push_back({"global_maxpool1d", kDefaultTol, [](Rng& rng, bool fault, Stats& stats) {
                       auto batch = 1 + rng.index(3), channels = 1 + rng.index(4), time = 1 + rng.index(6);
                       GlobalMaxPool1d layer;
                       check_layer(layer, random_tensor({batch, time, channels}, rng), Mode::train, nullptr,
                                          rng, fault, stats);
                   }});
    out.push_back({"batchnorm", kDefaultTol, [](Rng& rng, bool fault, Stats& stats) {
                       auto features = 1 + rng.index(4), batch = 2 + rng.index(5);
                       BatchNorm layer(features);
                       layer.gain().value = random_tensor({features}, rng);
                       layer.bias().value = random_tensor({features}, rng);
                       Tensor x = rng.bernoulli(0.5) ? random_tensor({batch, features}, rng)
                                                     : random_tensor({batch, 1 + rng.index(3), features}, rng);
                       check_layer(layer, std::move(x), Mode::train, nullptr, rng, fault, stats);
                   }});
    out.push_back({"dropout", kDefaultTol, [](Rng& rng, bool fault, Stats& stats) {
                       Dropout layer(rng.uniform(0.0, 0.6));
                       check_layer(layer, random_tensor({1 + rng.index(4), 1 + rng.index(6)}, rng),
                                          Mode::train, nullptr, rng, fault, stats);
                   }});
    out.push_back({"activation", kDefaultTol, [](Rng& rng, bool fault, Stats& stats) {
                       static const Activation acts[] = {Activation::relu, Activation::sigmoid, Activation::tanh,
                                                         Activation::softmax};
                       ActivationLayer layer(acts[rng.index(4)]);
                       check_layer(layer, random_tensor({1 + rng.index(4), 1 + rng.index(5)}, rng),
                                          Mode::train, nullptr, rng, fault, stats);
                   }});
    out.push_back({"lstm", kDefaultTol, [](Rng& rng, bool fault, Stats& stats) {
                       auto in = 1 + rng.index(4), hidden = 1 + rng.index(4);
                       auto batch = 1 + rng.index(3), time = 1 + rng.index(5);
                       auto act = rng.bernoulli(0.5) ? CellActivation::tanh : CellActivation::relu;
                       Lstm layer(in, hidden, act, rng.bernoulli(0.5), rng.bernoulli(0.5), rng);
                       layer.params().bias.value = random_tensor({4 * hidden}, rng, 0.3);
                       Tensor mask = random_mask(batch, time, rng);
                       check_layer(layer, random_tensor({batch, time, in}, rng), Mode::train, &mask, rng,
                                          fault, stats);
                   }});
    out.push_back({"bilstm", kDefaultTol, [](Rng& rng, bool fault, Stats& stats) {
                       auto in = 1 + rng.index(4), hidden = 1 + rng.index(4);
                       auto batch = 1 + rng.index(3), time = 1 + rng.index(5);
                       auto act = rng.bernoulli(0.5) ? CellActivation::tanh : CellActivation::relu;
                       Bilstm layer(in, hidden, act, rng.bernoulli(0.5), rng);
                       Tensor mask = random_mask(batch, time, rng);
                       check_layer(layer, random_tensor({batch, time, in}, rng), Mode::train, &mask, rng,
                                          fault, stats);
                   }});
    out.push_back({"binary_ce", kLossTol,
                   [](Rng& rng, bool fault, Stats& stats) { check_loss(LossKind::binary_ce, rng, fault, stats); }});
    out.push_back({"categorical_ce", kLossTol,
                   [](Rng& rng, bool fault, Stats& stats) { check_loss(LossKind::categorical_ce, rng, fault, stats); }});
    for (auto arch : {models::Architecture::cnn, models::Architecture::lstm, models::Architecture::bilstm}) {
        out.push_back({"model:" + models::to_string(arch), kDefaultTol, [arch, &options](Rng& rng, bool fault, Stats& stats) {
                           check_architecture(arch, options, rng, fault, stats);
                       }});
    }
    return out;
}

}  // namespace

std::vector<std::string> gradcheck_components() {
    std::vector<std::string> names;
    for (const auto& c : components(GradcheckOptions{})) names.push_back(c.name);
    return names;
}

std::vector<ComponentResult> run_gradcheck_suite(const GradcheckOptions& options) {
    std::vector<ComponentResult> results;
    std::uint64_t stream = 0;
    for (const auto& c : components(options)) {
        ++stream;
        if (!options.only.empty() &&
            std::find(options.only.begin(), options.only.end(), c.name) == options.only.end())
            continue;
        ComponentResult r;
        r.name = c.name;
        r.tolerance = c.tolerance;
        const bool fault = std::find(options.inject_fault.begin(), options.inject_fault.end(), c.name) !=
                           options.inject_fault.end();
        Rng rng(mix_seed(options.seed, stream));
        try {
            Stats stats;
            stats.tolerance = c.tolerance;
            for (std::size_t i = 0; i < options.instances; ++i) {
                c.check(rng, fault, stats);
                ++r.instances;
            }
            r.max_rel_error = stats.max_rel;
            r.coordinates = stats.checked;
            r.skipped_kinks = stats.kinks;
            r.violations = stats.violations;
            r.passed = stats.violations == 0 && stats.checked > 0;
        } catch (const std::exception& e) {
            r.error = e.what();
            r.passed = false;
        }
        results.push_back(std::move(r));
    }
    return results;
}

}  // namespace pepclass::nn
