#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "pepclass/eval.hpp"

namespace pepclass::eval {

namespace {

void check_inputs(std::span<const Real> scores, std::span<const int> labels) {
    if (scores.size() != labels.size())
        throw EvalError("scores and labels differ in length: " + std::to_string(scores.size()) + " vs " +
                        std::to_string(labels.size()));
    for (auto l : labels)
        if (l != 0 && l != 1) throw EvalError("labels must be 0 or 1, got " + std::to_string(l));
    for (auto s : scores)
        if (!std::isfinite(s)) throw EvalError("non-finite score");
}

}  // namespace

ConfusionCounts confusion(std::span<const Real> scores, std::span<const int> labels, Real threshold) {
    check_inputs(scores, labels);
    ConfusionCounts c;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        bool predicted = scores[i] >= threshold;
        if (labels[i] == 1)
            predicted ? ++c.tp : ++c.fn;
        else
            predicted ? ++c.fp : ++c.tn;
    }
    return c;
}

Metrics metrics(const ConfusionCounts& c) {
    if (c.total() == 0) throw EvalError("metrics of an empty confusion matrix");
    auto tp = static_cast<Real>(c.tp), fp = static_cast<Real>(c.fp);
    auto tn = static_cast<Real>(c.tn), fn = static_cast<Real>(c.fn);
    Metrics m;
    m.acc = (tp + tn) / (tp + tn + fp + fn);
    if (c.tp + c.fn == 0)
        m.sen_degenerate = true;
    else
        m.sen = tp / (tp + fn);
    if (c.tn + c.fp == 0)
        m.spe_degenerate = true;
    else
        m.spe = tn / (tn + fp);
    Real denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
    if (denom == 0)
        m.mcc_degenerate = true;
    else
        m.mcc = (tp * tn - fp * fn) / std::sqrt(denom);
    return m;
}

RocCurve roc_auc(std::span<const Real> scores, std::span<const int> labels) {
    check_inputs(scores, labels);
    std::size_t pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
    std::size_t neg = labels.size() - pos;
    if (pos == 0 || neg == 0) throw EvalError("ROC AUC needs both classes in the labels");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] > scores[b]; });

    RocCurve curve;
    curve.points.push_back({0, 0, std::numeric_limits<Real>::infinity()});
    std::size_t tp = 0, fp = 0;
    for (std::size_t i = 0; i < order.size();) {
        Real s = scores[order[i]];
        while (i < order.size() && scores[order[i]] == s) {
            labels[order[i]] == 1 ? ++tp : ++fp;
            ++i;
        }
        curve.points.push_back({static_cast<Real>(fp) / static_cast<Real>(neg),
                                static_cast<Real>(tp) / static_cast<Real>(pos), s});
    }
    Real area = 0;
    for (std::size_t i = 1; i < curve.points.size(); ++i) {
        const auto& a = curve.points[i - 1];
        const auto& b = curve.points[i];
        area += (b.fpr - a.fpr) * (a.tpr + b.tpr) / 2;
    }
    curve.auc = area;
    return curve;
}

}  // namespace pepclass::eval
