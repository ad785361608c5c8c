#include <cmath>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "pepclass/eval.hpp"
#include "pepclass/fileutil.hpp"

namespace pepclass::eval {

using ojson = nlohmann::ordered_json;

namespace {

ojson number(Real v) { return std::isfinite(v) ? ojson(v) : ojson(nullptr); }

Real read_number(const ojson& j, const char* key) {
    const auto& v = j.at(key);
    return v.is_null() ? std::numeric_limits<Real>::quiet_NaN() : v.get<Real>();
}

ojson summary_json(const MetricSummary& s) {
    ojson j;
    j["acc"] = number(s.acc);
    j["sen"] = number(s.sen);
    j["spe"] = number(s.spe);
    j["mcc"] = number(s.mcc);
    j["auc"] = number(s.auc);
    return j;
}

MetricSummary summary_from(const ojson& j) {
    return {read_number(j, "acc"), read_number(j, "sen"), read_number(j, "spe"), read_number(j, "mcc"),
            read_number(j, "auc")};
}

std::string csv_real(Real v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return format_real(v);
}

}  // namespace

std::string report_to_json(const EvalReport& report) {
    ojson j;
    j["config_fingerprint"] = report.config_fingerprint;
    j["dataset"] = report.dataset;
    j["embedding"] = report.embedding;
    j["architecture"] = report.architecture;
    ojson runs = ojson::array();
    for (const auto& r : report.runs) {
        ojson run;
        run["seed"] = r.seed;
        run["acc"] = number(r.failed ? NAN : r.acc);
        run["sen"] = number(r.failed ? NAN : r.sen);
        run["spe"] = number(r.failed ? NAN : r.spe);
        run["mcc"] = number(r.failed ? NAN : r.mcc);
        run["auc"] = number(r.failed ? NAN : r.auc);
        if (r.failed) {
            run["failed"] = true;
            run["error"] = r.error;
        }
        runs.push_back(std::move(run));
    }
    j["runs"] = std::move(runs);
    j["mean"] = summary_json(report.mean);
    j["std"] = summary_json(report.std);
    j["max"] = summary_json(report.max);
    j["failures"] = report.failures;
    return j.dump(2) + "\n";
}

EvalReport report_from_json(std::string_view text) {
    EvalReport report;
    try {
        auto j = ojson::parse(text);
        report.config_fingerprint = j.at("config_fingerprint").get<std::string>();
        report.dataset = j.at("dataset").get<std::string>();
        report.embedding = j.at("embedding").get<std::string>();
        report.architecture = j.at("architecture").get<std::string>();
        for (const auto& run : j.at("runs")) {
            RunResult r;
            r.seed = run.at("seed").get<std::uint64_t>();
            r.acc = read_number(run, "acc");
            r.sen = read_number(run, "sen");
            r.spe = read_number(run, "spe");
            r.mcc = read_number(run, "mcc");
            r.auc = read_number(run, "auc");
            r.failed = run.value("failed", false);
            r.error = run.value("error", std::string{});
            report.runs.push_back(std::move(r));
        }
        report.mean = summary_from(j.at("mean"));
        report.std = summary_from(j.at("std"));
        if (j.contains("max")) report.max = summary_from(j.at("max"));
        report.failures = j.at("failures").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
        throw EvalError(std::string("malformed report JSON: ") + e.what());
    }
    return report;
}

std::string report_to_csv(const EvalReport& report) {
    std::ostringstream os;
    os << "seed,acc,sen,spe,mcc,auc\n";
    for (const auto& r : report.runs) {
        os << r.seed;
        for (Real v : {r.acc, r.sen, r.spe, r.mcc, r.auc}) os << ',' << (r.failed ? "nan" : csv_real(v));
        os << '\n';
    }
    return os.str();
}

std::string roc_to_csv(const RocCurve& curve) {
    std::ostringstream os;
    os << "threshold,fpr,tpr\n";
    for (const auto& p : curve.points) os << csv_real(p.threshold) << ',' << csv_real(p.fpr) << ',' << csv_real(p.tpr) << '\n';
    return os.str();
}

std::string history_to_csv(const models::TrainHistory& history) {
    std::ostringstream os;
    os << "epoch,train_loss,val_loss\n";
    for (std::size_t e = 0; e < history.train_loss.size(); ++e) {
        Real val = e < history.val_loss.size() ? history.val_loss[e] : std::numeric_limits<Real>::quiet_NaN();
        os << e + 1 << ',' << csv_real(history.train_loss[e]) << ',' << csv_real(val) << '\n';
    }
    return os.str();
}

RocCurve pooled_roc(const EvalReport& report) {
    std::vector<Real> scores;
    std::vector<int> labels;
    for (const auto& r : report.runs) {
        if (r.failed) continue;
        scores.insert(scores.end(), r.scores.begin(), r.scores.end());
        labels.insert(labels.end(), r.labels.begin(), r.labels.end());
    }
    return roc_auc(scores, labels);
}

void export_report(const EvalReport& report, const std::filesystem::path& path, ReportFormat format) {
    write_file_atomic(path, format == ReportFormat::json ? report_to_json(report) : report_to_csv(report));
    auto dir = path.parent_path();
    auto stem = path.stem().string();
    bool any_scores = false;
    for (std::size_t r = 0; r < report.runs.size(); ++r) {
        const auto& run = report.runs[r];
        if (!run.history.train_loss.empty())
            write_file_atomic(dir / (stem + "_run" + std::to_string(r) + "_loss.csv"), history_to_csv(run.history));
        if (run.failed || run.roc.points.empty()) continue;
        any_scores = true;
        write_file_atomic(dir / (stem + "_run" + std::to_string(r) + "_roc.csv"), roc_to_csv(run.roc));
    }
    if (any_scores) write_file_atomic(dir / (stem + "_roc.csv"), roc_to_csv(pooled_roc(report)));
}

}  // namespace pepclass::eval
