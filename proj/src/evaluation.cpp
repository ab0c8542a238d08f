#include "flowguard/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "flowguard/csv.hpp"
#include "flowguard/error.hpp"

namespace flowguard {

namespace {

using nlohmann::json;

void check_inputs(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    if (scores.size() != labels.size()) {
        throw DataError("metric inputs differ in length: " + std::to_string(scores.size()) + " scores, " +
                        std::to_string(labels.size()) + " labels");
    }
    for (const double s : scores) {
        if (!std::isfinite(s)) {
            throw NumericError("metric input contains a non-finite score");
        }
    }
}

std::pair<std::size_t, std::size_t> class_counts(std::span<const std::uint8_t> labels) {
    std::size_t pos = 0;
    for (const auto y : labels) {
        pos += y != 0 ? 1 : 0;
    }
    return {pos, labels.size() - pos};
}

void require_both(std::size_t pos, std::size_t neg) {
    if (pos == 0 || neg == 0) {
        throw UndefinedMetricError("ROC metrics need both classes (positives " + std::to_string(pos) +
                                   ", negatives " + std::to_string(neg) + ")");
    }
}

std::vector<std::size_t> order_descending(std::span<const double> scores) {
    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    return idx;
}

}  // namespace

double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    check_inputs(scores, labels);
    const auto [pos, neg] = class_counts(labels);
    require_both(pos, neg);
    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    // Twice the rank sum of positives keeps midranks integral.
    std::uint64_t twice_rank_sum = 0;
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        std::size_t group_pos = 0;
        while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
            group_pos += labels[idx[j]] != 0 ? 1 : 0;
            ++j;
        }
        // ranks i+1 .. j, midrank (i + 1 + j) / 2
        twice_rank_sum += group_pos * (i + 1 + j);
        i = j;
    }
    const auto twice_u = static_cast<double>(twice_rank_sum - pos * (pos + 1));
    return twice_u / (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
}

Confusion confusion_at_threshold(std::span<const double> scores, std::span<const std::uint8_t> labels, double tau) {
    check_inputs(scores, labels);
    if (!(tau >= 0.0 && tau <= 1.0)) {
        throw ConfigError("decision threshold must lie in [0, 1]");
    }
    Confusion c;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool flagged = scores[i] >= tau;
        if (labels[i] != 0) {
            (flagged ? c.tp : c.fn) += 1;
        } else {
            (flagged ? c.fp : c.tn) += 1;
        }
    }
    c.precision_defined = c.tp + c.fp > 0;
    c.recall_defined = c.tp + c.fn > 0;
    c.precision = c.precision_defined ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 0.0;
    c.recall = c.recall_defined ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 0.0;
    c.f1 = c.precision + c.recall > 0.0 ? 2.0 * c.precision * c.recall / (c.precision + c.recall) : 0.0;
    return c;
}

Curves curves(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    check_inputs(scores, labels);
    const auto [pos, neg] = class_counts(labels);
    require_both(pos, neg);
    const auto idx = order_descending(scores);
    Curves out;
    const double top = scores[idx.front()];
    out.roc.push_back({std::nextafter(top, std::numeric_limits<double>::infinity()), 0.0, 0.0});
    std::size_t tp = 0, fp = 0;
    bool pr_done = false;
    for (std::size_t i = 0; i < idx.size();) {
        const double s = scores[idx[i]];
        while (i < idx.size() && scores[idx[i]] == s) {
            (labels[idx[i]] != 0 ? tp : fp) += 1;
            ++i;
        }
        const double tpr = static_cast<double>(tp) / static_cast<double>(pos);
        out.roc.push_back({s, static_cast<double>(fp) / static_cast<double>(neg), tpr});
        if (!pr_done) {
            out.pr.push_back({s, static_cast<double>(tp) / static_cast<double>(tp + fp), tpr});
            pr_done = tp == pos;
        }
    }
    return out;
}

double trapezoid_area(std::span<const RocPoint> roc) {
    double area = 0.0;
    for (std::size_t i = 1; i < roc.size(); ++i) {
        area += (roc[i].fpr - roc[i - 1].fpr) * (roc[i].tpr + roc[i - 1].tpr) / 2.0;
    }
    return area;
}

std::string format_roc_table(std::span<const RocPoint> roc) {
    std::string out = "threshold,fpr,tpr\n";
    for (const auto& p : roc) {
        out += format_number(p.threshold) + ',' + format_number(p.fpr) + ',' + format_number(p.tpr) + '\n';
    }
    return out;
}

std::string format_pr_table(std::span<const PrPoint> pr) {
    std::string out = "threshold,precision,recall\n";
    for (const auto& p : pr) {
        out += format_number(p.threshold) + ',' + format_number(p.precision) + ',' + format_number(p.recall) + '\n';
    }
    return out;
}

// ---- reports -------------------------------------------------------------------

namespace {

json confusion_json(const Confusion& c) {
    return json{{"tp", c.tp},
                {"fp", c.fp},
                {"tn", c.tn},
                {"fn", c.fn},
                {"precision", c.precision},
                {"recall", c.recall},
                {"f1", c.f1},
                {"precision_defined", c.precision_defined},
                {"recall_defined", c.recall_defined}};
}

json report_json(const EvalReport& r) {
    json roc = json::array();
    for (const auto& p : r.roc_curve) {
        roc.push_back(json::array({p.threshold, p.fpr, p.tpr}));
    }
    json pr = json::array();
    for (const auto& p : r.pr_curve) {
        pr.push_back(json::array({p.threshold, p.precision, p.recall}));
    }
    return json{{"model_name", r.model_name},
                {"split_kind", r.split_kind},
                {"n_samples", r.n_samples},
                {"n_positive", r.n_positive},
                {"threshold", r.threshold},
                {"roc_auc", r.roc_auc},
                {"precision_anomaly", r.precision_anomaly},
                {"recall_anomaly", r.recall_anomaly},
                {"f1_anomaly", r.f1_anomaly},
                {"confusion", confusion_json(r.confusion)},
                {"roc_curve", roc},
                {"pr_curve", pr},
                {"anomaly_rate_train", r.anomaly_rate_train},
                {"anomaly_rate_test", r.anomaly_rate_test},
                {"seed", r.seed},
                {"config_fingerprint", r.config_fingerprint}};
}

EvalReport report_from(const json& j) {
    EvalReport r;
    r.model_name = j.at("model_name").get<std::string>();
    r.split_kind = j.at("split_kind").get<std::string>();
    r.n_samples = j.at("n_samples").get<std::size_t>();
    r.n_positive = j.at("n_positive").get<std::size_t>();
    r.threshold = j.at("threshold").get<double>();
    r.roc_auc = j.at("roc_auc").get<double>();
    r.precision_anomaly = j.at("precision_anomaly").get<double>();
    r.recall_anomaly = j.at("recall_anomaly").get<double>();
    r.f1_anomaly = j.at("f1_anomaly").get<double>();
    const auto& c = j.at("confusion");
    r.confusion.tp = c.at("tp").get<std::size_t>();
    r.confusion.fp = c.at("fp").get<std::size_t>();
    r.confusion.tn = c.at("tn").get<std::size_t>();
    r.confusion.fn = c.at("fn").get<std::size_t>();
    r.confusion.precision = c.at("precision").get<double>();
    r.confusion.recall = c.at("recall").get<double>();
    r.confusion.f1 = c.at("f1").get<double>();
    r.confusion.precision_defined = c.at("precision_defined").get<bool>();
    r.confusion.recall_defined = c.at("recall_defined").get<bool>();
    for (const auto& p : j.at("roc_curve")) {
        r.roc_curve.push_back({p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>()});
    }
    for (const auto& p : j.at("pr_curve")) {
        r.pr_curve.push_back({p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>()});
    }
    r.anomaly_rate_train = j.at("anomaly_rate_train").get<double>();
    r.anomaly_rate_test = j.at("anomaly_rate_test").get<double>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.config_fingerprint = j.at("config_fingerprint").get<std::string>();
    return r;
}

}  // namespace

std::string EvalReport::to_json() const { return report_json(*this).dump(2) + '\n'; }

EvalReport EvalReport::from_json(std::string_view text) {
    try {
        return report_from(json::parse(text));
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed metrics document: ") + e.what());
    }
}

bool operator==(const EvalReport& a, const EvalReport& b) { return report_json(a) == report_json(b); }

EvalReport build_report(const RunScores& run, std::string_view split_kind, const ShiftReport& shift, double tau,
                        std::uint64_t seed, std::string_view fingerprint) {
    EvalReport r;
    r.model_name = run.model_name;
    r.split_kind = std::string(split_kind);
    r.n_samples = run.scores.size();
    r.n_positive = class_counts(run.labels).first;
    r.threshold = tau;
    r.roc_auc = roc_auc(run.scores, run.labels);
    r.confusion = confusion_at_threshold(run.scores, run.labels, tau);
    r.precision_anomaly = r.confusion.precision;
    r.recall_anomaly = r.confusion.recall;
    r.f1_anomaly = r.confusion.f1;
    auto c = curves(run.scores, run.labels);
    r.roc_curve = std::move(c.roc);
    r.pr_curve = std::move(c.pr);
    r.anomaly_rate_train = shift.train_anomaly_rate;
    r.anomaly_rate_test = shift.test_anomaly_rate;
    r.seed = seed;
    r.config_fingerprint = std::string(fingerprint);
    return r;
}

void check_comparable(std::span<const EvalReport> reports) {
    std::map<std::string, std::size_t> counts;
    for (const auto& r : reports) {
        const auto [it, inserted] = counts.emplace(r.split_kind, r.n_samples);
        if (!inserted && it->second != r.n_samples) {
            throw DataError("comparison mixes sample sets on the " + r.split_kind + " split: '" + r.model_name +
                            "' has " + std::to_string(r.n_samples) + " samples, expected " +
                            std::to_string(it->second));
        }
    }
}

namespace {

std::string fixed3(double v) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(3) << v;
    return s.str();
}

}  // namespace

std::string comparison_table(std::span<const EvalReport> reports) {
    check_comparable(reports);
    const std::vector<std::string> header = {"Split", "Model", "ROC-AUC", "Precision (Anomaly)", "Recall (Anomaly)",
                                             "F1-score"};
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : reports) {
        rows.push_back({r.split_kind, r.model_name, fixed3(r.roc_auc), fixed3(r.precision_anomaly),
                        fixed3(r.recall_anomaly), fixed3(r.f1_anomaly)});
    }
    // Widths in code points; model names may contain a multi-byte dash.
    auto width = [](const std::string& s) {
        return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [](char c) {
            return (static_cast<unsigned char>(c) & 0xC0) != 0x80;
        }));
    };
    std::vector<std::size_t> w(header.size());
    for (std::size_t c = 0; c < header.size(); ++c) {
        w[c] = width(header[c]);
        for (const auto& row : rows) {
            w[c] = std::max(w[c], width(row[c]));
        }
    }
    std::string out;
    auto emit = [&](const std::vector<std::string>& row) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            out += row[c];
            if (c + 1 < row.size()) {
                out += std::string(w[c] - width(row[c]) + 2, ' ');
            }
        }
        out += '\n';
    };
    emit(header);
    std::size_t total = 0;
    for (const auto x : w) {
        total += x + 2;
    }
    out += std::string(total - 2, '-') + '\n';
    for (const auto& row : rows) {
        emit(row);
    }
    std::map<std::string, std::pair<double, double>> rates;
    for (const auto& r : reports) {
        rates.emplace(r.split_kind, std::make_pair(r.anomaly_rate_train, r.anomaly_rate_test));
    }
    out += '\n';
    for (const auto& [split, rate] : rates) {
        out += "anomaly rate (" + split + " split): train " + fixed3(rate.first) + ", test " + fixed3(rate.second) +
               '\n';
    }
    out += "threshold: " + (reports.empty() ? std::string("0.5") : format_number(reports.front().threshold)) + '\n';
    return out;
}

std::string comparison_json(std::span<const EvalReport> reports) {
    check_comparable(reports);
    json rows = json::array();
    json summary = json::object();
    for (const auto& r : reports) {
        json row = report_json(r);
        row.erase("roc_curve");
        row.erase("pr_curve");
        rows.push_back(std::move(row));
        summary["recall"][r.split_kind][r.model_name] = r.recall_anomaly;
        summary["precision"][r.split_kind][r.model_name] = r.precision_anomaly;
        summary["roc_auc"][r.split_kind][r.model_name] = r.roc_auc;
    }
    return json{{"rows", rows}, {"summary", summary}}.dump(2) + '\n';
}

}  // namespace flowguard
