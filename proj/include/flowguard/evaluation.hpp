#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "flowguard/windowing.hpp"

namespace flowguard {

/// Probability that a random positive outscores a random negative, ties
/// counted as one half (midrank Mann-Whitney statistic, exact).
/// Throws UndefinedMetricError when only one class is present.
[[nodiscard]] double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

struct Confusion {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    /// False when nothing was flagged and precision was set to 0 by convention.
    bool precision_defined = true;
    bool recall_defined = true;

    [[nodiscard]] std::size_t total() const noexcept { return tp + fp + tn + fn; }
};

/// Predicts 1 iff score >= tau. Throws ConfigError for tau outside [0, 1].
[[nodiscard]] Confusion confusion_at_threshold(std::span<const double> scores, std::span<const std::uint8_t> labels,
                                               double tau);

struct RocPoint {
    double threshold, fpr, tpr;
};

struct PrPoint {
    double threshold, precision, recall;
};

/// Curves swept over distinct scores in descending order. The ROC curve starts
/// at (0, 0) with a threshold just above the largest score and ends at (1, 1).
/// The PR curve stops at the first threshold reaching full recall.
struct Curves {
    std::vector<RocPoint> roc;
    std::vector<PrPoint> pr;
};

[[nodiscard]] Curves curves(std::span<const double> scores, std::span<const std::uint8_t> labels);
[[nodiscard]] double trapezoid_area(std::span<const RocPoint> roc);

[[nodiscard]] std::string format_roc_table(std::span<const RocPoint> roc);
[[nodiscard]] std::string format_pr_table(std::span<const PrPoint> pr);

struct EvalReport {
    std::string model_name;
    std::string split_kind;
    std::size_t n_samples = 0;
    std::size_t n_positive = 0;
    double threshold = 0.5;
    double roc_auc = 0.0;
    double precision_anomaly = 0.0;
    double recall_anomaly = 0.0;
    double f1_anomaly = 0.0;
    Confusion confusion;
    std::vector<RocPoint> roc_curve;
    std::vector<PrPoint> pr_curve;
    double anomaly_rate_train = 0.0;
    double anomaly_rate_test = 0.0;
    std::uint64_t seed = 0;
    std::string config_fingerprint;

    [[nodiscard]] std::string to_json() const;
    [[nodiscard]] static EvalReport from_json(std::string_view text);
    friend bool operator==(const EvalReport&, const EvalReport&);
};

struct RunScores {
    std::string model_name;
    std::span<const double> scores;
    std::span<const std::uint8_t> labels;
};

[[nodiscard]] EvalReport build_report(const RunScores& run, std::string_view split_kind, const ShiftReport& shift,
                                      double tau, std::uint64_t seed, std::string_view fingerprint);

/// Reports of one comparison must cover the same number of samples per split
/// kind; throws DataError otherwise.
void check_comparable(std::span<const EvalReport> reports);

/// Aligned text table: Split | Model | ROC-AUC | Precision (Anomaly) |
/// Recall (Anomaly) | F1-score, followed by the train/test anomaly rates.
[[nodiscard]] std::string comparison_table(std::span<const EvalReport> reports);

/// Machine-readable comparison holding every report plus recall, precision and
/// AUC summaries keyed by split and model.
[[nodiscard]] std::string comparison_json(std::span<const EvalReport> reports);

}  // namespace flowguard
