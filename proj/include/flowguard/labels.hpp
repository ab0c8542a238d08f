#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "flowguard/date.hpp"
#include "flowguard/features.hpp"

namespace flowguard {

/// Thresholds of the three heuristic labeling rules.
struct RuleConfig {
    /// Production drop: oil below (1 - drop_frac) of the trailing mean.
    double drop_frac = 0.40;
    /// Days with fewer on-stream hours are treated as planned downtime and never labeled.
    double min_onstream_hrs = 12.0;
    double zscore_flow = 2.0;
    double zscore_pressure = 2.0;
    /// GOR deviation threshold in rolling standard deviations.
    double gor_m = 3.0;
    int zscore_window = 30;

    /// Throws ConfigError for non-positive thresholds or drop_frac outside (0, 1).
    void validate() const;
};

using RuleMask = std::vector<std::uint8_t>;

/// Weak labels for one well: y[t] = 1 iff any rule fired at t. The rule mask
/// is kept for audit (T x K, row-major).
struct LabelFrame {
    std::string well_id;
    std::vector<Day> timestamps;
    std::vector<std::uint8_t> y;
    std::vector<std::string> rule_names;
    std::vector<std::uint8_t> rule_mask;

    [[nodiscard]] std::size_t rule_count() const noexcept { return rule_names.size(); }
    [[nodiscard]] bool fired(std::size_t t, std::size_t k) const { return rule_mask[t * rule_names.size() + k] != 0; }
};

/// Fires when oil[t] < (1 - drop_frac) * oil_rmean[t-1], oil_rmean[t-1] > 0
/// and on_stream_hrs[t] >= min_onstream_hrs.
[[nodiscard]] RuleMask rule_production_drop(const FeatureMatrix& features, const RuleConfig& cfg);

/// Fires when z(d_oil_vol[t]) <= -zscore_flow and z(d_wellhead_pressure[t]) >=
/// zscore_pressure on an on-stream day. z-scores use the preceding
/// zscore_window deltas (t=0 excluded); zero variance gives z = 0.
[[nodiscard]] RuleMask rule_pressure_flow(const FeatureMatrix& features, const RuleConfig& cfg);

/// Fires when |gor[t] - gor_rmean[t-1]| > gor_m * gor_rstd[t-1] with
/// gor_rstd[t-1] > 0 on an on-stream day.
[[nodiscard]] RuleMask rule_gor_deviation(const FeatureMatrix& features, const RuleConfig& cfg);

/// y[t] = OR over masks. Throws DataError when mask lengths differ.
[[nodiscard]] LabelFrame aggregate_labels(std::span<const RuleMask> masks, std::vector<std::string> rule_names = {});

/// Runs the three rules on an unstandardized feature matrix.
[[nodiscard]] LabelFrame weak_labels(const FeatureMatrix& features, const RuleConfig& cfg);

/// Audit table: well_id, date, y, one column per rule.
[[nodiscard]] std::string format_label_table(std::span<const LabelFrame> frames);
[[nodiscard]] std::vector<LabelFrame> parse_label_table(std::string_view text);

}  // namespace flowguard
