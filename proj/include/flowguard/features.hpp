#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "flowguard/date.hpp"
#include "flowguard/ingest.hpp"
#include "flowguard/tensor.hpp"

namespace flowguard {

/// Continuous features are standardized; indicator (0/1) columns pass through.
enum class ColumnKind : std::uint8_t { continuous, indicator };

struct FeatureConfig {
    /// Rolling window length k for rolling mean/std.
    int rolling_window = 7;
    /// Stabilizer in the GOR and water-cut denominators.
    double epsilon = 1e-6;
    std::vector<Variable> raw_variables{kAllVariables.begin(), kAllVariables.end()};
    /// Inputs for rolling statistics: variable names or "gor" / "water_cut".
    std::vector<std::string> rolling_inputs = {"oil_vol", "wellhead_pressure", "gor"};
    bool include_ratios = true;
    /// Variables with a missingness indicator column. Fixed per dataset so that
    /// every well shares one registry.
    std::vector<Variable> indicator_variables;
};

/// Ordered, unique feature names with their kinds.
struct FeatureRegistry {
    std::vector<std::string> names;
    std::vector<ColumnKind> kinds;

    [[nodiscard]] std::size_t size() const noexcept { return names.size(); }
    [[nodiscard]] std::optional<std::size_t> find(std::string_view name) const;
    /// Throws RegistryError naming the feature.
    [[nodiscard]] std::size_t require(std::string_view name) const;

    friend bool operator==(const FeatureRegistry&, const FeatureRegistry&) = default;
};

/// Registry order: raw variables, their deltas, delta_valid, gor and
/// water_cut, rolling mean/std pairs, miss_* indicators.
[[nodiscard]] FeatureRegistry feature_registry(const FeatureConfig& cfg);
/// Kind implied by a registry name (miss_* and delta_valid are indicators).
[[nodiscard]] ColumnKind column_kind_for(std::string_view name) noexcept;

struct FeatureStats {
    std::vector<double> mean;
    std::vector<double> std;
};

/// Per-well T x F engineered feature table.
struct FeatureMatrix {
    std::string well_id;
    std::vector<Day> timestamps;
    FeatureRegistry registry;
    Tensor values;
    std::optional<FeatureStats> train_stats;

    [[nodiscard]] std::size_t rows() const noexcept { return values.rows(); }
    [[nodiscard]] std::size_t cols() const noexcept { return values.cols(); }
    [[nodiscard]] std::vector<double> column(std::string_view name) const;
};

struct DeltaColumns {
    std::vector<double> delta;
    /// 0 at the first step (no predecessor), 1 elsewhere.
    std::vector<std::uint8_t> valid;
};

/// delta[t] = x[t] - x[t-1], delta[0] = 0.
[[nodiscard]] DeltaColumns compute_deltas(std::span<const double> x);

struct RollingStats {
    std::vector<double> mean;
    std::vector<double> std;
};

/// Trailing mean and population std over windows of length k ending at t;
/// windows are truncated to the available prefix for t < k.
/// Throws ConfigError when k <= 0.
[[nodiscard]] RollingStats rolling_stats(std::span<const double> x, int k);

struct RatioColumns {
    std::vector<double> gor;
    std::vector<double> water_cut;
};

/// GOR = gas / (oil + eps), water cut = water / (oil + water + eps).
/// Throws DataError for negative rates or mismatched lengths, ConfigError for eps <= 0.
[[nodiscard]] RatioColumns production_ratios(std::span<const double> oil, std::span<const double> gas,
                                             std::span<const double> water, double epsilon = 1e-6);

/// Builds the unstandardized feature matrix of an imputed series.
[[nodiscard]] FeatureMatrix assemble_feature_matrix(const WellSeries& series, const FeatureConfig& cfg);

/// Per-feature mean and population std over rows where mask is true.
/// Throws DataError when the mask selects no rows.
[[nodiscard]] FeatureStats compute_feature_stats(const FeatureMatrix& matrix, std::span<const std::uint8_t> mask);
/// z = (x - mean) / max(std, 1e-8) on continuous columns.
[[nodiscard]] FeatureMatrix apply_feature_stats(const FeatureMatrix& matrix, const FeatureStats& stats);
/// Leakage-safe standardization: statistics come from the masked rows only.
[[nodiscard]] FeatureMatrix standardize(const FeatureMatrix& matrix, std::span<const std::uint8_t> train_row_mask);

/// Delimited export of several wells: well_id, date, then the registry.
[[nodiscard]] std::string format_feature_table(std::span<const FeatureMatrix> matrices);
[[nodiscard]] std::vector<FeatureMatrix> parse_feature_table(std::string_view text);

}  // namespace flowguard
