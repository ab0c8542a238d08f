#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flowguard/date.hpp"
#include "flowguard/features.hpp"
#include "flowguard/labels.hpp"
#include "flowguard/tensor.hpp"

namespace flowguard {

/// Causal training example: X holds feature rows t-r .. t-1 (r x F) and y is
/// the weak label at t.
struct WindowSample {
    std::string well_id;
    std::size_t t = 0;
    Day target_date{};
    Tensor X;
    std::uint8_t y = 0;
};

/// One sample per t in [r, T). Throws ConfigError for r <= 0 and DataError when
/// features and labels are not aligned.
[[nodiscard]] std::vector<WindowSample> make_windows(const FeatureMatrix& features, const LabelFrame& labels, int r);

enum class SplitKind { random, time };

[[nodiscard]] std::string_view split_kind_name(SplitKind kind) noexcept;

struct SplitSpec {
    SplitKind kind = SplitKind::time;
    /// Train fraction. For time splits without a cutoff, the cutoff is the
    /// target date at this quantile of all samples.
    double ratio = 0.7;
    std::optional<Day> cutoff;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Counts and anomaly rates on each side of a split.
struct ShiftReport {
    std::size_t train_count = 0;
    std::size_t test_count = 0;
    std::size_t train_positives = 0;
    std::size_t test_positives = 0;
    double train_anomaly_rate = 0.0;
    double test_anomaly_rate = 0.0;
    std::optional<Day> train_first, train_last, test_first, test_last;
    std::optional<Day> cutoff;
};

/// Indices into the sample list; disjoint and together exhaustive.
struct SplitResult {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
    ShiftReport report;
};

[[nodiscard]] ShiftReport make_shift_report(std::span<const WindowSample> samples, std::span<const std::size_t> train,
                                            std::span<const std::size_t> test);

/// Seeded Fisher-Yates shuffle of sample indices, then a cut at round(ratio * n).
/// Train indices keep the shuffled order. Throws ConfigError if either side is empty.
[[nodiscard]] SplitResult random_split(std::span<const WindowSample> samples, const SplitSpec& spec);

/// Train = target date < cutoff, test = the rest; both keep input order.
/// Throws DataError when the cutoff leaves either side empty.
[[nodiscard]] SplitResult time_split(std::span<const WindowSample> samples, const SplitSpec& spec);

[[nodiscard]] SplitResult split_samples(std::span<const WindowSample> samples, const SplitSpec& spec);

}  // namespace flowguard
