#include "flowguard/windowing.hpp"

#include <algorithm>
#include <numeric>

#include "flowguard/error.hpp"
#include "flowguard/rng.hpp"

namespace flowguard {

std::vector<WindowSample> make_windows(const FeatureMatrix& features, const LabelFrame& labels, int r) {
    if (r <= 0) {
        throw ConfigError("window length r must be >= 1 (got " + std::to_string(r) + ")");
    }
    if (features.rows() != labels.y.size() || features.timestamps != labels.timestamps) {
        throw DataError("make_windows: features and labels for well '" + features.well_id + "' are not aligned");
    }
    const auto w = static_cast<std::size_t>(r);
    const std::size_t f = features.cols();
    std::vector<WindowSample> out;
    if (features.rows() <= w) {
        return out;
    }
    out.reserve(features.rows() - w);
    for (std::size_t t = w; t < features.rows(); ++t) {
        WindowSample s;
        s.well_id = features.well_id;
        s.t = t;
        s.target_date = features.timestamps[t];
        s.y = labels.y[t];
        s.X = Tensor(w, f);
        for (std::size_t i = 0; i < w; ++i) {
            const auto src = features.values.row(t - w + i);
            std::copy(src.begin(), src.end(), s.X.row(i).begin());
        }
        out.push_back(std::move(s));
    }
    return out;
}

std::string_view split_kind_name(SplitKind kind) noexcept { return kind == SplitKind::random ? "random" : "time"; }

void SplitSpec::validate() const {
    if (kind == SplitKind::time && cutoff) {
        return;
    }
    if (!(ratio > 0.0 && ratio < 1.0)) {
        throw ConfigError("split ratio must be in (0, 1)");
    }
}

ShiftReport make_shift_report(std::span<const WindowSample> samples, std::span<const std::size_t> train,
                              std::span<const std::size_t> test) {
    ShiftReport rep;
    auto tally = [&](std::span<const std::size_t> idx, std::size_t& count, std::size_t& pos, double& rate,
                     std::optional<Day>& first, std::optional<Day>& last) {
        count = idx.size();
        for (const std::size_t i : idx) {
            const auto& s = samples[i];
            pos += s.y;
            if (!first || s.target_date < *first) {
                first = s.target_date;
            }
            if (!last || s.target_date > *last) {
                last = s.target_date;
            }
        }
        rate = count == 0 ? 0.0 : static_cast<double>(pos) / static_cast<double>(count);
    };
    tally(train, rep.train_count, rep.train_positives, rep.train_anomaly_rate, rep.train_first, rep.train_last);
    tally(test, rep.test_count, rep.test_positives, rep.test_anomaly_rate, rep.test_first, rep.test_last);
    return rep;
}

SplitResult random_split(std::span<const WindowSample> samples, const SplitSpec& spec) {
    spec.validate();
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    SplitMix64 rng(spec.seed);
    rng.shuffle(std::span<std::size_t>(order));
    const auto n_train = static_cast<std::size_t>(std::llround(spec.ratio * static_cast<double>(order.size())));
    if (n_train == 0 || n_train >= order.size()) {
        throw ConfigError("random split of " + std::to_string(order.size()) + " samples at ratio " +
                          std::to_string(spec.ratio) + " leaves an empty side");
    }
    SplitResult out;
    out.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    out.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
    out.report = make_shift_report(samples, out.train, out.test);
    return out;
}

SplitResult time_split(std::span<const WindowSample> samples, const SplitSpec& spec) {
    spec.validate();
    if (samples.empty()) {
        throw DataError("time split of an empty sample set");
    }
    Day cutoff{};
    if (spec.cutoff) {
        cutoff = *spec.cutoff;
    } else {
        std::vector<Day> dates;
        dates.reserve(samples.size());
        for (const auto& s : samples) {
            dates.push_back(s.target_date);
        }
        std::sort(dates.begin(), dates.end());
        const auto pos = static_cast<std::size_t>(spec.ratio * static_cast<double>(dates.size()));
        cutoff = dates[std::min(pos, dates.size() - 1)];
    }
    SplitResult out;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        (samples[i].target_date < cutoff ? out.train : out.test).push_back(i);
    }
    if (out.train.empty() || out.test.empty()) {
        throw DataError("time split cutoff " + format_day(cutoff) + " is outside the data range (" +
                        (out.train.empty() ? "empty train set" : "empty test set") + ")");
    }
    out.report = make_shift_report(samples, out.train, out.test);
    out.report.cutoff = cutoff;
    return out;
}

SplitResult split_samples(std::span<const WindowSample> samples, const SplitSpec& spec) {
    return spec.kind == SplitKind::random ? random_split(samples, spec) : time_split(samples, spec);
}

}  // namespace flowguard
