#include "flowguard/labels.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "flowguard/csv.hpp"
#include "flowguard/error.hpp"

namespace flowguard {

void RuleConfig::validate() const {
    if (!(drop_frac > 0.0 && drop_frac < 1.0)) {
        throw ConfigError("rules.drop_frac must be in (0, 1)");
    }
    if (!(min_onstream_hrs > 0.0) || !(zscore_flow > 0.0) || !(zscore_pressure > 0.0) || !(gor_m > 0.0)) {
        throw ConfigError("rule thresholds must be > 0");
    }
    if (zscore_window <= 0) {
        throw ConfigError("rules.zscore_window must be >= 1");
    }
}

namespace {

bool on_stream(const std::vector<double>& hours, std::size_t t, const RuleConfig& cfg) {
    return hours[t] >= cfg.min_onstream_hrs;
}

// z-score of x[t] against the preceding `window` values, skipping index 0
// (the delta convention value).
std::vector<double> trailing_zscores(const std::vector<double>& x, int window) {
    std::vector<double> z(x.size(), 0.0);
    const auto w = static_cast<std::size_t>(window);
    for (std::size_t t = 2; t < x.size(); ++t) {
        const std::size_t begin = std::max<std::size_t>(1, t >= w ? t - w : 0);
        const auto n = static_cast<double>(t - begin);
        if (n < 2) {
            continue;
        }
        double s = 0.0;
        for (std::size_t j = begin; j < t; ++j) {
            s += x[j];
        }
        const double mu = s / n;
        double ss = 0.0;
        for (std::size_t j = begin; j < t; ++j) {
            ss += (x[j] - mu) * (x[j] - mu);
        }
        const double sd = std::sqrt(ss / n);
        if (sd > 0.0) {
            z[t] = (x[t] - mu) / sd;
        }
    }
    return z;
}

}  // namespace

RuleMask rule_production_drop(const FeatureMatrix& features, const RuleConfig& cfg) {
    const auto oil = features.column("oil_vol");
    const auto oil_mean = features.column("oil_vol_rmean");
    const auto hours = features.column("on_stream_hrs");
    RuleMask mask(features.rows(), 0);
    for (std::size_t t = 1; t < mask.size(); ++t) {
        const double ref = oil_mean[t - 1];
        mask[t] = static_cast<std::uint8_t>(ref > 0.0 && on_stream(hours, t, cfg) &&
                                            oil[t] < (1.0 - cfg.drop_frac) * ref);
    }
    return mask;
}

RuleMask rule_pressure_flow(const FeatureMatrix& features, const RuleConfig& cfg) {
    const auto d_oil = features.column("d_oil_vol");
    const auto d_whp = features.column("d_wellhead_pressure");
    const auto hours = features.column("on_stream_hrs");
    const auto z_oil = trailing_zscores(d_oil, cfg.zscore_window);
    const auto z_whp = trailing_zscores(d_whp, cfg.zscore_window);
    RuleMask mask(features.rows(), 0);
    for (std::size_t t = 0; t < mask.size(); ++t) {
        mask[t] = static_cast<std::uint8_t>(on_stream(hours, t, cfg) && z_oil[t] <= -cfg.zscore_flow &&
                                            z_whp[t] >= cfg.zscore_pressure);
    }
    return mask;
}

RuleMask rule_gor_deviation(const FeatureMatrix& features, const RuleConfig& cfg) {
    const auto gor = features.column("gor");
    const auto gor_mean = features.column("gor_rmean");
    const auto gor_std = features.column("gor_rstd");
    const auto hours = features.column("on_stream_hrs");
    RuleMask mask(features.rows(), 0);
    for (std::size_t t = 1; t < mask.size(); ++t) {
        const double sd = gor_std[t - 1];
        mask[t] = static_cast<std::uint8_t>(sd > 0.0 && on_stream(hours, t, cfg) &&
                                            std::abs(gor[t] - gor_mean[t - 1]) > cfg.gor_m * sd);
    }
    return mask;
}

LabelFrame aggregate_labels(std::span<const RuleMask> masks, std::vector<std::string> rule_names) {
    LabelFrame frame;
    const std::size_t n = masks.empty() ? 0 : masks.front().size();
    for (const auto& m : masks) {
        if (m.size() != n) {
            throw DataError("aggregate_labels: rule masks have different lengths");
        }
    }
    if (rule_names.empty()) {
        for (std::size_t k = 0; k < masks.size(); ++k) {
            rule_names.push_back("rule_" + std::to_string(k));
        }
    }
    if (rule_names.size() != masks.size()) {
        throw DataError("aggregate_labels: rule name count does not match mask count");
    }
    const std::size_t k = masks.size();
    frame.rule_names = std::move(rule_names);
    frame.y.assign(n, 0);
    frame.rule_mask.assign(n * k, 0);
    for (std::size_t t = 0; t < n; ++t) {
        for (std::size_t r = 0; r < k; ++r) {
            const std::uint8_t bit = masks[r][t] != 0 ? 1 : 0;
            frame.rule_mask[t * k + r] = bit;
            frame.y[t] = static_cast<std::uint8_t>(frame.y[t] | bit);
        }
    }
    return frame;
}

LabelFrame weak_labels(const FeatureMatrix& features, const RuleConfig& cfg) {
    cfg.validate();
    const std::vector<RuleMask> masks = {
        rule_production_drop(features, cfg),
        rule_pressure_flow(features, cfg),
        rule_gor_deviation(features, cfg),
    };
    LabelFrame frame = aggregate_labels(masks, {"production_drop", "pressure_flow", "gor_deviation"});
    frame.well_id = features.well_id;
    frame.timestamps = features.timestamps;
    return frame;
}

std::string format_label_table(std::span<const LabelFrame> frames) {
    std::ostringstream out;
    out << "well_id,date,y";
    if (!frames.empty()) {
        for (const auto& n : frames.front().rule_names) {
            out << ',' << n;
        }
    }
    out << '\n';
    for (const auto& f : frames) {
        for (std::size_t t = 0; t < f.y.size(); ++t) {
            out << escape_cell(f.well_id) << ',' << format_day(f.timestamps[t]) << ',' << int(f.y[t]);
            for (std::size_t k = 0; k < f.rule_count(); ++k) {
                out << ',' << int(f.rule_mask[t * f.rule_count() + k]);
            }
            out << '\n';
        }
    }
    return out.str();
}

std::vector<LabelFrame> parse_label_table(std::string_view text) {
    const Table table = parse_table(text);
    if (table.header.size() < 3 || table.header[0] != "well_id" || table.header[1] != "date" ||
        table.header[2] != "y") {
        throw SchemaError("label table must start with well_id,date,y");
    }
    const std::vector<std::string> rules(table.header.begin() + 3, table.header.end());
    std::vector<LabelFrame> out;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        if (row.size() != table.header.size()) {
            throw RowError(r, "expected " + std::to_string(table.header.size()) + " cells");
        }
        if (out.empty() || out.back().well_id != row[0]) {
            out.emplace_back();
            out.back().well_id = row[0];
            out.back().rule_names = rules;
        }
        auto& f = out.back();
        const auto day = parse_day(row[1]);
        if (!day) {
            throw RowError(r, "unparseable date '" + row[1] + "'");
        }
        f.timestamps.push_back(*day);
        f.y.push_back(row[2] == "1" ? 1 : 0);
        for (std::size_t k = 0; k < rules.size(); ++k) {
            f.rule_mask.push_back(row[3 + k] == "1" ? 1 : 0);
        }
    }
    return out;
}

}  // namespace flowguard
