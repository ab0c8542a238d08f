#include "flowguard/features.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "flowguard/csv.hpp"
#include "flowguard/error.hpp"

namespace flowguard {

namespace {

constexpr double kMinStd = 1e-8;

std::string delta_name(Variable v) { return "d_" + std::string(variable_name(v)); }
std::string mean_name(std::string_view input) { return std::string(input) + "_rmean"; }
std::string std_name(std::string_view input) { return std::string(input) + "_rstd"; }
std::string indicator_name(Variable v) { return "miss_" + std::string(variable_name(v)); }

bool is_ratio_name(std::string_view s) { return s == "gor" || s == "water_cut"; }

}  // namespace

std::optional<std::size_t> FeatureRegistry::find(std::string_view name) const {
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(it - names.begin());
}

std::size_t FeatureRegistry::require(std::string_view name) const {
    if (auto i = find(name)) {
        return *i;
    }
    throw RegistryError("feature '" + std::string(name) + "' is not in the registry");
}

ColumnKind column_kind_for(std::string_view name) noexcept {
    return (name == "delta_valid" || name.starts_with("miss_")) ? ColumnKind::indicator : ColumnKind::continuous;
}

FeatureRegistry feature_registry(const FeatureConfig& cfg) {
    FeatureRegistry reg;
    auto push = [&](std::string name) {
        if (reg.find(name)) {
            throw ConfigError("feature '" + name + "' listed twice");
        }
        reg.kinds.push_back(column_kind_for(name));
        reg.names.push_back(std::move(name));
    };
    for (const Variable v : cfg.raw_variables) {
        push(std::string(variable_name(v)));
    }
    for (const Variable v : cfg.raw_variables) {
        push(delta_name(v));
    }
    if (!cfg.raw_variables.empty()) {
        push("delta_valid");
    }
    if (cfg.include_ratios) {
        push("gor");
        push("water_cut");
    }
    for (const auto& input : cfg.rolling_inputs) {
        if (!is_ratio_name(input) && !variable_from_name(input)) {
            throw ConfigError("unknown rolling input '" + input + "'");
        }
        push(mean_name(input));
        push(std_name(input));
    }
    for (const Variable v : cfg.indicator_variables) {
        push(indicator_name(v));
    }
    return reg;
}

std::vector<double> FeatureMatrix::column(std::string_view name) const {
    const std::size_t c = registry.require(name);
    std::vector<double> out(rows());
    for (std::size_t t = 0; t < rows(); ++t) {
        out[t] = values(t, c);
    }
    return out;
}

DeltaColumns compute_deltas(std::span<const double> x) {
    DeltaColumns out{std::vector<double>(x.size(), 0.0), std::vector<std::uint8_t>(x.size(), 1)};
    if (!x.empty()) {
        out.valid[0] = 0;
    }
    for (std::size_t t = 1; t < x.size(); ++t) {
        out.delta[t] = x[t] - x[t - 1];
    }
    return out;
}

RollingStats rolling_stats(std::span<const double> x, int k) {
    if (k <= 0) {
        throw ConfigError("rolling window k must be >= 1 (got " + std::to_string(k) + ")");
    }
    const std::size_t w = static_cast<std::size_t>(k);
    RollingStats out{std::vector<double>(x.size()), std::vector<double>(x.size())};
    for (std::size_t t = 0; t < x.size(); ++t) {
        const std::size_t begin = t + 1 >= w ? t + 1 - w : 0;
        const auto n = static_cast<double>(t + 1 - begin);
        double s = 0.0;
        for (std::size_t j = begin; j <= t; ++j) {
            s += x[j];
        }
        const double mu = s / n;
        double ss = 0.0;
        for (std::size_t j = begin; j <= t; ++j) {
            ss += (x[j] - mu) * (x[j] - mu);
        }
        out.mean[t] = mu;
        out.std[t] = std::sqrt(ss / n);
    }
    return out;
}

RatioColumns production_ratios(std::span<const double> oil, std::span<const double> gas,
                               std::span<const double> water, double epsilon) {
    if (!(epsilon > 0.0)) {
        throw ConfigError("ratio epsilon must be > 0");
    }
    if (oil.size() != gas.size() || oil.size() != water.size()) {
        throw DataError("production_ratios: rate series lengths differ");
    }
    RatioColumns out{std::vector<double>(oil.size()), std::vector<double>(oil.size())};
    for (std::size_t t = 0; t < oil.size(); ++t) {
        if (oil[t] < 0.0 || gas[t] < 0.0 || water[t] < 0.0) {
            throw DataError("production_ratios: negative rate at step " + std::to_string(t));
        }
        out.gor[t] = gas[t] / (oil[t] + epsilon);
        out.water_cut[t] = water[t] / (oil[t] + water[t] + epsilon);
    }
    return out;
}

FeatureMatrix assemble_feature_matrix(const WellSeries& series, const FeatureConfig& cfg) {
    FeatureMatrix fm;
    fm.well_id = series.well_id;
    fm.registry = feature_registry(cfg);
    const std::size_t n = series.size();
    fm.values = Tensor(n, fm.registry.size());
    fm.timestamps.reserve(n);
    for (const auto& r : series.records) {
        fm.timestamps.push_back(r.date);
    }
    if (n == 0) {
        return fm;
    }

    std::map<std::string, std::vector<double>, std::less<>> base;
    for (const Variable v : kAllVariables) {
        base.emplace(std::string(variable_name(v)), series.column(v));
    }
    const auto ratios = production_ratios(base.at("oil_vol"), base.at("gas_vol"), base.at("water_vol"), cfg.epsilon);
    base.emplace("gor", ratios.gor);
    base.emplace("water_cut", ratios.water_cut);

    std::size_t col = 0;
    auto put = [&](std::span<const double> column) {
        for (std::size_t t = 0; t < n; ++t) {
            fm.values(t, col) = column[t];
        }
        ++col;
    };
    for (const Variable v : cfg.raw_variables) {
        put(base.at(std::string(variable_name(v))));
    }
    std::vector<std::uint8_t> valid;
    for (const Variable v : cfg.raw_variables) {
        auto d = compute_deltas(base.at(std::string(variable_name(v))));
        put(d.delta);
        valid = std::move(d.valid);
    }
    if (!cfg.raw_variables.empty()) {
        put(std::vector<double>(valid.begin(), valid.end()));
    }
    if (cfg.include_ratios) {
        put(ratios.gor);
        put(ratios.water_cut);
    }
    for (const auto& input : cfg.rolling_inputs) {
        const auto stats = rolling_stats(base.at(input), cfg.rolling_window);
        put(stats.mean);
        put(stats.std);
    }
    for (const Variable v : cfg.indicator_variables) {
        const auto it = series.missingness_indicators.find(v);
        std::vector<double> ind(n, 0.0);
        if (it != series.missingness_indicators.end()) {
            std::copy(it->second.begin(), it->second.end(), ind.begin());
        }
        put(ind);
    }
    return fm;
}

FeatureStats compute_feature_stats(const FeatureMatrix& matrix, std::span<const std::uint8_t> mask) {
    if (mask.size() != matrix.rows()) {
        throw DataError("standardize: mask length " + std::to_string(mask.size()) + " != rows " +
                        std::to_string(matrix.rows()));
    }
    const auto count = static_cast<std::size_t>(std::count_if(mask.begin(), mask.end(), [](auto m) { return m != 0; }));
    if (count == 0) {
        throw DataError("standardize: empty training row mask for well '" + matrix.well_id + "'");
    }
    const std::size_t f = matrix.cols();
    FeatureStats stats{std::vector<double>(f, 0.0), std::vector<double>(f, 0.0)};
    for (std::size_t t = 0; t < matrix.rows(); ++t) {
        if (!mask[t]) {
            continue;
        }
        for (std::size_t c = 0; c < f; ++c) {
            stats.mean[c] += matrix.values(t, c);
        }
    }
    for (std::size_t c = 0; c < f; ++c) {
        stats.mean[c] /= static_cast<double>(count);
    }
    for (std::size_t t = 0; t < matrix.rows(); ++t) {
        if (!mask[t]) {
            continue;
        }
        for (std::size_t c = 0; c < f; ++c) {
            const double d = matrix.values(t, c) - stats.mean[c];
            stats.std[c] += d * d;
        }
    }
    for (std::size_t c = 0; c < f; ++c) {
        stats.std[c] = std::sqrt(stats.std[c] / static_cast<double>(count));
    }
    return stats;
}

FeatureMatrix apply_feature_stats(const FeatureMatrix& matrix, const FeatureStats& stats) {
    if (stats.mean.size() != matrix.cols() || stats.std.size() != matrix.cols()) {
        throw DataError("feature stats width does not match registry");
    }
    FeatureMatrix out = matrix;
    for (std::size_t c = 0; c < out.cols(); ++c) {
        if (out.registry.kinds[c] == ColumnKind::indicator) {
            continue;
        }
        const double scale = std::max(stats.std[c], kMinStd);
        for (std::size_t t = 0; t < out.rows(); ++t) {
            out.values(t, c) = (out.values(t, c) - stats.mean[c]) / scale;
        }
    }
    out.train_stats = stats;
    return out;
}

FeatureMatrix standardize(const FeatureMatrix& matrix, std::span<const std::uint8_t> train_row_mask) {
    return apply_feature_stats(matrix, compute_feature_stats(matrix, train_row_mask));
}

std::string format_feature_table(std::span<const FeatureMatrix> matrices) {
    std::ostringstream out;
    out << "well_id,date";
    if (!matrices.empty()) {
        for (const auto& name : matrices.front().registry.names) {
            out << ',' << name;
        }
    }
    out << '\n';
    for (const auto& m : matrices) {
        if (m.registry != matrices.front().registry) {
            throw DataError("feature table: well '" + m.well_id + "' has a different registry");
        }
        for (std::size_t t = 0; t < m.rows(); ++t) {
            out << escape_cell(m.well_id) << ',' << format_day(m.timestamps[t]);
            for (std::size_t c = 0; c < m.cols(); ++c) {
                out << ',' << format_number(m.values(t, c));
            }
            out << '\n';
        }
    }
    return out.str();
}

std::vector<FeatureMatrix> parse_feature_table(std::string_view text) {
    const Table table = parse_table(text);
    if (table.header.size() < 2 || table.header[0] != "well_id" || table.header[1] != "date") {
        throw SchemaError("feature table must start with well_id,date");
    }
    FeatureRegistry reg;
    for (std::size_t c = 2; c < table.header.size(); ++c) {
        reg.names.push_back(table.header[c]);
        reg.kinds.push_back(column_kind_for(table.header[c]));
    }
    const std::size_t f = reg.size();
    std::vector<FeatureMatrix> out;
    std::vector<std::vector<double>> buffers;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        if (row.size() != table.header.size()) {
            throw RowError(r, "expected " + std::to_string(table.header.size()) + " cells");
        }
        if (out.empty() || out.back().well_id != row[0]) {
            out.emplace_back();
            out.back().well_id = row[0];
            out.back().registry = reg;
            buffers.emplace_back();
        }
        const auto day = parse_day(row[1]);
        if (!day) {
            throw RowError(r, "unparseable date '" + row[1] + "'");
        }
        out.back().timestamps.push_back(*day);
        for (std::size_t c = 0; c < f; ++c) {
            const auto x = parse_number(row[c + 2]);
            if (!x) {
                throw RowError(r, "unparseable number '" + row[c + 2] + "'");
            }
            buffers.back().push_back(*x);
        }
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i].values = Tensor(out[i].timestamps.size(), f, std::move(buffers[i]));
    }
    return out;
}

}  // namespace flowguard
