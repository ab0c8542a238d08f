#include "flowguard/ingest.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "flowguard/csv.hpp"
#include "flowguard/error.hpp"

namespace flowguard {

namespace {

constexpr std::array<std::string_view, kVariableCount> kVariableNames = {
    "oil_vol",           "gas_vol",           "water_vol",     "on_stream_hrs",
    "downhole_pressure", "wellhead_pressure", "wellhead_temp", "choke_size",
};

std::string quote(std::string_view s) { return "'" + std::string(s) + "'"; }

}  // namespace

std::string_view variable_name(Variable v) noexcept { return kVariableNames[index_of(v)]; }

std::optional<Variable> variable_from_name(std::string_view name) noexcept {
    for (const Variable v : kAllVariables) {
        if (variable_name(v) == name) {
            return v;
        }
    }
    return std::nullopt;
}

std::vector<ProductionRecord> parse_production_table(std::string_view text, const ColumnMap& columns) {
    const Table table = parse_table(text);
    if (table.rows.empty()) {
        throw EmptyTableError("empty table: header present but no data rows");
    }
    const std::size_t date_col = table.require_column(columns.date);
    const std::size_t well_col = table.require_column(columns.well);
    std::array<std::optional<std::size_t>, kVariableCount> var_cols{};
    for (const Variable v : kAllVariables) {
        if (!columns.column(v).empty()) {
            var_cols[index_of(v)] = table.column(columns.column(v));
        }
    }
    const bool decimal_comma = table.delimiter == ';';
    static const std::string kEmpty;

    std::vector<ProductionRecord> records;
    records.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        if (row.size() > table.header.size()) {
            throw RowError(r, "has " + std::to_string(row.size()) + " cells but the header has " +
                                  std::to_string(table.header.size()));
        }
        auto cell = [&](std::size_t c) -> const std::string& { return c < row.size() ? row[c] : kEmpty; };

        ProductionRecord rec;
        const auto day = parse_day(cell(date_col));
        if (!day) {
            throw RowError(r, "unparseable date " + quote(cell(date_col)));
        }
        rec.date = *day;
        rec.well_id = cell(well_col);
        if (rec.well_id.empty()) {
            throw RowError(r, "empty well identifier");
        }
        for (const Variable v : kAllVariables) {
            const auto& col = var_cols[index_of(v)];
            if (!col || cell(*col).empty()) {
                continue;
            }
            const auto x = parse_number(cell(*col), decimal_comma);
            if (!x) {
                throw RowError(r, "unparseable number " + quote(cell(*col)) + " in column " +
                                      quote(columns.column(v)));
            }
            if (v == Variable::on_stream_hrs && (*x < 0.0 || *x > 24.0)) {
                throw RowError(r, "on_stream_hrs " + format_number(*x) + " out of range [0, 24]");
            }
            if (is_volume(v) && *x < 0.0) {
                throw RowError(r, std::string(variable_name(v)) + " is negative (" + format_number(*x) + ")");
            }
            rec.set(v, *x);
        }
        records.push_back(std::move(rec));
    }
    return records;
}

std::vector<std::string> Topology::facilities() const {
    std::set<std::string> out;
    for (const auto& [_, p] : wells) {
        out.insert(p.facility_id);
    }
    return {out.begin(), out.end()};
}

std::vector<std::string> Topology::fields() const {
    std::set<std::string> out;
    for (const auto& [_, p] : wells) {
        out.insert(p.field_id);
    }
    return {out.begin(), out.end()};
}

std::vector<std::string> Topology::wells_of(std::string_view facility) const {
    std::vector<std::string> out;
    for (const auto& [id, p] : wells) {
        if (p.facility_id == facility) {
            out.push_back(id);
        }
    }
    return out;
}

std::string Topology::field_of_facility(std::string_view facility) const {
    for (const auto& [_, p] : wells) {
        if (p.facility_id == facility) {
            return p.field_id;
        }
    }
    throw TopologyError("unknown facility " + quote(facility));
}

Topology parse_topology(std::string_view text) {
    const Table table = parse_table(text);
    if (table.header.size() < 3) {
        throw SchemaError("topology table needs three columns (well_id, facility_id, field_id)");
    }
    const std::size_t wc = table.column("well_id").value_or(0);
    const std::size_t fc = table.column("facility_id").value_or(1);
    const std::size_t dc = table.column("field_id").value_or(2);
    Topology topo;
    std::map<std::string, std::string> facility_field;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        if (row.size() <= std::max({wc, fc, dc})) {
            throw RowError(r, "topology row needs three cells");
        }
        const std::string& well = row[wc];
        const std::string& facility = row[fc];
        const std::string& field = row[dc];
        if (well.empty() || facility.empty() || field.empty()) {
            throw TopologyError("topology row " + std::to_string(r) + " has a blank identifier");
        }
        if (!topo.wells.emplace(well, WellPlacement{facility, field}).second) {
            throw TopologyError("well " + quote(well) + " listed twice in topology");
        }
        auto [it, inserted] = facility_field.emplace(facility, field);
        if (!inserted && it->second != field) {
            throw TopologyError("facility " + quote(facility) + " assigned to fields " + quote(it->second) +
                                " and " + quote(field));
        }
    }
    return topo;
}

std::string format_topology(const Topology& topology) {
    std::ostringstream out;
    out << "well_id,facility_id,field_id\n";
    for (const auto& [id, p] : topology.wells) {
        out << escape_cell(id) << ',' << escape_cell(p.facility_id) << ',' << escape_cell(p.field_id) << '\n';
    }
    return out.str();
}

std::vector<double> WellSeries::column(Variable v) const {
    std::vector<double> out;
    out.reserve(records.size());
    for (const auto& r : records) {
        out.push_back(r.value(v));
    }
    return out;
}

std::map<std::string, WellSeries> build_well_series(std::vector<ProductionRecord> records,
                                                    const Topology& topology) {
    std::map<std::string, WellSeries> out;
    for (auto& rec : records) {
        const auto placement = topology.wells.find(rec.well_id);
        if (placement == topology.wells.end()) {
            throw TopologyError("well " + quote(rec.well_id) + " is not in the topology");
        }
        auto [it, inserted] = out.try_emplace(rec.well_id);
        if (inserted) {
            it->second.well_id = rec.well_id;
            it->second.facility_id = placement->second.facility_id;
            it->second.field_id = placement->second.field_id;
        }
        it->second.records.push_back(std::move(rec));
    }
    for (auto& [id, series] : out) {
        std::stable_sort(series.records.begin(), series.records.end(),
                         [](const ProductionRecord& a, const ProductionRecord& b) { return a.date < b.date; });
        for (std::size_t i = 1; i < series.records.size(); ++i) {
            if (series.records[i].date == series.records[i - 1].date) {
                throw DuplicateKeyError("duplicate record for (" + id + ", " +
                                        format_day(series.records[i].date) + ")");
            }
        }
    }
    return out;
}

WellSeries impute_series(const WellSeries& series, const ImputePolicy& policy) {
    WellSeries out = series;
    const std::size_t n = out.records.size();
    if (n == 0) {
        return out;
    }
    auto& recs = out.records;

    for (const Variable v : kAllVariables) {
        std::vector<std::uint8_t> missing(n, 0);
        std::size_t missing_count = 0;
        bool residual = false;

        // Confirmed non-producing day: zero volume, not counted as missing.
        for (std::size_t t = 0; t < n; ++t) {
            auto& rec = recs[t];
            if (rec.has(v)) {
                continue;
            }
            if (is_volume(v) && rec.has(Variable::on_stream_hrs) && rec.value(Variable::on_stream_hrs) == 0.0) {
                rec.set(v, 0.0);
                continue;
            }
            missing[t] = 1;
            ++missing_count;
        }

        std::optional<double> last;
        int run = 0;
        for (std::size_t t = 0; t < n; ++t) {
            auto& rec = recs[t];
            if (!missing[t]) {
                last = rec.value(v);
                run = 0;
                continue;
            }
            ++run;
            if (!is_volume(v) && last && run <= policy.ffill_horizon) {
                rec.set(v, *last);
            } else {
                rec.set(v, 0.0);
                residual = true;
            }
        }

        const double frac = static_cast<double>(missing_count) / static_cast<double>(n);
        const bool needs_indicator = residual || frac > policy.persistent_missing_frac;
        auto existing = out.missingness_indicators.find(v);
        if (existing != out.missingness_indicators.end()) {
            for (std::size_t t = 0; t < n; ++t) {
                existing->second[t] = static_cast<std::uint8_t>(existing->second[t] | missing[t]);
            }
        } else if (needs_indicator) {
            out.missingness_indicators.emplace(v, std::move(missing));
        }
    }
    return out;
}

std::vector<Variable> indicator_variables(const std::map<std::string, WellSeries>& series) {
    std::set<Variable> vars;
    for (const auto& [_, s] : series) {
        for (const auto& [v, _col] : s.missingness_indicators) {
            vars.insert(v);
        }
    }
    return {vars.begin(), vars.end()};
}

std::string format_clean_series(const std::map<std::string, WellSeries>& series) {
    const auto indicators = indicator_variables(series);
    std::ostringstream out;
    out << "well_id,facility_id,field_id,date";
    for (const Variable v : kAllVariables) {
        out << ',' << variable_name(v);
    }
    for (const Variable v : indicators) {
        out << ",miss_" << variable_name(v);
    }
    out << '\n';
    for (const auto& [id, s] : series) {
        for (std::size_t t = 0; t < s.records.size(); ++t) {
            const auto& rec = s.records[t];
            out << escape_cell(id) << ',' << escape_cell(s.facility_id) << ',' << escape_cell(s.field_id) << ','
                << format_day(rec.date);
            for (const Variable v : kAllVariables) {
                out << ',';
                if (rec.has(v)) {
                    out << format_number(rec.value(v));
                }
            }
            for (const Variable v : indicators) {
                const auto it = s.missingness_indicators.find(v);
                out << ',' << (it == s.missingness_indicators.end() ? 0 : static_cast<int>(it->second[t]));
            }
            out << '\n';
        }
    }
    return out.str();
}

std::map<std::string, WellSeries> parse_clean_series(std::string_view text) {
    const Table table = parse_table(text);
    const std::size_t wc = table.require_column("well_id");
    const std::size_t fc = table.require_column("facility_id");
    const std::size_t dc = table.require_column("field_id");
    const std::size_t datec = table.require_column("date");
    std::array<std::size_t, kVariableCount> vc{};
    for (const Variable v : kAllVariables) {
        vc[index_of(v)] = table.require_column(variable_name(v));
    }
    std::vector<std::pair<Variable, std::size_t>> ic;
    for (const Variable v : kAllVariables) {
        if (auto c = table.column("miss_" + std::string(variable_name(v)))) {
            ic.emplace_back(v, *c);
        }
    }

    std::map<std::string, WellSeries> out;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        if (row.size() != table.header.size()) {
            throw RowError(r, "expected " + std::to_string(table.header.size()) + " cells");
        }
        auto [it, inserted] = out.try_emplace(row[wc]);
        WellSeries& s = it->second;
        if (inserted) {
            s.well_id = row[wc];
            s.facility_id = row[fc];
            s.field_id = row[dc];
        }
        ProductionRecord rec;
        rec.well_id = row[wc];
        const auto day = parse_day(row[datec]);
        if (!day) {
            throw RowError(r, "unparseable date " + quote(row[datec]));
        }
        rec.date = *day;
        for (const Variable v : kAllVariables) {
            const auto& cell = row[vc[index_of(v)]];
            if (cell.empty()) {
                continue;
            }
            const auto x = parse_number(cell);
            if (!x) {
                throw RowError(r, "unparseable number " + quote(cell));
            }
            rec.set(v, *x);
        }
        s.records.push_back(std::move(rec));
        for (const auto& [v, c] : ic) {
            s.missingness_indicators[v].push_back(row[c] == "1" ? 1 : 0);
        }
    }
    // Drop indicator columns that are all zero for a well; they were only
    // present in the file because another well needed them.
    for (auto& [_, s] : out) {
        std::erase_if(s.missingness_indicators, [](const auto& kv) {
            return std::all_of(kv.second.begin(), kv.second.end(), [](std::uint8_t b) { return b == 0; });
        });
    }
    return out;
}

}  // namespace flowguard
