#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "flowguard/date.hpp"

namespace flowguard {

/// Modeled per-day variables of a production record.
enum class Variable : std::uint8_t {
    oil_vol,
    gas_vol,
    water_vol,
    on_stream_hrs,
    downhole_pressure,
    wellhead_pressure,
    wellhead_temp,
    choke_size,
};

inline constexpr std::size_t kVariableCount = 8;
inline constexpr std::array<Variable, kVariableCount> kAllVariables = {
    Variable::oil_vol,           Variable::gas_vol,           Variable::water_vol,
    Variable::on_stream_hrs,     Variable::downhole_pressure, Variable::wellhead_pressure,
    Variable::wellhead_temp,     Variable::choke_size,
};

[[nodiscard]] std::string_view variable_name(Variable v) noexcept;
[[nodiscard]] std::optional<Variable> variable_from_name(std::string_view name) noexcept;
/// Oil, gas and water volumes (Sm3/day); the rest are sensor readings.
[[nodiscard]] constexpr bool is_volume(Variable v) noexcept {
    return v == Variable::oil_vol || v == Variable::gas_vol || v == Variable::water_vol;
}
[[nodiscard]] constexpr std::size_t index_of(Variable v) noexcept { return static_cast<std::size_t>(v); }

/// One well-day observation. Units: volumes Sm3/day, hours in [0, 24],
/// pressures bar, temperature degC, choke %.
struct ProductionRecord {
    Day date{};
    std::string well_id;
    std::array<double, kVariableCount> values{};
    std::array<bool, kVariableCount> present{};

    [[nodiscard]] bool has(Variable v) const noexcept { return present[index_of(v)]; }
    [[nodiscard]] double value(Variable v) const noexcept { return values[index_of(v)]; }
    void set(Variable v, double x) noexcept {
        values[index_of(v)] = x;
        present[index_of(v)] = true;
    }
    void clear(Variable v) noexcept {
        values[index_of(v)] = 0.0;
        present[index_of(v)] = false;
    }

    friend bool operator==(const ProductionRecord&, const ProductionRecord&) = default;
};

/// Binds logical fields to source column headers. Defaults follow the Volve
/// daily production export. An empty variable column means "not mapped".
struct ColumnMap {
    std::string date = "DATEPRD";
    std::string well = "NPD_WELL_BORE_NAME";
    std::array<std::string, kVariableCount> variables = {
        "BORE_OIL_VOL",     "BORE_GAS_VOL", "BORE_WAT_VOL", "ON_STREAM_HRS", "AVG_DOWNHOLE_PRESSURE",
        "AVG_WHP_P",        "AVG_WHT_P",    "AVG_CHOKE_SIZE_P",
    };

    [[nodiscard]] const std::string& column(Variable v) const noexcept { return variables[index_of(v)]; }
};

/// Parses a delimited production table. One record per data row, row order
/// preserved. Mapped variable columns absent from the header, and empty cells,
/// become missing (present == false).
/// Throws EmptyTableError, SchemaError (missing date/well column) or RowError.
[[nodiscard]] std::vector<ProductionRecord> parse_production_table(std::string_view text,
                                                                   const ColumnMap& columns = {});

struct WellPlacement {
    std::string facility_id;
    std::string field_id;
};

/// well -> facility -> field hierarchy. Wells are kept in id order.
struct Topology {
    std::map<std::string, WellPlacement> wells;

    [[nodiscard]] std::vector<std::string> facilities() const;
    [[nodiscard]] std::vector<std::string> fields() const;
    [[nodiscard]] std::vector<std::string> wells_of(std::string_view facility) const;
    [[nodiscard]] std::string field_of_facility(std::string_view facility) const;
};

/// Three-column table (well_id, facility_id, field_id). Throws TopologyError on
/// duplicated wells, blank ids, or a facility assigned to two fields.
[[nodiscard]] Topology parse_topology(std::string_view text);
[[nodiscard]] std::string format_topology(const Topology& topology);

/// Per-well chronologically ordered records plus per-variable missingness
/// indicator columns (1 = value originally missing at that step).
struct WellSeries {
    std::string well_id;
    std::string facility_id;
    std::string field_id;
    std::vector<ProductionRecord> records;
    std::map<Variable, std::vector<std::uint8_t>> missingness_indicators;

    [[nodiscard]] std::size_t size() const noexcept { return records.size(); }
    [[nodiscard]] std::vector<double> column(Variable v) const;

    friend bool operator==(const WellSeries&, const WellSeries&) = default;
};

/// Groups records per well and sorts them by date.
/// Throws DuplicateKeyError for a repeated (well, date) and TopologyError for
/// a well missing from the topology.
[[nodiscard]] std::map<std::string, WellSeries> build_well_series(std::vector<ProductionRecord> records,
                                                                  const Topology& topology);

struct ImputePolicy {
    int ffill_horizon = 3;
    double persistent_missing_frac = 0.20;
};

/// Engineering-aware imputation:
///  - a volume missing on a day with observed on_stream_hrs == 0 becomes 0;
///  - sensor gaps are forward-filled for at most ffill_horizon consecutive steps;
///  - a variable gains an indicator column if its missing fraction exceeds
///    persistent_missing_frac or if any value stays unfilled;
///  - unfilled values become 0.
/// The result has every value present, so applying it twice is a no-op.
[[nodiscard]] WellSeries impute_series(const WellSeries& series, const ImputePolicy& policy = {});

/// Canonical cleaned-series table for all wells: well_id, facility_id,
/// field_id, date, the eight variables, then miss_<variable> for every
/// variable that has an indicator in any well.
[[nodiscard]] std::string format_clean_series(const std::map<std::string, WellSeries>& series);
[[nodiscard]] std::map<std::string, WellSeries> parse_clean_series(std::string_view text);

/// Variables carrying an indicator column in at least one well, in enum order.
[[nodiscard]] std::vector<Variable> indicator_variables(const std::map<std::string, WellSeries>& series);

}  // namespace flowguard
