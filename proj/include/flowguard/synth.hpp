#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "flowguard/date.hpp"
#include "flowguard/ingest.hpp"

namespace flowguard {

enum class AnomalyKind : std::uint8_t { theft, inefficiency, sensor_dropout, facility_event };

[[nodiscard]] std::string_view anomaly_kind_name(AnomalyKind kind) noexcept;
[[nodiscard]] AnomalyKind parse_anomaly_kind(std::string_view name);

struct AnomalySpec {
    AnomalyKind kind = AnomalyKind::theft;
    /// Target fraction of well-days covered by the truth mask.
    double rate = 0.0;
    /// Fractional loss of oil (theft, facility events) or of the final rate
    /// reached by a decline (inefficiency). Ignored for sensor dropout.
    double magnitude = 0.0;
    /// Perturbed days per well, excluding precursor days.
    int duration = 1;
    /// Days of rising wellhead pressure before the onset (inefficiency; the
    /// earliest wells of a facility event).
    int precursor = 0;
    /// Largest per-well onset delay of a facility event.
    int max_lag = 0;
};

[[nodiscard]] std::vector<AnomalySpec> default_anomalies();

struct SynthConfig {
    int n_fields = 1;
    int n_facilities = 3;
    int wells_per_facility = 4;
    int T = 730;
    Day start = Day{std::chrono::year{2014} / 1 / 1};
    double decline_rate = 0.0008;
    double q0_min = 800.0;
    double q0_max = 3000.0;
    double noise_cv = 0.02;
    /// Probability of a benign shut-in day (on stream 0 h, zero volumes).
    double downtime_rate = 0.003;
    std::vector<AnomalySpec> anomalies = default_anomalies();
    /// Events start shift_factor times more often from day shift_start * T on;
    /// overall truth-mask rates are unchanged.
    double shift_start = 0.6;
    double shift_factor = 3.0;
    std::uint64_t seed = 0;

    void validate() const;
};

struct SynthDataset {
    Topology topology;
    std::map<std::string, WellSeries> series;
};

/// One injected perturbation. Facility events list every member well with its
/// onset lag; the other kinds list a single well with lag 0.
struct GroundTruthEvent {
    std::size_t id = 0;
    AnomalyKind kind = AnomalyKind::theft;
    std::string target_id;
    /// First perturbed day (including precursor days) and last perturbed day.
    Day start{};
    Day end{};
    double magnitude = 0.0;
    int duration = 1;
    int precursor = 0;
    std::vector<std::pair<std::string, int>> wells;
    std::optional<Variable> variable;
};

struct GroundTruthLog {
    std::vector<GroundTruthEvent> events;
    /// Per well, 1 on every day inside an event span.
    std::map<std::string, std::vector<std::uint8_t>> mask;
};

/// Decline-curve production network without anomalies.
[[nodiscard]] SynthDataset generate_clean(const SynthConfig& cfg);

/// Applies one event in place. Throws DataError if it references an unknown
/// well or falls outside the series.
void apply_event(SynthDataset& data, const GroundTruthEvent& event);

/// Places events per cfg.anomalies without overlaps on any well, applies them
/// and returns the log. Throws ConfigError when the requested rates cannot be
/// placed.
[[nodiscard]] GroundTruthLog inject_anomalies(SynthDataset& data, const SynthConfig& cfg);

/// generate_clean followed by inject_anomalies.
[[nodiscard]] std::pair<SynthDataset, GroundTruthLog> generate(const SynthConfig& cfg);

/// Production table in the default ingestion schema (Volve column names).
[[nodiscard]] std::string export_volve_schema(const SynthDataset& data);

[[nodiscard]] std::string format_truth_events(const GroundTruthLog& log);
[[nodiscard]] std::string format_truth_mask(const GroundTruthLog& log, const SynthDataset& data);

}  // namespace flowguard
