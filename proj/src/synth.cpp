#include "flowguard/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <tuple>

#include "flowguard/csv.hpp"
#include "flowguard/error.hpp"
#include "flowguard/rng.hpp"

namespace flowguard {

namespace {

constexpr int kWarmup = 30;
constexpr int kGap = 10;
constexpr int kMaxDraws = 2000;

// Relative wellhead-pressure changes of the event signatures.
constexpr double kPrecursorStep = 0.03;
constexpr double kDeclineStep = 0.06;
constexpr double kFacilityStep = 0.15;

std::string numbered(const char* prefix, int n, int width) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%0*d", prefix, width, n);
    return buf;
}

int digits(int n) { return n < 10 ? 1 : n < 100 ? 2 : n < 1000 ? 3 : 4; }

}  // namespace

std::string_view anomaly_kind_name(AnomalyKind kind) noexcept {
    switch (kind) {
        case AnomalyKind::theft: return "theft";
        case AnomalyKind::inefficiency: return "inefficiency";
        case AnomalyKind::sensor_dropout: return "sensor_dropout";
        case AnomalyKind::facility_event: return "facility_event";
    }
    return "?";
}

AnomalyKind parse_anomaly_kind(std::string_view name) {
    for (const auto k : {AnomalyKind::theft, AnomalyKind::inefficiency, AnomalyKind::sensor_dropout,
                         AnomalyKind::facility_event}) {
        if (name == anomaly_kind_name(k)) {
            return k;
        }
    }
    throw ConfigError("unknown anomaly kind '" + std::string(name) +
                      "' (expected theft, inefficiency, sensor_dropout or facility_event)");
}

std::vector<AnomalySpec> default_anomalies() {
    return {
        {AnomalyKind::theft, 0.012, 0.8, 6, 0, 0},
        {AnomalyKind::inefficiency, 0.012, 0.7, 5, 3, 0},
        {AnomalyKind::sensor_dropout, 0.008, 0.0, 8, 0, 0},
        {AnomalyKind::facility_event, 0.03, 0.8, 6, 2, 3},
    };
}

void SynthConfig::validate() const {
    if (n_fields < 1 || n_facilities < 1 || wells_per_facility < 1) {
        throw ConfigError("synth: field, facility and well counts must be >= 1");
    }
    if (n_facilities < n_fields) {
        throw ConfigError("synth: every field needs a facility (n_facilities >= n_fields)");
    }
    if (T < 2) {
        throw ConfigError("synth.T must be >= 2");
    }
    if (!(decline_rate >= 0.0) || !(q0_min > 0.0) || !(q0_max >= q0_min) || !(noise_cv >= 0.0) ||
        !std::isfinite(decline_rate) || !std::isfinite(q0_max) || !std::isfinite(noise_cv)) {
        throw ConfigError("synth: decline_rate >= 0, 0 < q0_min <= q0_max and noise_cv >= 0 are required");
    }
    if (!(downtime_rate >= 0.0 && downtime_rate < 1.0)) {
        throw ConfigError("synth.downtime_rate must lie in [0, 1)");
    }
    if (!(shift_start >= 0.0 && shift_start <= 1.0) || !(shift_factor > 0.0)) {
        throw ConfigError("synth: shift_start must lie in [0, 1] and shift_factor must be > 0");
    }
    for (const auto& a : anomalies) {
        const std::string what = "synth anomaly '" + std::string(anomaly_kind_name(a.kind)) + "'";
        if (!(a.rate >= 0.0 && a.rate <= 1.0)) {
            throw ConfigError(what + ": rate must lie in [0, 1]");
        }
        if (a.kind != AnomalyKind::sensor_dropout && !(a.magnitude >= 0.0 && a.magnitude <= 1.0)) {
            throw ConfigError(what + ": magnitude must lie in [0, 1]");
        }
        if (a.duration < 1 || a.precursor < 0 || a.max_lag < 0) {
            throw ConfigError(what + ": duration must be >= 1, precursor and max_lag >= 0");
        }
    }
}

constexpr double kPartialDayRate = 0.05;

SynthDataset generate_clean(const SynthConfig& cfg) {
    cfg.validate();
    SynthDataset data;
    const int n_wells = cfg.n_facilities * cfg.wells_per_facility;
    const int wd = std::max(2, digits(n_wells));
    int w = 0;
    for (int f = 0; f < cfg.n_facilities; ++f) {
        const int field = f * cfg.n_fields / cfg.n_facilities;
        for (int k = 0; k < cfg.wells_per_facility; ++k) {
            data.topology.wells.emplace(numbered("W", ++w, wd),
                                        WellPlacement{numbered("F", f + 1, 1), numbered("FIELD", field + 1, 1)});
        }
    }
    const double T = cfg.T;
    std::uint64_t tag = 1000;
    for (const auto& [id, place] : data.topology.wells) {
        SplitMix64 rng(SplitMix64::derive(cfg.seed, ++tag));
        const double q0 = rng.uniform(cfg.q0_min, cfg.q0_max);
        const double g0 = rng.uniform(100.0, 200.0);
        const double gor_rise = rng.uniform(0.2, 0.5);
        const double gor_tau = rng.uniform(0.1 * T, 0.25 * T);
        const double wc0 = rng.uniform(0.02, 0.1);
        const double wc_max = rng.uniform(0.5, 0.8);
        const double t_breakthrough = rng.uniform(0.1 * T, 0.5 * T);
        const double wc_tau = rng.uniform(0.08 * T, 0.2 * T);
        const double whp0 = rng.uniform(20.0, 60.0);
        const double dhp0 = rng.uniform(200.0, 300.0);
        const double choke = rng.uniform(30.0, 100.0);
        const double sensor_cv = 0.5 * cfg.noise_cv;

        WellSeries s;
        s.well_id = id;
        s.facility_id = place.facility_id;
        s.field_id = place.field_id;
        s.records.reserve(static_cast<std::size_t>(cfg.T));
        for (int t = 0; t < cfg.T; ++t) {
            const double decay = std::exp(-cfg.decline_rate * t);
            // Most days run 24 h; a few run short without any anomaly.
            const double hours = rng.bernoulli(kPartialDayRate) ? rng.uniform(20.0, 24.0) : 24.0;
            const double oil = std::max(0.0, q0 * decay * (hours / 24.0) * (1.0 + cfg.noise_cv * rng.normal()));
            const double gor = g0 * (1.0 + gor_rise * (1.0 - std::exp(-t / gor_tau)));
            const double wc = wc0 + (wc_max - wc0) / (1.0 + std::exp(-(t - t_breakthrough) / wc_tau));
            const bool down = t > 0 && rng.bernoulli(cfg.downtime_rate);
            ProductionRecord r;
            r.date = add_days(cfg.start, t);
            r.well_id = id;
            r.set(Variable::oil_vol, down ? 0.0 : oil);
            r.set(Variable::gas_vol, down ? 0.0 : oil * gor);
            r.set(Variable::water_vol, down ? 0.0 : oil * wc / (1.0 - wc));
            r.set(Variable::on_stream_hrs, down ? 0.0 : hours);
            r.set(Variable::downhole_pressure, dhp0 * (0.6 + 0.4 * decay) * (1.0 + sensor_cv * rng.normal()));
            r.set(Variable::wellhead_pressure, whp0 * (1.6 - 0.6 * decay) * (1.0 + sensor_cv * rng.normal()));
            r.set(Variable::wellhead_temp, (60.0 + 20.0 * decay) * (1.0 + sensor_cv * rng.normal()));
            r.set(Variable::choke_size, choke);
            s.records.push_back(std::move(r));
        }
        data.series.emplace(id, std::move(s));
    }
    return data;
}

namespace {

void scale_volumes(ProductionRecord& r, double factor) {
    for (const auto v : {Variable::oil_vol, Variable::gas_vol, Variable::water_vol}) {
        if (r.has(v)) {
            r.set(v, r.value(v) * factor);
        }
    }
}

void scale_whp(ProductionRecord& r, double factor) {
    if (r.has(Variable::wellhead_pressure)) {
        r.set(Variable::wellhead_pressure, r.value(Variable::wellhead_pressure) * factor);
    }
}

}  // namespace

void apply_event(SynthDataset& data, const GroundTruthEvent& event) {
    for (const auto& [well, lag] : event.wells) {
        const auto it = data.series.find(well);
        if (it == data.series.end()) {
            throw DataError("synthetic event " + std::to_string(event.id) + " targets unknown well '" + well + "'");
        }
        auto& recs = it->second.records;
        if (recs.empty()) {
            continue;
        }
        const long first = (event.start - recs.front().date).count();
        const long onset = first + event.precursor + lag;
        const long last = onset + event.duration - 1;
        if (first < 0 || last >= static_cast<long>(recs.size())) {
            throw DataError("synthetic event " + std::to_string(event.id) + " falls outside the series of '" + well +
                            "'");
        }
        auto rec = [&](long t) -> ProductionRecord& { return recs[static_cast<std::size_t>(t)]; };
        const double m = event.magnitude;
        const bool leads = lag == 0 && event.precursor > 0;
        if (leads) {
            for (int k = 1; k <= event.precursor; ++k) {
                scale_whp(rec(onset - event.precursor + k - 1), 1.0 + kPrecursorStep * k);
            }
        }
        const double base = leads ? kPrecursorStep * event.precursor : 0.0;
        for (int j = 0; j < event.duration; ++j) {
            ProductionRecord& r = rec(onset + j);
            switch (event.kind) {
                case AnomalyKind::theft:
                    if (r.has(Variable::oil_vol)) {
                        r.set(Variable::oil_vol, r.value(Variable::oil_vol) * (1.0 - m));
                    }
                    break;
                case AnomalyKind::inefficiency:
                    scale_volumes(r, 1.0 - m * (j + 1) / event.duration);
                    scale_whp(r, 1.0 + base + kDeclineStep * (j + 1));
                    break;
                case AnomalyKind::facility_event:
                    scale_volumes(r, 1.0 - m);
                    scale_whp(r, 1.0 + base + kFacilityStep);
                    break;
                case AnomalyKind::sensor_dropout:
                    r.clear(event.variable.value_or(Variable::downhole_pressure));
                    break;
            }
        }
    }
}

GroundTruthLog inject_anomalies(SynthDataset& data, const SynthConfig& cfg) {
    cfg.validate();
    GroundTruthLog log;
    const int T = cfg.T;
    std::map<std::string, std::vector<std::uint8_t>> busy;
    for (const auto& [id, s] : data.series) {
        if (s.records.size() != static_cast<std::size_t>(T)) {
            throw DataError("inject_anomalies: series of '" + id + "' does not have T rows");
        }
        busy[id].assign(static_cast<std::size_t>(T), 0);
        log.mask[id].assign(static_cast<std::size_t>(T), 0);
    }
    const auto facilities = data.topology.facilities();
    const double total_cells = static_cast<double>(T) * static_cast<double>(data.series.size());
    const int shift_day = static_cast<int>(std::lround(cfg.shift_start * T));
    SplitMix64 rng(SplitMix64::derive(cfg.seed, 7));

    for (const auto& spec : cfg.anomalies) {
        const bool facility = spec.kind == AnomalyKind::facility_event;
        const int lag_span = facility ? spec.max_lag : 0;
        const int span = spec.precursor + lag_span + spec.duration;
        const double wells_hit = facility ? static_cast<double>(cfg.wells_per_facility) : 1.0;
        const auto n_events = static_cast<long>(std::llround(spec.rate * total_cells / (span * wells_hit)));
        const int lo = kWarmup;
        const int hi = T - span;  // inclusive latest start
        if (n_events > 0 && hi < lo) {
            throw ConfigError("synth: series of " + std::to_string(T) + " days is too short for " +
                              std::string(anomaly_kind_name(spec.kind)) + " events");
        }
        for (long e = 0; e < n_events; ++e) {
            bool placed = false;
            for (int attempt = 0; attempt < kMaxDraws && !placed; ++attempt) {
                const double early = std::max(0, std::min(shift_day, hi + 1) - lo);
                const double late = cfg.shift_factor * std::max(0, hi + 1 - std::max(shift_day, lo));
                int start;
                if (rng.uniform() * (early + late) < early) {
                    start = lo + static_cast<int>(rng.index(static_cast<std::size_t>(early)));
                } else {
                    const int from = std::max(shift_day, lo);
                    start = from + static_cast<int>(rng.index(static_cast<std::size_t>(hi + 1 - from)));
                }
                GroundTruthEvent ev;
                ev.kind = spec.kind;
                ev.magnitude = spec.magnitude;
                ev.duration = spec.duration;
                ev.precursor = spec.precursor;
                ev.start = add_days(cfg.start, start);
                ev.end = add_days(cfg.start, start + span - 1);
                if (facility) {
                    ev.target_id = facilities[rng.index(facilities.size())];
                    const auto wells = data.topology.wells_of(ev.target_id);
                    std::vector<int> lags(wells.size());
                    for (auto& l : lags) {
                        l = static_cast<int>(rng.index(static_cast<std::size_t>(spec.max_lag) + 1));
                    }
                    const std::size_t first = rng.index(wells.size());
                    lags[first] = 0;
                    if (wells.size() > 1) {
                        std::size_t latest = rng.index(wells.size() - 1);
                        latest += latest >= first ? 1 : 0;
                        lags[latest] = spec.max_lag;
                    }
                    for (std::size_t i = 0; i < wells.size(); ++i) {
                        ev.wells.emplace_back(wells[i], lags[i]);
                    }
                } else {
                    auto it = data.series.begin();
                    std::advance(it, static_cast<long>(rng.index(data.series.size())));
                    ev.target_id = it->first;
                    ev.wells.emplace_back(it->first, 0);
                }
                if (spec.kind == AnomalyKind::sensor_dropout) {
                    ev.variable = rng.bernoulli(0.5) ? Variable::downhole_pressure : Variable::wellhead_temp;
                }
                const int from = std::max(0, start - kGap);
                const int to = std::min(T - 1, start + span - 1 + kGap);
                const bool clash = std::any_of(ev.wells.begin(), ev.wells.end(), [&](const auto& wl) {
                    const auto& b = busy[wl.first];
                    return std::any_of(b.begin() + from, b.begin() + to + 1, [](std::uint8_t x) { return x != 0; });
                });
                if (clash) {
                    continue;
                }
                for (const auto& [well, lag] : ev.wells) {
                    std::fill(busy[well].begin() + from, busy[well].begin() + to + 1, 1);
                    std::fill(log.mask[well].begin() + start, log.mask[well].begin() + start + span, 1);
                }
                ev.id = log.events.size() + 1;
                log.events.push_back(std::move(ev));
                placed = true;
            }
            if (!placed) {
                throw ConfigError("synth: could not place " + std::to_string(n_events) + " non-overlapping " +
                                  std::string(anomaly_kind_name(spec.kind)) + " events; lower the rate");
            }
        }
    }
    std::sort(log.events.begin(), log.events.end(), [](const auto& a, const auto& b) {
        return std::tie(a.start, a.id) < std::tie(b.start, b.id);
    });
    for (std::size_t i = 0; i < log.events.size(); ++i) {
        log.events[i].id = i + 1;
        apply_event(data, log.events[i]);
    }
    return log;
}

std::pair<SynthDataset, GroundTruthLog> generate(const SynthConfig& cfg) {
    SynthDataset data = generate_clean(cfg);
    GroundTruthLog log = inject_anomalies(data, cfg);
    return {std::move(data), std::move(log)};
}

std::string export_volve_schema(const SynthDataset& data) {
    const ColumnMap cols;
    std::string out = cols.date + ',' + cols.well;
    for (const auto v : kAllVariables) {
        out += ',' + cols.column(v);
    }
    out += '\n';
    for (const auto& [id, s] : data.series) {
        for (const auto& r : s.records) {
            out += format_day(r.date) + ',' + escape_cell(id);
            for (const auto v : kAllVariables) {
                out += ',';
                if (r.has(v)) {
                    out += format_number(r.value(v));
                }
            }
            out += '\n';
        }
    }
    return out;
}

std::string format_truth_events(const GroundTruthLog& log) {
    std::ostringstream out;
    out << "event_id,kind,target_id,start,end,magnitude,duration,precursor,wells,variable\n";
    for (const auto& e : log.events) {
        std::string wells;
        for (const auto& [w, lag] : e.wells) {
            wells += (wells.empty() ? "" : ";") + w + ':' + std::to_string(lag);
        }
        out << e.id << ',' << anomaly_kind_name(e.kind) << ',' << escape_cell(e.target_id) << ','
            << format_day(e.start) << ',' << format_day(e.end) << ',' << format_number(e.magnitude) << ','
            << e.duration << ',' << e.precursor << ',' << escape_cell(wells) << ','
            << (e.variable ? variable_name(*e.variable) : std::string_view{}) << '\n';
    }
    return out.str();
}

std::string format_truth_mask(const GroundTruthLog& log, const SynthDataset& data) {
    std::map<std::string, std::vector<std::string_view>> kinds;
    for (const auto& [id, m] : log.mask) {
        kinds[id].assign(m.size(), std::string_view{});
    }
    for (const auto& e : log.events) {
        for (const auto& [w, lag] : e.wells) {
            auto& k = kinds[w];
            const auto& recs = data.series.at(w).records;
            const long a = (e.start - recs.front().date).count();
            const long b = (e.end - recs.front().date).count();
            for (long t = a; t <= b && t < static_cast<long>(k.size()); ++t) {
                k[static_cast<std::size_t>(t)] = anomaly_kind_name(e.kind);
            }
        }
    }
    std::string out = "well_id,date,anomaly,kind\n";
    for (const auto& [id, s] : data.series) {
        const auto mit = log.mask.find(id);
        for (std::size_t t = 0; t < s.records.size(); ++t) {
            const bool on = mit != log.mask.end() && t < mit->second.size() && mit->second[t] != 0;
            out += escape_cell(id) + ',' + format_day(s.records[t].date) + ',' + (on ? "1" : "0") + ',';
            out += on ? std::string(kinds[id][t]) : std::string();
            out += '\n';
        }
    }
    return out;
}

}  // namespace flowguard
