#include <doctest.h>

#include <cmath>
#include <sstream>

#include "flowguard/csv.hpp"
#include "flowguard/error.hpp"
#include "flowguard/synth.hpp"
#include "helpers.hpp"

using namespace flowguard;

namespace {

SynthConfig small_config(std::uint64_t seed = 1) {
    SynthConfig c;
    c.n_facilities = 2;
    c.wells_per_facility = 3;
    c.T = 300;
    c.seed = seed;
    return c;
}

double mask_fraction(const GroundTruthLog& log) {
    double on = 0.0, total = 0.0;
    for (const auto& [id, m] : log.mask) {
        for (auto v : m) on += v;
        total += static_cast<double>(m.size());
    }
    return on / total;
}

}  // namespace

TEST_CASE("generation is deterministic per seed") {
    const auto [a, la] = generate(small_config(5));
    const auto [b, lb] = generate(small_config(5));
    CHECK(export_volve_schema(a) == export_volve_schema(b));
    CHECK(format_truth_events(la) == format_truth_events(lb));
    CHECK(format_truth_mask(la, a) == format_truth_mask(lb, b));
    const auto [c, lc] = generate(small_config(6));
    CHECK(export_volve_schema(a) != export_volve_schema(c));
}

TEST_CASE("clean physics") {
    SynthConfig cfg = small_config();
    cfg.decline_rate = 0.0;
    cfg.noise_cv = 0.0;
    cfg.downtime_rate = 0.0;
    const SynthDataset flat = generate_clean(cfg);
    for (const auto& [id, s] : flat.series) {
        // Full days only: partial-hour days scale the volume.
        const auto oil = s.column(Variable::oil_vol);
        const auto hours = s.column(Variable::on_stream_hrs);
        double q = -1.0;
        for (std::size_t t = 0; t < oil.size(); ++t) {
            if (hours[t] != 24.0) continue;
            if (q < 0.0) q = oil[t];
            CHECK(oil[t] == doctest::Approx(q).epsilon(1e-12));
        }
    }

    const SynthDataset d = generate_clean(small_config());
    CHECK(d.topology.wells.size() == 6);
    CHECK(d.topology.facilities().size() == 2);
    for (const auto& [id, s] : d.series) {
        REQUIRE(s.size() == 300);
        const auto oil = s.column(Variable::oil_vol);
        double early = 0.0, late = 0.0;
        for (std::size_t t = 0; t < 30; ++t) early += oil[t];
        for (std::size_t t = 270; t < 300; ++t) late += oil[t];
        CHECK(late < early);
        for (const auto& r : s.records) {
            for (Variable v : {Variable::oil_vol, Variable::gas_vol, Variable::water_vol}) CHECK(r.value(v) >= 0.0);
            CHECK(r.value(Variable::on_stream_hrs) >= 0.0);
            CHECK(r.value(Variable::on_stream_hrs) <= 24.0);
            if (r.value(Variable::on_stream_hrs) == 0.0) CHECK(r.value(Variable::oil_vol) == 0.0);
        }
    }
}

TEST_CASE("theft scales oil and leaves pressures alone") {
    SynthDataset d = generate_clean(small_config());
    const std::string well = d.series.begin()->first;
    const WellSeries before = d.series.at(well);
    GroundTruthEvent e;
    e.kind = AnomalyKind::theft;
    e.target_id = well;
    e.start = before.records[100].date;
    e.end = before.records[104].date;
    e.magnitude = 0.4;
    e.duration = 5;
    e.wells = {{well, 0}};
    apply_event(d, e);
    const WellSeries& after = d.series.at(well);
    for (std::size_t t = 0; t < after.size(); ++t) {
        const double want = before.records[t].value(Variable::oil_vol) * (t >= 100 && t < 105 ? 0.6 : 1.0);
        CHECK(after.records[t].value(Variable::oil_vol) == want);
        CHECK(after.records[t].value(Variable::wellhead_pressure) ==
              before.records[t].value(Variable::wellhead_pressure));
        CHECK(after.records[t].value(Variable::gas_vol) == before.records[t].value(Variable::gas_vol));
        CHECK(after.records[t].value(Variable::choke_size) == before.records[t].value(Variable::choke_size));
    }

    e.wells = {{"nope", 0}};
    CHECK_THROWS_AS(apply_event(d, e), DataError);
    e.wells = {{well, 0}};
    e.start = before.records[298].date;
    CHECK_THROWS_AS(apply_event(d, e), DataError);
}

TEST_CASE("realized truth-mask rate tracks the configured rate") {
    for (std::uint64_t seed : {1, 2, 3}) {
        SynthConfig cfg = small_config(seed);
        cfg.T = 730;
        cfg.anomalies = {AnomalySpec{AnomalyKind::theft, 0.05, 0.5, 6, 0, 0}};
        auto [d, log] = generate(cfg);
        CHECK(std::abs(mask_fraction(log) - 0.05) <= 0.01);
        std::size_t theft = 0;
        for (const auto& e : log.events) theft += e.kind == AnomalyKind::theft;
        CHECK(theft == log.events.size());
    }
}

TEST_CASE("facility events cover every member well") {
    SynthConfig cfg = small_config(9);
    cfg.anomalies = {AnomalySpec{AnomalyKind::facility_event, 0.05, 0.7, 5, 2, 3}};
    auto [d, log] = generate(cfg);
    REQUIRE(!log.events.empty());
    for (const auto& e : log.events) {
        const auto members = d.topology.wells_of(e.target_id);
        REQUIRE(e.wells.size() == members.size());
        for (const auto& [well, lag] : e.wells) {
            CHECK(lag >= 0);
            CHECK(lag <= 3);
            const auto& mask = log.mask.at(well);
            const long first = (e.start - d.series.at(well).records.front().date).count();
            for (long t = first + e.precursor + lag; t < first + e.precursor + lag + e.duration; ++t) {
                CHECK(mask[static_cast<std::size_t>(t)] == 1);
            }
        }
    }
}

TEST_CASE("mask agrees with event spans") {
    auto [d, log] = generate(small_config(11));
    std::map<std::string, std::vector<std::uint8_t>> rebuilt;
    for (const auto& [id, m] : log.mask) rebuilt[id].assign(m.size(), 0);
    for (const auto& e : log.events) {
        for (const auto& [well, lag] : e.wells) {
            const auto t0 = d.series.at(well).records.front().date;
            for (long t = (e.start - t0).count(); t <= (e.end - t0).count(); ++t) {
                rebuilt[well][static_cast<std::size_t>(t)] = 1;
            }
        }
    }
    CHECK(rebuilt == log.mask);
}

TEST_CASE("export matches the ingestion schema and round trips") {
    auto [d, log] = generate(small_config(3));
    const std::string text = export_volve_schema(d);
    const Table table = parse_table(text);
    const ColumnMap cols;
    CHECK(table.header[0] == cols.date);
    CHECK(table.header[1] == cols.well);
    for (Variable v : kAllVariables) CHECK(table.column(cols.column(v)).has_value());
    CHECK(table.rows.size() == 6 * 300);

    const auto back = build_well_series(parse_production_table(text), d.topology);
    REQUIRE(back.size() == d.series.size());
    for (const auto& [id, s] : d.series) {
        const WellSeries& b = back.at(id);
        REQUIRE(b.size() == s.size());
        for (std::size_t t = 0; t < s.size(); ++t) {
            CHECK(b.records[t].date == s.records[t].date);
            for (Variable v : kAllVariables) {
                CHECK(b.records[t].has(v) == s.records[t].has(v));
                CHECK(std::abs(b.records[t].value(v) - s.records[t].value(v)) <= 1e-9);
            }
        }
    }
}

TEST_CASE("synth config validation") {
    SynthConfig c;
    c.T = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = SynthConfig{};
    c.decline_rate = -0.1;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = SynthConfig{};
    c.anomalies = {AnomalySpec{AnomalyKind::theft, 0.95, 0.5, 6, 0, 0}};
    CHECK_THROWS_AS((void)generate(c), ConfigError);
}
