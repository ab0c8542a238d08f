#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "flowguard/features.hpp"
#include "flowguard/ingest.hpp"
#include "flowguard/rng.hpp"
#include "flowguard/tensor.hpp"

namespace fgtest {

using namespace flowguard;

inline Day day0() { return Day{std::chrono::year{2020} / 1 / 1}; }

inline Tensor random_tensor(std::size_t rows, std::size_t cols, SplitMix64& rng, double scale = 1.0) {
    Tensor t(rows, cols);
    for (double& x : t.data()) x = scale * rng.uniform(-1.0, 1.0);
    return t;
}

/// Fully observed series with the given columns; unspecified variables are
/// set to plausible constants.
struct SeriesBuilder {
    std::string well = "W1";
    std::size_t n = 0;
    std::vector<double> oil, gas, water, hours, whp;

    [[nodiscard]] WellSeries build() const {
        WellSeries s;
        s.well_id = well;
        s.facility_id = "F1";
        s.field_id = "FIELD1";
        for (std::size_t t = 0; t < n; ++t) {
            ProductionRecord r;
            r.date = day0() + std::chrono::days{static_cast<long>(t)};
            r.well_id = well;
            r.set(Variable::oil_vol, oil.empty() ? 1000.0 : oil[t]);
            r.set(Variable::gas_vol, gas.empty() ? 100000.0 : gas[t]);
            r.set(Variable::water_vol, water.empty() ? 100.0 : water[t]);
            r.set(Variable::on_stream_hrs, hours.empty() ? 24.0 : hours[t]);
            r.set(Variable::downhole_pressure, 250.0);
            r.set(Variable::wellhead_pressure, whp.empty() ? 40.0 : whp[t]);
            r.set(Variable::wellhead_temp, 70.0);
            r.set(Variable::choke_size, 50.0);
            s.records.push_back(r);
        }
        return s;
    }
};

/// Per-test scratch directory under the system temp dir, removed on exit.
struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& name) {
        path = std::filesystem::temp_directory_path() / ("flowguard-test-" + name);
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
};

}  // namespace fgtest
