#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace qdiss {

// All numeric fields are written with enough digits to round-trip exactly, so
// repeated runs with the same inputs produce byte-identical files.
std::string format_double(double v);

struct SteadyColumn {
    std::vector<double> omega;
    std::vector<double> e_inf;
    std::vector<double> se;  // empty when the run carried no ensemble spread
};

struct TimeSeriesTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

void write_populations_csv(const std::string& path, const std::vector<double>& t,
                           const std::vector<std::vector<double>>& p,
                           const std::vector<double>& sigma_z);

// Long-format raster: one row per (omega, t) pair. d and e hold
// omega.size() * t.size() entries, time fastest.
void write_dissipation_csv(const std::string& path, const std::vector<double>& omega,
                           const std::vector<double>& t, const std::vector<double>& d,
                           const std::vector<double>& e);

void write_steady_csv(const std::string& path, const SteadyColumn& col);

void write_manifest(const std::string& path, const nlohmann::json& j);

SteadyColumn read_steady_csv(const std::string& path);
TimeSeriesTable read_csv_table(const std::string& path);

struct ChannelComparison {
    int channel = 0;
    std::size_t n_points = 0;
    double l1 = 0.0;       // grid-weighted integral of |a - b|
    double l2 = 0.0;
    double sup = 0.0;
    double scale = 0.0;    // sup |a|, for relative context
};

struct CompareReport {
    std::vector<ChannelComparison> channels;
    bool interpolated = false;
    std::string format() const;
    nlohmann::json to_json() const;
};

// Compares the steady dissipation columns of two run directories. Grids must
// agree exactly unless interpolation is allowed, in which case B is sampled
// onto the overlapping part of A's grid.
CompareReport compare_runs(const std::string& dir_a, const std::string& dir_b,
                           bool allow_interp);

}  // namespace qdiss
