#pragma once

#include "bgk/diagnostics.hpp"

#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

namespace bgk {

/// t, rho_i ux_i uy_i uz_i T_i per species, totals, H, S, residual_ij for each pair i < j.
std::vector<std::string> csv_columns(std::size_t species_count);

/// Comma-separated row for one record, %.17g formatting, no newline.
std::string csv_row(const DiagnosticsRecord& record);

/// Streams rows as they are produced; every row is flushed.
class TimeseriesWriter {
public:
    TimeseriesWriter(const std::filesystem::path& path, std::size_t species_count);
    void write(const DiagnosticsRecord& record);

private:
    std::filesystem::path path_;
    std::size_t species_count_;
    std::ofstream out_;
};

void write_timeseries(std::span<const DiagnosticsRecord> records, const std::filesystem::path& path);

// Snapshot file: 64-byte header ("BGKS", uint32 nx ny nz, double v_min[3] v_max[3]) followed by
// nx*ny*nz doubles in node order. Native byte order.
inline constexpr std::size_t kSnapshotHeaderBytes = 64;

struct Snapshot {
    VelocityGrid grid;
    Field values;
};

void write_snapshot(const std::filesystem::path& path, const Field& values, const VelocityGrid& grid);
Snapshot read_snapshot(const std::filesystem::path& path);

} // namespace bgk
