#include "bgk/output.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>

namespace bgk {

namespace {

void append(std::string& row, double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    row += ',';
    row += buf;
}

constexpr char kMagic[4] = {'B', 'G', 'K', 'S'};

} // namespace

std::vector<std::string> csv_columns(std::size_t species_count)
{
    std::vector<std::string> cols{"t"};
    for (std::size_t i = 1; i <= species_count; ++i)
        for (const char* name : {"rho_", "ux_", "uy_", "uz_", "T_"})
            cols.push_back(name + std::to_string(i));
    for (const char* name : {"qx_tot", "qy_tot", "qz_tot", "E_tot", "H", "S"})
        cols.emplace_back(name);
    for (std::size_t i = 1; i <= species_count; ++i)
        for (std::size_t j = i + 1; j <= species_count; ++j)
            cols.push_back("residual_" + std::to_string(i) + std::to_string(j));
    return cols;
}

std::string csv_row(const DiagnosticsRecord& r)
{
    std::string row;
    append(row, r.t);
    for (const SpeciesObservables& s : r.species) {
        append(row, s.rho);
        for (int d = 0; d < 3; ++d)
            append(row, s.u[d]);
        append(row, s.T);
    }
    for (int d = 0; d < 3; ++d)
        append(row, r.momentum[d]);
    append(row, r.energy);
    append(row, r.entropy);
    append(row, r.dissipation);
    const std::size_t n = r.species.size();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            append(row, r.residual(i, j));
    return row.substr(1);
}

TimeseriesWriter::TimeseriesWriter(const std::filesystem::path& path, std::size_t species_count)
    : path_(path), species_count_(species_count), out_(path, std::ios::binary | std::ios::trunc)
{
    if (!out_)
        throw IoError("cannot open " + path.string() + " for writing");
    const auto cols = csv_columns(species_count);
    for (std::size_t k = 0; k < cols.size(); ++k)
        out_ << (k ? "," : "") << cols[k];
    out_ << '\n' << std::flush;
    if (!out_)
        throw IoError("write to " + path.string() + " failed");
}

void TimeseriesWriter::write(const DiagnosticsRecord& record)
{
    if (record.species.size() != species_count_)
        throw ShapeError("timeseries row has the wrong number of species");
    out_ << csv_row(record) << '\n' << std::flush;
    if (!out_)
        throw IoError("write to " + path_.string() + " failed");
}

void write_timeseries(std::span<const DiagnosticsRecord> records, const std::filesystem::path& path)
{
    if (records.empty())
        throw DegenerateInputError("write_timeseries: no records");
    TimeseriesWriter w(path, records.front().species.size());
    for (const DiagnosticsRecord& r : records)
        w.write(r);
}

void write_snapshot(const std::filesystem::path& path, const Field& values, const VelocityGrid& grid)
{
    if (values.size() != grid.size())
        throw ShapeError("snapshot values do not match the grid");
    char header[kSnapshotHeaderBytes];
    std::memcpy(header, kMagic, 4);
    for (int d = 0; d < 3; ++d) {
        const std::uint32_t c = std::uint32_t(grid.counts()[d]);
        std::memcpy(header + 4 + 4 * d, &c, 4);
    }
    for (int d = 0; d < 3; ++d) {
        const double lo = grid.v_min()[d];
        const double hi = grid.v_max()[d];
        std::memcpy(header + 16 + 8 * d, &lo, 8);
        std::memcpy(header + 40 + 8 * d, &hi, 8);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot open " + path.string() + " for writing");
    out.write(header, sizeof header);
    out.write(reinterpret_cast<const char*>(values.data()), std::streamsize(values.size() * sizeof(double)));
    out.flush();
    if (!out)
        throw IoError("write to " + path.string() + " failed");
}

Snapshot read_snapshot(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open snapshot " + path.string());
    char header[kSnapshotHeaderBytes];
    if (!in.read(header, sizeof header))
        throw IoError("snapshot " + path.string() + " is shorter than its header");
    if (std::memcmp(header, kMagic, 4) != 0)
        throw IoError("snapshot " + path.string() + " has a bad magic number");
    std::array<int, 3> counts{};
    Vec3 lo, hi;
    for (int d = 0; d < 3; ++d) {
        std::uint32_t c = 0;
        std::memcpy(&c, header + 4 + 4 * d, 4);
        if (c == 0 || c > 1u << 16)
            throw IoError("snapshot " + path.string() + " has an implausible node count");
        counts[d] = int(c);
        std::memcpy(&lo[d], header + 16 + 8 * d, 8);
        std::memcpy(&hi[d], header + 40 + 8 * d, 8);
    }
    VelocityGrid grid = [&] {
        try {
            return VelocityGrid(lo, hi, counts);
        }
        catch (const Error& e) {
            throw IoError("snapshot " + path.string() + " describes an invalid grid: " + e.what());
        }
    }();
    Field values(grid.size());
    const std::streamsize bytes = std::streamsize(values.size() * sizeof(double));
    if (!in.read(reinterpret_cast<char*>(values.data()), bytes))
        throw IoError("snapshot " + path.string() + " is truncated");
    if (in.peek() != std::char_traits<char>::eof())
        throw IoError("snapshot " + path.string() + " has trailing bytes");
    return {std::move(grid), std::move(values)};
}

} // namespace bgk
