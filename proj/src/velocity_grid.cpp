#include "bgk/velocity_grid.hpp"

#include <cmath>
#include <string>

namespace bgk {

VelocityGrid::VelocityGrid(const Vec3& v_min, const Vec3& v_max, const std::array<int, 3>& counts)
    : v_min_(v_min), v_max_(v_max), counts_(counts)
{
    for (int a = 0; a < 3; ++a) {
        if (!std::isfinite(v_min[a]) || !std::isfinite(v_max[a]) || !(v_min[a] < v_max[a]))
            throw ConfigError("velocity grid: axis " + std::to_string(a) + " needs finite v_min < v_max");
        if (counts[a] < kMinNodesPerAxis)
            throw ConfigError("velocity grid: axis " + std::to_string(a) + " needs at least " +
                              std::to_string(kMinNodesPerAxis) + " nodes, got " + std::to_string(counts[a]));
        spacing_[a] = (v_max[a] - v_min[a]) / counts[a];
    }
    cell_volume_ = spacing_.prod();

    const Eigen::Index n = Eigen::Index(counts[0]) * counts[1] * counts[2];
    vx_.resize(n);
    vy_.resize(n);
    vz_.resize(n);
    Eigen::Index flat = 0;
    for (int i = 0; i < counts[0]; ++i) {
        const double x = v_min[0] + (i + 0.5) * spacing_[0];
        for (int j = 0; j < counts[1]; ++j) {
            const double y = v_min[1] + (j + 0.5) * spacing_[1];
            for (int k = 0; k < counts[2]; ++k, ++flat) {
                vx_[flat] = x;
                vy_[flat] = y;
                vz_[flat] = v_min[2] + (k + 0.5) * spacing_[2];
            }
        }
    }
    speed_sq_ = vx_.square() + vy_.square() + vz_.square();
}

bool VelocityGrid::same_layout(const VelocityGrid& other) const
{
    return counts_ == other.counts_ && v_min_ == other.v_min_ && v_max_ == other.v_max_;
}

VelocityGrid build_grid(const Vec3& v_min, const Vec3& v_max, const std::array<int, 3>& counts)
{
    return VelocityGrid(v_min, v_max, counts);
}

double integrate(const Field& field, const VelocityGrid& grid)
{
    if (field.size() != grid.size())
        throw ShapeError("integrate: field has " + std::to_string(field.size()) + " values, grid has " +
                         std::to_string(grid.size()) + " nodes");
    return grid.cell_volume() * field.sum();
}

VelocityBounds auto_bounds(std::span<const ThermalSpec> species, double c)
{
    if (species.empty())
        throw ConfigError("auto_bounds: no species given");
    if (!(c > 0.0))
        throw ConfigError("auto_bounds: truncation factor must be positive");
    VelocityBounds b{Vec3::Constant(INFINITY), Vec3::Constant(-INFINITY)};
    for (const auto& s : species) {
        if (!(s.T > 0.0) || !(s.mass > 0.0))
            throw ConfigError("auto_bounds: temperature and mass must be positive");
        const double width = c * std::sqrt(s.T / s.mass);
        b.v_min = b.v_min.cwiseMin((s.u.array() - width).matrix());
        b.v_max = b.v_max.cwiseMax((s.u.array() + width).matrix());
    }
    return b;
}

} // namespace bgk
