#pragma once

#include "bgk/types.hpp"

#include <array>
#include <span>

namespace bgk {

/// Truncated tensor-product velocity mesh with midpoint quadrature.
///
/// Node (i, j, k) sits at v_min + (index + 1/2) * spacing on each axis and
/// carries the cell volume as its weight. Nodes are stored with the z index
/// varying fastest: flat = (i * ny + j) * nz + k.
class VelocityGrid {
public:
    VelocityGrid(const Vec3& v_min, const Vec3& v_max, const std::array<int, 3>& counts);

    Eigen::Index size() const { return vx_.size(); }
    const Vec3& v_min() const { return v_min_; }
    const Vec3& v_max() const { return v_max_; }
    const std::array<int, 3>& counts() const { return counts_; }
    const Vec3& spacing() const { return spacing_; }
    /// Quadrature weight of every node (uniform).
    double cell_volume() const { return cell_volume_; }
    double volume() const { return cell_volume_ * static_cast<double>(size()); }

    const Field& vx() const { return vx_; }
    const Field& vy() const { return vy_; }
    const Field& vz() const { return vz_; }
    const Field& speed_sq() const { return speed_sq_; }
    Vec3 node(Eigen::Index flat) const { return {vx_[flat], vy_[flat], vz_[flat]}; }
    Field weights() const { return Field::Constant(size(), cell_volume_); }

    /// Same bounds and counts, bit for bit.
    bool same_layout(const VelocityGrid& other) const;

private:
    Vec3 v_min_;
    Vec3 v_max_;
    std::array<int, 3> counts_;
    Vec3 spacing_;
    double cell_volume_;
    Field vx_, vy_, vz_, speed_sq_;
};

inline constexpr int kMinNodesPerAxis = 8;
inline constexpr double kDefaultTruncation = 6.0;
inline constexpr int kDefaultNodesPerAxis = 32;

VelocityGrid build_grid(const Vec3& v_min, const Vec3& v_max, const std::array<int, 3>& counts);

/// Quadrature sum over all nodes.
double integrate(const Field& field, const VelocityGrid& grid);

struct ThermalSpec {
    Vec3 u = Vec3::Zero();
    double T = 1.0;
    double mass = 1.0;
};

struct VelocityBounds {
    Vec3 v_min;
    Vec3 v_max;
};

/// Box covering u +- c * sqrt(T/m) for every entry.
VelocityBounds auto_bounds(std::span<const ThermalSpec> species, double c = kDefaultTruncation);

} // namespace bgk
