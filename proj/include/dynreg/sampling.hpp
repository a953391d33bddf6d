#pragma once

#include "dynreg/geometry.hpp"

#include <cstddef>
#include <vector>

namespace dynreg {

/**
 * @brief Voxel-grid downsampling.
 *
 * One output point per occupied voxel at the centroid of its members, emitted
 * in order of first occupancy. Normals are averaged and renormalized; when a
 * voxel's normals cancel out, the first member's normal is kept. Features are
 * not carried over (they are recomputed per level).
 */
PointCloud grid_downsample(const PointCloud& cloud, double voxel);

struct PyramidLevel {
    PointCloud cloud;
    /// For level j >= 1: index of the nearest level j-1 point for every level j point.
    /// Empty for level 0.
    std::vector<std::size_t> parent_of;
};

/// The multi-resolution hierarchy used for coarse nodes and fine patches.
struct SamplingPyramid {
    std::vector<PyramidLevel> levels;
    std::vector<double> voxel_sizes;

    std::size_t depth() const { return levels.size(); }
    const PointCloud& cloud(std::size_t level) const { return levels.at(level).cloud; }
    PointCloud& cloud(std::size_t level) { return levels.at(level).cloud; }
};

/**
 * Level 0 is the input cloud itself; level j >= 1 is level j-1 downsampled at
 * base_voxel * 2^j. Throws PyramidTruncationError when a level is empty and
 * ConfigurationError for levels < 2 or a non-positive voxel.
 */
SamplingPyramid build_pyramid(const PointCloud& cloud, double base_voxel, std::size_t levels);

}  // namespace dynreg
