#include "dynreg/sampling.hpp"

#include "dynreg/errors.hpp"
#include "dynreg/spatial_index.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_map>

namespace dynreg {
namespace {

using VoxelKey = std::array<std::int64_t, 3>;

struct VoxelKeyHash {
    std::size_t operator()(const VoxelKey& k) const noexcept {
        std::uint64_t h = 1469598103934665603ULL;
        for (std::int64_t v : k) {
            h ^= static_cast<std::uint64_t>(v) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        }
        return static_cast<std::size_t>(h);
    }
};

VoxelKey voxel_of(const Vec3& p, double voxel) {
    constexpr double kLimit = 9.0e15;
    VoxelKey key{};
    for (int a = 0; a < 3; ++a) {
        const double cell = std::floor(p[a] / voxel);
        if (!(std::abs(cell) < kLimit)) {
            throw InvalidInputError("coordinate out of range for voxel size");
        }
        key[static_cast<std::size_t>(a)] = static_cast<std::int64_t>(cell);
    }
    return key;
}

}  // namespace

PointCloud grid_downsample(const PointCloud& cloud, double voxel) {
    if (!(voxel > 0.0) || !std::isfinite(voxel)) {
        throw ConfigurationError("voxel size must be positive");
    }
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        if (!cloud.points[i].allFinite()) {
            throw InvalidInputError("non-finite coordinate at point " + std::to_string(i));
        }
    }

    const bool with_normals = cloud.has_normals();
    std::unordered_map<VoxelKey, std::size_t, VoxelKeyHash> slot_of;
    slot_of.reserve(cloud.size());
    std::vector<Vec3> sums;
    std::vector<Vec3> normal_sums;
    std::vector<std::size_t> first_member;
    std::vector<std::size_t> counts;

    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const auto [it, inserted] = slot_of.try_emplace(voxel_of(cloud.points[i], voxel), sums.size());
        if (inserted) {
            sums.push_back(Vec3::Zero());
            normal_sums.push_back(Vec3::Zero());
            first_member.push_back(i);
            counts.push_back(0);
        }
        const std::size_t s = it->second;
        sums[s] += cloud.points[i];
        if (with_normals) normal_sums[s] += cloud.normals[i];
        ++counts[s];
    }

    PointCloud out;
    out.points.reserve(sums.size());
    for (std::size_t s = 0; s < sums.size(); ++s) {
        out.points.push_back(sums[s] / static_cast<double>(counts[s]));
    }
    if (with_normals) {
        out.normals.reserve(sums.size());
        for (std::size_t s = 0; s < sums.size(); ++s) {
            const double len = normal_sums[s].norm();
            out.normals.push_back(len > 1e-9 ? Vec3(normal_sums[s] / len)
                                             : cloud.normals[first_member[s]].normalized());
        }
    }
    return out;
}

SamplingPyramid build_pyramid(const PointCloud& cloud, double base_voxel, std::size_t levels) {
    if (levels < 2) throw ConfigurationError("a pyramid needs at least 2 levels");
    if (!(base_voxel > 0.0)) throw ConfigurationError("base voxel must be positive");
    if (cloud.empty()) throw PyramidTruncationError(0, "pyramid level 0 is empty");

    SamplingPyramid pyramid;
    pyramid.levels.reserve(levels);
    pyramid.levels.push_back({cloud, {}});
    pyramid.levels.front().cloud.features.resize(0, 0);
    pyramid.voxel_sizes.push_back(base_voxel);

    for (std::size_t j = 1; j < levels; ++j) {
        const double voxel = base_voxel * std::ldexp(1.0, static_cast<int>(j));
        const PointCloud& finer = pyramid.levels[j - 1].cloud;
        PyramidLevel level;
        level.cloud = grid_downsample(finer, voxel);
        if (level.cloud.empty()) {
            throw PyramidTruncationError(static_cast<int>(j),
                                         "pyramid level " + std::to_string(j) + " is empty");
        }
        const SpatialIndex index(finer);
        level.parent_of.reserve(level.cloud.size());
        for (const Vec3& p : level.cloud.points) level.parent_of.push_back(index.nearest(p));
        pyramid.levels.push_back(std::move(level));
        pyramid.voxel_sizes.push_back(voxel);
    }
    return pyramid;
}

}  // namespace dynreg
