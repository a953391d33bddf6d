#pragma once

#include "dynreg/geometry.hpp"
#include "dynreg/spatial_index.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace dynreg {

/// Local histogram of (normal deviation angle, normalized distance) over a radius neighborhood.
struct HistogramParams {
    double radius = 0.25;  ///< neighborhood radius in meters
    int angle_bins = 11;
    int radial_bins = 5;
};

/**
 * Synthetic features derived from each point's position in a shared world
 * frame, so that corresponding points of two views get matching features.
 * Stands in for a learned encoder whose quality is under test control.
 */
struct OracleParams {
    int width = 32;
    double bandwidth = 0.1;          ///< spatial length scale of the features (m)
    double noise = 0.0;              ///< std-dev of additive per-dimension Gaussian noise
    double outlier_fraction = 0.0;   ///< share of points whose feature is replaced by a random one
    std::uint64_t seed = 0;          ///< drives noise and outlier choice
    std::uint64_t basis_seed = 0x5eedULL;  ///< drives the shared feature basis
    RigidTransform frame;            ///< world_from_cloud
};

struct DescriptorBackend {
    enum class Kind { geometric_histogram, oracle };

    Kind kind = Kind::geometric_histogram;
    HistogramParams histogram;
    OracleParams oracle;

    int width() const {
        return kind == Kind::oracle ? oracle.width : histogram.angle_bins * histogram.radial_bins;
    }
};

std::string to_string(DescriptorBackend::Kind kind);
DescriptorBackend::Kind descriptor_kind_from_string(const std::string& name);

/**
 * @brief Populate `features` for every point (L2-normalized rows).
 *
 * `index` must be built over `cloud`. The histogram backend needs normals and
 * throws ConfigurationError without them.
 */
PointCloud describe(const PointCloud& cloud, const DescriptorBackend& backend, const SpatialIndex& index);

/// PCA normals over the k nearest neighbors; sign is arbitrary.
std::vector<Vec3> estimate_normals(const PointCloud& cloud, const SpatialIndex& index, std::size_t k = 16);

/// Indices that the oracle backend corrupts for a cloud of size n.
std::vector<std::size_t> oracle_outlier_indices(std::size_t n, double fraction, std::uint64_t seed);

}  // namespace dynreg
