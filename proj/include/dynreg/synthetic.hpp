#pragma once

#include "dynreg/errors.hpp"
#include "dynreg/geometry.hpp"
#include "dynreg/matching.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace dynreg {

enum class SceneKind { room, corridor, outdoor_strip };

std::string to_string(SceneKind k);
SceneKind scene_kind_from_string(const std::string& name);

/// Parameters of one synthetic registration pair.
struct SceneSpec {
    SceneKind kind = SceneKind::room;
    double overlap = 0.5;                 ///< target share of each view that the other view also sees
    double noise = 0.0;                   ///< per-view Gaussian coordinate noise (m)
    double outlier_region_fraction = 0.0; ///< extra clutter per view, as a fraction of the view size
    double max_rotation_deg = 30.0;
    double max_translation = 0.5;         ///< meters
    std::uint64_t seed = 0;
    double spacing = 0.1;                 ///< Poisson-disk sampling distance (m)
    double view_fraction = 0.5;           ///< share of the scene each view covers

    void validate() const;
    friend bool operator==(const SceneSpec&, const SceneSpec&) = default;
};

/// The overlap target could not be met.
class GenerationError : public Error {
public:
    using Error::Error;
};

struct SyntheticPair {
    PointCloud src;
    PointCloud tgt;
    RigidTransform gt;                  ///< maps src coordinates onto tgt coordinates
    CorrespondenceSet gt_correspondences;  ///< the scene points both views share
    double measured_overlap = 0.0;
    RigidTransform world_from_src;
    RigidTransform world_from_tgt;
};

/**
 * @brief Two partial views of one procedurally generated scene.
 *
 * The scene (planes and boxes, Poisson-disk sampled) is ordered along a sweep
 * and each view is a contiguous run of it; the target view is then moved by a
 * random rigid transform of bounded magnitude. Deterministic per seed. Throws
 * GenerationError when the measured overlap misses the target by more than
 * 0.05 after 50 attempts.
 */
SyntheticPair generate_pair(const SceneSpec& spec);

/// Mutual-nearest-neighbor coverage within `radius` after mapping src by gt.
double measure_overlap(const PointCloud& src, const PointCloud& tgt, const RigidTransform& gt, double radius = 0.05);

/// Uniform random rigid transform: angle in [0, max_deg] about a random axis, translation length in [0, max_t].
RigidTransform random_rigid(std::uint64_t seed, double max_rotation_deg, double max_translation);

/// Named benchmark suites: "easy", "exact", "low-overlap".
std::vector<SceneSpec> make_suite(const std::string& name, std::size_t count, std::uint64_t seed);

}  // namespace dynreg
