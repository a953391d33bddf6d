#pragma once

#include "dynreg/classifier.hpp"
#include "dynreg/descriptor.hpp"
#include "dynreg/errors.hpp"
#include "dynreg/geometry.hpp"
#include "dynreg/matching.hpp"
#include "dynreg/refine.hpp"
#include "dynreg/sampling.hpp"
#include "dynreg/solver.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace dynreg {

struct SamplingConfig {
    double base_voxel = 0.025;
    std::size_t levels = 5;
    std::optional<std::size_t> node_level;  ///< global coarse nodes; unset means the deepest level
    std::size_t fine_level = 2;             ///< global patches
    std::size_t local_fine_level = 1;       ///< local-stage patches
};

struct PipelineConfig {
    SamplingConfig sampling;
    DescriptorBackend descriptor;
    /// Histogram radius = factor * voxel size of the described level; 0 keeps descriptor.histogram.radius.
    double histogram_radius_factor = 2.5;
    /// Oracle bandwidth = max(descriptor.oracle.bandwidth, factor * voxel size of the level); 0 disables.
    double oracle_bandwidth_factor = 0.0;
    MatchingParams global_matching;
    MatchingParams local_matching{.k = 256, .patch_cap = 16, .kernel_scale = 0.5};
    /// false: local stages reuse global_matching (single parameter set).
    bool unique_params = true;
    SolverConfig solver;
    ClusterConfig cluster;
    /// eps per local stage (index i-1 for stage i); clamps to the last entry. Empty: cluster.eps throughout.
    std::vector<double> radius_schedule{0.125, 0.25, 0.375, 0.5};
    RefineConfig refine;
    ClassifierConfig classifier;
    int max_iterations = 4;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Named parameter sets: "indoor", "indoor-lo", "outdoor", "synthetic".
PipelineConfig preset(const std::string& name);
std::vector<std::string> preset_names();

/// Why the stage loop stopped.
enum class ExitReason { success, degraded, iteration_cap, refine_failure };

std::string to_string(ExitReason r);
ExitReason exit_reason_from_string(const std::string& name);

struct StageRecord {
    int stage = 0;                      ///< 0 = global, i = local stage i
    bool completed = false;             ///< false when refinement failed before matching
    RigidTransform transform;
    std::size_t node_count_src = 0;
    std::size_t node_count_tgt = 0;
    std::size_t candidate_count = 0;    ///< |C~|, point-level correspondences before LGR
    std::size_t inlier_count = 0;       ///< |C^|
    double score = 0.0;
    Decision decision = Decision::continue_;
    double wall_ms = 0.0;
    CorrespondenceSet candidates;       ///< C~ with pair similarity, indices into the stage's fine level
    CorrespondenceSet inliers;          ///< indices into the stage's fine level
    std::size_t fine_level = 0;
    std::string note;
};

struct IterationTrace {
    std::vector<StageRecord> stages;
    RigidTransform final_transform;
    std::size_t best_stage = 0;         ///< stage whose transform is returned
    std::size_t exit_stage = 0;         ///< last stage executed
    ExitReason exit_reason = ExitReason::iteration_cap;

    std::size_t completed_stages() const;
};

/// Registration failure that carries the partial trace.
class PipelineFailure : public RegistrationFailure {
public:
    PipelineFailure(const std::string& what, IterationTrace trace)
        : RegistrationFailure(what), trace_(std::move(trace)) {}
    const IterationTrace& trace() const { return trace_; }

private:
    IterationTrace trace_;
};

/// World frames of the two clouds, consumed only by the oracle descriptor.
struct PairContext {
    RigidTransform world_from_src;
    RigidTransform world_from_tgt;
};

struct RegistrationResult {
    RigidTransform transform;
    IterationTrace trace;
};

/// A described cloud pyramid; levels that were never needed keep empty features.
struct PreparedCloud {
    SamplingPyramid pyramid;
};

/**
 * @brief Build the pyramid and describe the levels the configuration uses.
 *
 * `side` (0 = source, 1 = target) decorrelates oracle noise between the two
 * clouds; `world_from_cloud` positions the cloud for the oracle backend.
 */
PreparedCloud prepare_cloud(const PointCloud& cloud, const PipelineConfig& config, int side,
                            const RigidTransform& world_from_cloud = RigidTransform::identity());

/// One global stage: coarse match, fine match, LGR, score and decision.
StageRecord global_stage(const PreparedCloud& src, const PreparedCloud& tgt, const PipelineConfig& config);

/**
 * @brief One local stage i >= 1 seeded by the previous stage's inliers.
 *
 * Throws RefineFailure when refinement yields no nodes.
 */
StageRecord local_stage(const PreparedCloud& src, const PreparedCloud& tgt, const StageRecord& previous, int stage,
                        std::size_t node_budget, const PipelineConfig& config);

/**
 * @brief Global registration followed by up to max_iterations local stages.
 *
 * Returns the transform of the best-scoring completed stage (earliest on
 * ties). Throws PipelineFailure when the global stage has fewer than three
 * correspondences; a refinement failure ends the loop cleanly.
 */
RegistrationResult register_pair(const PointCloud& src, const PointCloud& tgt, const PipelineConfig& config,
                                 const PairContext& context = {});

}  // namespace dynreg
