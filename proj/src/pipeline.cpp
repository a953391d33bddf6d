#include "dynreg/pipeline.hpp"

#include "dynreg/spatial_index.hpp"

#include <algorithm>
#include <chrono>

namespace dynreg {
namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    std::uint64_t x = seed ^ (a * 0x9e3779b97f4a7c15ULL) ^ (b * 0xbf58476d1ce4e5b9ULL);
    x ^= x >> 31;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 29;
    return x;
}

std::size_t node_level_of(const SamplingPyramid& pyramid, const PipelineConfig& config) {
    return config.sampling.node_level.value_or(pyramid.depth() - 1);
}

const MatchingParams& local_params(const PipelineConfig& config) {
    return config.unique_params ? config.local_matching : config.global_matching;
}

struct PatchMatches {
    std::vector<CorrespondenceSet> per_patch;
    CorrespondenceSet all;
};

/// Fine matching inside every coarse pair; indices are mapped back to the fine clouds.
PatchMatches match_patches(const CorrespondenceSet& coarse, const PatchAssignment& src_patches,
                           const PatchAssignment& tgt_patches, const PointCloud& src_fine,
                           const PointCloud& tgt_fine, const MatchingParams& params) {
    PatchMatches out;
    out.per_patch.resize(coarse.size());
    CorrespondenceSet concatenated;
    for (std::size_t p = 0; p < coarse.size(); ++p) {
        const auto& src_members = src_patches.members[coarse.pairs[p].src];
        const auto& tgt_members = tgt_patches.members[coarse.pairs[p].tgt];
        if (src_members.empty() || tgt_members.empty()) continue;
        const CorrespondenceSet local =
            fine_match(src_fine.select(src_members), tgt_fine.select(tgt_members), params);
        for (const Correspondence& c : local.pairs) {
            out.per_patch[p].add(src_members[c.src], tgt_members[c.tgt], c.weight);
        }
        concatenated.pairs.insert(concatenated.pairs.end(), out.per_patch[p].pairs.begin(),
                                  out.per_patch[p].pairs.end());
    }
    out.all = merge_unique(concatenated);
    return out;
}

/// Coarse match, patch grouping, fine match, LGR and scoring shared by both stage kinds.
void run_matching(StageRecord& record, const PointCloud& src_nodes, const PointCloud& tgt_nodes,
                  const PointCloud& src_fine, const PointCloud& tgt_fine, const MatchingParams& params,
                  const PipelineConfig& config) {
    record.node_count_src = src_nodes.size();
    record.node_count_tgt = tgt_nodes.size();
    const CorrespondenceSet coarse = coarse_match(src_nodes, tgt_nodes, params);
    const PatchAssignment src_patches = group_points(src_nodes, src_fine, params.patch_cap);
    const PatchAssignment tgt_patches = group_points(tgt_nodes, tgt_fine, params.patch_cap);
    const PatchMatches matches = match_patches(coarse, src_patches, tgt_patches, src_fine, tgt_fine, params);
    record.candidate_count = matches.all.size();
    record.candidates = matches.all;
    if (matches.all.size() < 3) {
        throw RegistrationFailure("stage " + std::to_string(record.stage) + " produced only " +
                                  std::to_string(matches.all.size()) + " correspondences");
    }
    const LgrResult lgr = local_to_global(matches.per_patch, matches.all, src_fine, tgt_fine, config.solver);
    record.transform = lgr.transform;
    record.inliers = lgr.inliers;
    record.inlier_count = lgr.inliers.size();
    record.score = stage_score(lgr.inliers, matches.all, lgr.transform, src_fine, tgt_fine,
                               config.solver.acceptance_threshold, config.classifier);
    record.completed = true;
}

void check_level(std::size_t level, std::size_t depth, const char* what) {
    if (level >= depth) {
        throw ConfigurationError(std::string(what) + " " + std::to_string(level) + " is beyond pyramid depth " +
                                 std::to_string(depth));
    }
}

}  // namespace

std::size_t IterationTrace::completed_stages() const {
    return static_cast<std::size_t>(
        std::count_if(stages.begin(), stages.end(), [](const StageRecord& s) { return s.completed; }));
}

void PipelineConfig::validate() const {
    if (!(sampling.base_voxel > 0.0)) throw ConfigurationError("base voxel must be positive");
    if (sampling.levels < 2) throw ConfigurationError("pyramid needs at least 2 levels");
    const std::size_t node_level = sampling.node_level.value_or(sampling.levels - 1);
    check_level(node_level, sampling.levels, "node level");
    check_level(sampling.fine_level, sampling.levels, "fine level");
    check_level(sampling.local_fine_level, sampling.levels, "local fine level");
    check_level(refine.search_level, sampling.levels, "refine search level");
    if (node_level <= sampling.fine_level) throw ConfigurationError("node level must be coarser than the fine level");
    if (refine.search_level < sampling.local_fine_level) {
        throw ConfigurationError("refine search level must not be finer than the local fine level");
    }
    if (max_iterations < 0) throw ConfigurationError("max_iterations must be non-negative");
    for (double r : radius_schedule) {
        if (!(r > 0.0)) throw ConfigurationError("radius schedule entries must be positive");
    }
    for (const MatchingParams* p : {&global_matching, &local_matching}) {
        if (p->k < 1 || p->patch_cap < 1) throw ConfigurationError("matching k and patch cap must be positive");
        if (p->sinkhorn_iterations < 1) throw ConfigurationError("sinkhorn needs at least one iteration");
        if (!(p->temperature > 0.0) || !(p->kernel_scale > 0.0)) {
            throw ConfigurationError("matching temperature and kernel scale must be positive");
        }
    }
    if (histogram_radius_factor < 0.0) throw ConfigurationError("histogram radius factor must be non-negative");
    if (oracle_bandwidth_factor < 0.0) throw ConfigurationError("oracle bandwidth factor must be non-negative");
    solver.validate();
    cluster.validate();
    classifier.validate();
}

std::string to_string(ExitReason r) {
    switch (r) {
        case ExitReason::success: return "success";
        case ExitReason::degraded: return "degraded";
        case ExitReason::iteration_cap: return "iteration-cap";
        case ExitReason::refine_failure: return "refine-failure";
    }
    return "iteration-cap";
}

ExitReason exit_reason_from_string(const std::string& name) {
    if (name == "success") return ExitReason::success;
    if (name == "degraded") return ExitReason::degraded;
    if (name == "iteration-cap") return ExitReason::iteration_cap;
    if (name == "refine-failure") return ExitReason::refine_failure;
    throw ParseError("unknown exit reason '" + name + "'");
}

std::vector<std::string> preset_names() { return {"indoor", "indoor-lo", "outdoor", "synthetic"}; }

PipelineConfig preset(const std::string& name) {
    PipelineConfig c;
    if (name == "indoor") {
        c.classifier.local_thresholds = {20.0, 0.0, -20.0, -40.0};
        return c;
    }
    if (name == "indoor-lo") {
        c.cluster.min_pts = 5;
        c.radius_schedule = {0.25, 0.30, 0.35, 0.40};
        c.classifier.global_threshold = 150.0;
        c.classifier.local_thresholds = {15.0, 25.0, 35.0, 45.0};
        return c;
    }
    if (name == "outdoor") {
        c.sampling.base_voxel = 0.3;
        c.sampling.levels = 6;
        c.solver.acceptance_threshold = 0.6;
        c.classifier.sigma_d = 0.6;
        c.global_matching.patch_cap = 64;
        c.local_matching.patch_cap = 32;
        c.cluster.min_pts = 5;
        c.radius_schedule = {30.0};
        c.classifier.global_threshold = 30.0;
        c.classifier.local_thresholds = {10.0, 0.0, -10.0};
        return c;
    }
    if (name == "synthetic") {
        c.sampling.base_voxel = 0.05;
        c.sampling.levels = 4;
        c.sampling.node_level = 3;
        c.sampling.fine_level = 0;
        c.sampling.local_fine_level = 0;
        c.refine.search_level = 2;
        c.descriptor.kind = DescriptorBackend::Kind::oracle;
        c.descriptor.oracle.bandwidth = 0.05;
        c.oracle_bandwidth_factor = 1.0;
        c.global_matching.k = 64;
        c.global_matching.patch_cap = 24;
        c.global_matching.sinkhorn_iterations = 20;
        c.local_matching = c.global_matching;
        c.local_matching.patch_cap = 24;
        c.local_matching.kernel_scale = 0.5;
        c.solver.acceptance_threshold = 0.03;
        c.classifier.sigma_d = 0.03;
        c.classifier.global_threshold = 60.0;
        c.classifier.local_thresholds = {5.0, 0.0, -5.0, -10.0};
        c.cluster.min_pts = 3;
        c.radius_schedule = {0.2, 0.3, 0.4, 0.5};
        return c;
    }
    throw ConfigurationError("unknown preset '" + name + "'");
}

PreparedCloud prepare_cloud(const PointCloud& cloud, const PipelineConfig& config, int side,
                            const RigidTransform& world_from_cloud) {
    PreparedCloud out;
    out.pyramid = build_pyramid(cloud, config.sampling.base_voxel, config.sampling.levels);

    std::vector<std::size_t> needed{node_level_of(out.pyramid, config), config.sampling.fine_level};
    if (config.max_iterations > 0) {
        needed.push_back(config.refine.search_level);
        needed.push_back(config.sampling.local_fine_level);
    }
    std::sort(needed.begin(), needed.end());
    needed.erase(std::unique(needed.begin(), needed.end()), needed.end());

    for (std::size_t level : needed) {
        check_level(level, out.pyramid.depth(), "pyramid level");
        PointCloud& c = out.pyramid.cloud(level);
        const SpatialIndex index(c);
        DescriptorBackend backend = config.descriptor;
        if (backend.kind == DescriptorBackend::Kind::geometric_histogram) {
            if (config.histogram_radius_factor > 0.0) {
                backend.histogram.radius = config.histogram_radius_factor * out.pyramid.voxel_sizes[level];
            }
            if (!c.has_normals()) c.normals = estimate_normals(c, index);
        } else {
            backend.oracle.frame = world_from_cloud;
            backend.oracle.bandwidth = std::max(backend.oracle.bandwidth,
                                                config.oracle_bandwidth_factor * out.pyramid.voxel_sizes[level]);
            backend.oracle.seed = mix_seed(config.descriptor.oracle.seed, static_cast<std::uint64_t>(side) + 1, level);
        }
        c = describe(c, backend, index);
    }
    return out;
}

StageRecord global_stage(const PreparedCloud& src, const PreparedCloud& tgt, const PipelineConfig& config) {
    const auto start = Clock::now();
    StageRecord record;
    record.stage = 0;
    record.fine_level = config.sampling.fine_level;
    const std::size_t node_level = node_level_of(src.pyramid, config);
    run_matching(record, src.pyramid.cloud(node_level), tgt.pyramid.cloud(node_level),
                 src.pyramid.cloud(record.fine_level), tgt.pyramid.cloud(record.fine_level),
                 config.global_matching, config);
    record.decision = decide(0, record.score, std::nullopt, config.classifier);
    record.wall_ms = elapsed_ms(start);
    return record;
}

StageRecord local_stage(const PreparedCloud& src, const PreparedCloud& tgt, const StageRecord& previous, int stage,
                        std::size_t node_budget, const PipelineConfig& config) {
    if (stage < 1) throw ContractViolation("local stages are numbered from 1");
    const auto start = Clock::now();
    StageRecord record;
    record.stage = stage;
    record.fine_level = config.sampling.local_fine_level;

    if (previous.candidates.empty()) throw RefineFailure("previous stage has no matched points to refine");
    const PointCloud& prev_src = src.pyramid.cloud(previous.fine_level);
    const PointCloud& prev_tgt = tgt.pyramid.cloud(previous.fine_level);
    std::vector<Vec3> matched_src;
    std::vector<Vec3> matched_tgt;
    std::vector<double> weights;
    for (const Correspondence& c : previous.candidates.pairs) {
        matched_src.push_back(prev_src.points[c.src]);
        matched_tgt.push_back(prev_tgt.points[c.tgt]);
        weights.push_back(c.weight);
    }

    ClusterConfig cluster = config.cluster;
    if (!config.radius_schedule.empty()) {
        const std::size_t slot = std::min(static_cast<std::size_t>(stage), config.radius_schedule.size()) - 1;
        cluster.eps = config.radius_schedule[slot];
    }
    RefineConfig refine = config.refine;
    refine.seed = mix_seed(config.seed, 0x7265666eULL, static_cast<std::uint64_t>(stage));

    const RefinedNodes nodes =
        refined_nodes(matched_src, matched_tgt, weights, src.pyramid, tgt.pyramid, cluster, refine, node_budget);
    if (nodes.src_nodes.empty() || nodes.tgt_nodes.empty()) throw RefineFailure("refinement produced no nodes");

    run_matching(record, nodes.src_nodes, nodes.tgt_nodes, src.pyramid.cloud(record.fine_level),
                 tgt.pyramid.cloud(record.fine_level), local_params(config), config);
    record.decision = decide(stage, record.score, previous.score, config.classifier);
    record.wall_ms = elapsed_ms(start);
    return record;
}

RegistrationResult register_pair(const PointCloud& src, const PointCloud& tgt, const PipelineConfig& config,
                                 const PairContext& context) {
    config.validate();
    src.validate();
    tgt.validate();
    if (src.size() < 3 || tgt.size() < 3) throw InvalidInputError("registration needs at least 3 points per cloud");

    const PreparedCloud src_prep = prepare_cloud(src, config, 0, context.world_from_src);
    const PreparedCloud tgt_prep = prepare_cloud(tgt, config, 1, context.world_from_tgt);

    RegistrationResult result;
    IterationTrace& trace = result.trace;
    try {
        trace.stages.push_back(global_stage(src_prep, tgt_prep, config));
    } catch (const RegistrationFailure& e) {
        StageRecord failed;
        failed.note = e.what();
        failed.decision = Decision::exit_degraded;
        trace.stages.push_back(failed);
        throw PipelineFailure(std::string("global registration failed: ") + e.what(), trace);
    }

    const std::size_t node_level = node_level_of(src_prep.pyramid, config);
    const std::size_t node_budget =
        std::max(src_prep.pyramid.cloud(node_level).size(), tgt_prep.pyramid.cloud(node_level).size());

    trace.exit_reason = ExitReason::iteration_cap;
    if (trace.stages.back().decision == Decision::exit_success) {
        trace.exit_reason = ExitReason::success;
    } else {
        for (int i = 1; i <= config.max_iterations; ++i) {
            const StageRecord& previous = trace.stages.back();
            try {
                trace.stages.push_back(local_stage(src_prep, tgt_prep, previous, i, node_budget, config));
            } catch (const RefineFailure& e) {
                StageRecord failed;
                failed.stage = i;
                failed.note = e.what();
                failed.decision = Decision::exit_degraded;
                trace.stages.push_back(failed);
                trace.exit_reason = ExitReason::refine_failure;
                break;
            } catch (const RegistrationFailure& e) {
                StageRecord failed;
                failed.stage = i;
                failed.note = e.what();
                failed.decision = Decision::exit_degraded;
                trace.stages.push_back(failed);
                trace.exit_reason = ExitReason::degraded;
                break;
            }
            if (trace.stages.back().decision == Decision::exit_degraded) {
                trace.exit_reason = ExitReason::degraded;
                break;
            }
        }
    }

    trace.exit_stage = trace.stages.size() - 1;
    std::size_t best = 0;
    for (std::size_t s = 1; s < trace.stages.size(); ++s) {
        if (trace.stages[s].completed && trace.stages[s].score > trace.stages[best].score) best = s;
    }
    trace.best_stage = best;
    trace.final_transform = trace.stages[best].transform;
    result.transform = trace.final_transform;
    return result;
}

}  // namespace dynreg
