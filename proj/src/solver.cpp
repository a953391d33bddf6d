#include "dynreg/solver.hpp"

#include <Eigen/SVD>

#include <cmath>

namespace dynreg {

void SolverConfig::validate() const {
    if (!(acceptance_threshold > 0.0)) throw ConfigurationError("solver acceptance threshold must be positive");
    if (refinement_rounds < 1) throw ConfigurationError("solver needs at least one refinement round");
}

RigidTransform weighted_kabsch(std::span<const Vec3> src, std::span<const Vec3> tgt, std::span<const double> weights) {
    if (src.size() != tgt.size() || src.size() != weights.size()) {
        throw InvalidInputError("kabsch inputs have different lengths");
    }
    double total = 0.0;
    std::size_t effective = 0;
    Vec3 src_mean = Vec3::Zero();
    Vec3 tgt_mean = Vec3::Zero();
    for (std::size_t i = 0; i < src.size(); ++i) {
        const double w = weights[i];
        if (!std::isfinite(w) || w < 0.0) throw InvalidInputError("kabsch weights must be finite and non-negative");
        if (w == 0.0) continue;
        ++effective;
        total += w;
        src_mean += w * src[i];
        tgt_mean += w * tgt[i];
    }
    if (effective < 3 || !(total > 0.0)) {
        throw DegenerateGeometryError("weighted kabsch needs at least 3 positively weighted pairs");
    }
    src_mean /= total;
    tgt_mean /= total;

    Mat3 cov = Mat3::Zero();
    for (std::size_t i = 0; i < src.size(); ++i) {
        if (weights[i] == 0.0) continue;
        cov += weights[i] * (src[i] - src_mean) * (tgt[i] - tgt_mean).transpose();
    }
    Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::Vector3d sv = svd.singularValues();
    if (!(sv[0] > 0.0) || sv[1] <= 1e-10 * sv[0]) {
        throw DegenerateGeometryError("correspondences are collinear or coincident");
    }
    const Mat3& u = svd.matrixU();
    const Mat3& v = svd.matrixV();
    Mat3 d = Mat3::Identity();
    d(2, 2) = (v * u.transpose()).determinant() < 0.0 ? -1.0 : 1.0;

    RigidTransform t;
    t.rotation = v * d * u.transpose();
    t.translation = tgt_mean - t.rotation * src_mean;
    return t;
}

std::size_t count_inliers(const RigidTransform& transform, const CorrespondenceSet& corr, const PointCloud& src,
                          const PointCloud& tgt, double tau) {
    const double tau2 = tau * tau;
    std::size_t count = 0;
    for (const Correspondence& c : corr.pairs) {
        if ((transform.apply(src.points[c.src]) - tgt.points[c.tgt]).squaredNorm() < tau2) ++count;
    }
    return count;
}

CorrespondenceSet select_inliers(const RigidTransform& transform, const CorrespondenceSet& corr,
                                 const PointCloud& src, const PointCloud& tgt, double tau) {
    const double tau2 = tau * tau;
    CorrespondenceSet out;
    for (const Correspondence& c : corr.pairs) {
        if ((transform.apply(src.points[c.src]) - tgt.points[c.tgt]).squaredNorm() < tau2) out.pairs.push_back(c);
    }
    return out;
}

RigidTransform fit_correspondences(const CorrespondenceSet& corr, const PointCloud& src, const PointCloud& tgt) {
    std::vector<Vec3> xs;
    std::vector<Vec3> ys;
    std::vector<double> ws;
    xs.reserve(corr.size());
    ys.reserve(corr.size());
    ws.reserve(corr.size());
    for (const Correspondence& c : corr.pairs) {
        xs.push_back(src.points[c.src]);
        ys.push_back(tgt.points[c.tgt]);
        ws.push_back(c.weight);
    }
    return weighted_kabsch(xs, ys, ws);
}

LgrResult local_to_global(const std::vector<CorrespondenceSet>& patch_corrs, const CorrespondenceSet& all_corrs,
                          const PointCloud& src, const PointCloud& tgt, const SolverConfig& config) {
    config.validate();
    const double tau = config.acceptance_threshold;

    LgrResult result;
    result.candidate_inliers.resize(patch_corrs.size());
    std::optional<std::size_t> best;
    std::size_t best_count = 0;
    RigidTransform best_transform;
    std::size_t degenerate = 0;

    for (std::size_t p = 0; p < patch_corrs.size(); ++p) {
        if (patch_corrs[p].size() < 3) continue;
        RigidTransform candidate;
        try {
            candidate = fit_correspondences(patch_corrs[p], src, tgt);
        } catch (const DegenerateGeometryError&) {
            ++degenerate;
            continue;
        }
        const std::size_t count = count_inliers(candidate, all_corrs, src, tgt, tau);
        result.candidate_inliers[p] = count;
        if (!best || count > best_count) {
            best = p;
            best_count = count;
            best_transform = candidate;
        }
    }
    if (!best) {
        throw RegistrationFailure("no patch yielded a candidate transform (" + std::to_string(patch_corrs.size()) +
                                  " patches, " + std::to_string(degenerate) + " degenerate, " +
                                  std::to_string(all_corrs.size()) + " correspondences)");
    }

    result.selected_patch = *best;
    result.transform = best_transform;
    result.inliers = select_inliers(best_transform, all_corrs, src, tgt, tau);

    for (int round = 0; round < config.refinement_rounds; ++round) {
        if (result.inliers.size() < 3) break;
        RigidTransform refit;
        try {
            refit = fit_correspondences(result.inliers, src, tgt);
        } catch (const DegenerateGeometryError&) {
            break;
        }
        CorrespondenceSet next = select_inliers(refit, all_corrs, src, tgt, tau);
        if (next.size() < result.inliers.size()) break;
        result.transform = refit;
        result.inliers = std::move(next);
        ++result.refinement_rounds_applied;
    }
    return result;
}

}  // namespace dynreg
