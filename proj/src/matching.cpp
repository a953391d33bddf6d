#include "dynreg/matching.hpp"

#include "dynreg/errors.hpp"
#include "dynreg/spatial_index.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <unordered_map>

namespace dynreg {
namespace {

/// Logit spread below which Sinkhorn runs on exponentiated scalings instead of log potentials.
constexpr double kScalingDomainRange = 60.0;

struct PairKeyHash {
    std::size_t operator()(const std::pair<std::size_t, std::size_t>& k) const noexcept {
        return std::hash<std::size_t>()(k.first) * 0x9e3779b97f4a7c15ULL ^ std::hash<std::size_t>()(k.second);
    }
};

double median_of(std::vector<double> values) {
    if (values.empty()) return 0.0;
    const std::size_t mid = values.size() / 2;
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
    const double upper = values[mid];
    if (values.size() % 2 == 1) return upper;
    const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

void require_features(const PointCloud& a, const PointCloud& b) {
    if (!a.has_features() || !b.has_features()) {
        throw ConfigurationError("matching requires features on both clouds");
    }
    if (a.feature_width() != b.feature_width()) {
        throw ConfigurationError("feature widths differ: " + std::to_string(a.feature_width()) + " vs " +
                                 std::to_string(b.feature_width()));
    }
}

}  // namespace

void CorrespondenceSet::validate(std::size_t src_size, std::size_t tgt_size) const {
    std::unordered_map<std::pair<std::size_t, std::size_t>, int, PairKeyHash> seen;
    seen.reserve(pairs.size());
    for (const Correspondence& c : pairs) {
        if (c.src >= src_size || c.tgt >= tgt_size) throw InvalidInputError("correspondence index out of range");
        if (!std::isfinite(c.weight) || c.weight < 0.0 || c.weight > 1.0) {
            throw InvalidInputError("correspondence weight outside [0, 1]");
        }
        if (!seen.emplace(std::make_pair(c.src, c.tgt), 0).second) {
            throw InvalidInputError("duplicate correspondence");
        }
    }
}

CorrespondenceSet merge_unique(const CorrespondenceSet& corr) {
    CorrespondenceSet out;
    out.pairs.reserve(corr.size());
    std::unordered_map<std::pair<std::size_t, std::size_t>, std::size_t, PairKeyHash> slot;
    slot.reserve(corr.size());
    for (const Correspondence& c : corr.pairs) {
        const auto [it, inserted] = slot.emplace(std::make_pair(c.src, c.tgt), out.pairs.size());
        if (inserted) {
            out.pairs.push_back(c);
        } else {
            out.pairs[it->second].weight = std::max(out.pairs[it->second].weight, c.weight);
        }
    }
    return out;
}

Eigen::MatrixXd sinkhorn_augmented(const Eigen::MatrixXd& scores, int iterations, double dustbin_logit) {
    const Eigen::Index m = scores.rows();
    const Eigen::Index n = scores.cols();
    if (!scores.allFinite() || !std::isfinite(dustbin_logit)) {
        throw InvalidInputError("sinkhorn scores must be finite");
    }
    if (m == 0 || n == 0) {
        // Everything that exists goes to the dustbin.
        Eigen::MatrixXd out = Eigen::MatrixXd::Zero(m + 1, n + 1);
        out.col(n).head(m).setOnes();
        out.row(m).head(n).setOnes();
        return out;
    }

    Eigen::MatrixXd z(m + 1, n + 1);
    z.topLeftCorner(m, n) = scores;
    z.col(n).setConstant(dustbin_logit);
    z.row(m).setConstant(dustbin_logit);

    const double norm = -std::log(static_cast<double>(m + n));
    Eigen::VectorXd log_mu = Eigen::VectorXd::Constant(m + 1, norm);
    log_mu[m] = std::log(static_cast<double>(n)) + norm;
    Eigen::VectorXd log_nu = Eigen::VectorXd::Constant(n + 1, norm);
    log_nu[n] = std::log(static_cast<double>(m)) + norm;

    const Eigen::Index rows = m + 1;
    const Eigen::Index cols = n + 1;

    const double z_max = z.maxCoeff();
    if (z_max - z.minCoeff() < kScalingDomainRange) {
        // Same iteration in the scaling domain: exponentials are taken once and
        // every entry of the kernel stays within exp(-kScalingDomainRange) of 1.
        const Eigen::MatrixXd kernel = (z.array() - z_max).exp().matrix();
        const Eigen::VectorXd mu = log_mu.array().exp().matrix();
        const Eigen::VectorXd nu = log_nu.array().exp().matrix();
        Eigen::VectorXd a = Eigen::VectorXd::Ones(rows);
        Eigen::VectorXd b = Eigen::VectorXd::Ones(cols);
        for (int it = 0; it < iterations; ++it) {
            a = mu.cwiseQuotient(kernel * b);
            b = nu.cwiseQuotient(kernel.transpose() * a);
        }
        return (a.asDiagonal() * kernel * b.asDiagonal()) * static_cast<double>(m + n);
    }

    Eigen::VectorXd u = Eigen::VectorXd::Zero(m + 1);
    Eigen::VectorXd v = Eigen::VectorXd::Zero(n + 1);

    for (int it = 0; it < iterations; ++it) {
        for (Eigen::Index r = 0; r < rows; ++r) {
            double mx = -std::numeric_limits<double>::infinity();
            for (Eigen::Index c = 0; c < cols; ++c) mx = std::max(mx, z(r, c) + v[c]);
            double s = 0.0;
            for (Eigen::Index c = 0; c < cols; ++c) s += std::exp(z(r, c) + v[c] - mx);
            u[r] = log_mu[r] - (mx + std::log(s));
        }
        for (Eigen::Index c = 0; c < cols; ++c) {
            const double* col = z.col(c).data();
            double mx = -std::numeric_limits<double>::infinity();
            for (Eigen::Index r = 0; r < rows; ++r) mx = std::max(mx, col[r] + u[r]);
            double s = 0.0;
            for (Eigen::Index r = 0; r < rows; ++r) s += std::exp(col[r] + u[r] - mx);
            v[c] = log_nu[c] - (mx + std::log(s));
        }
    }

    Eigen::MatrixXd p(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c) {
        for (Eigen::Index r = 0; r < rows; ++r) p(r, c) = std::exp(z(r, c) + u[r] + v[c] - norm);
    }
    return p;
}

Eigen::MatrixXd sinkhorn_normalize(const Eigen::MatrixXd& scores, int iterations, double dustbin_logit) {
    return sinkhorn_augmented(scores, iterations, dustbin_logit).topLeftCorner(scores.rows(), scores.cols());
}

Eigen::MatrixXd feature_similarity(const FeatureMatrix& src, const FeatureMatrix& tgt, double kernel_scale) {
    if (src.cols() != tgt.cols()) throw ConfigurationError("feature widths differ");
    if (!(kernel_scale > 0.0)) throw ConfigurationError("kernel scale must be positive");
    const Eigen::VectorXd src_sq = src.rowwise().squaredNorm();
    const Eigen::VectorXd tgt_sq = tgt.rowwise().squaredNorm();
    Eigen::MatrixXd d2 = -2.0 * (src * tgt.transpose());
    d2.colwise() += src_sq;
    d2.rowwise() += tgt_sq.transpose();
    d2 = d2.cwiseMax(0.0);

    std::vector<double> dist(static_cast<std::size_t>(d2.size()));
    for (Eigen::Index i = 0; i < d2.size(); ++i) dist[static_cast<std::size_t>(i)] = std::sqrt(d2.data()[i]);
    const double med = median_of(std::move(dist));
    const double sigma = kernel_scale * (med > 1e-12 ? med : 1.0);
    return (-d2.array() / (2.0 * sigma * sigma)).exp().matrix();
}

CorrespondenceSet coarse_match(const PointCloud& src_nodes, const PointCloud& tgt_nodes, const MatchingParams& params) {
    require_features(src_nodes, tgt_nodes);
    if (params.k < 1) throw ConfigurationError("coarse k must be at least 1");

    const Eigen::MatrixXd sim = feature_similarity(src_nodes.features, tgt_nodes.features, params.kernel_scale);
    const Eigen::MatrixXd transport =
        sinkhorn_normalize(sim / params.temperature, params.sinkhorn_iterations, params.dustbin_logit);

    struct Entry {
        double score;
        std::size_t i;
        std::size_t j;
    };
    std::vector<Entry> entries;
    entries.reserve(static_cast<std::size_t>(transport.size()));
    for (Eigen::Index i = 0; i < transport.rows(); ++i) {
        for (Eigen::Index j = 0; j < transport.cols(); ++j) {
            entries.push_back({transport(i, j), static_cast<std::size_t>(i), static_cast<std::size_t>(j)});
        }
    }
    const std::size_t k = std::min(params.k, entries.size());
    std::partial_sort(entries.begin(), entries.begin() + static_cast<std::ptrdiff_t>(k), entries.end(),
                      [](const Entry& a, const Entry& b) {
                          if (a.score != b.score) return a.score > b.score;
                          return a.i != b.i ? a.i < b.i : a.j < b.j;
                      });
    CorrespondenceSet out;
    out.pairs.reserve(k);
    for (std::size_t e = 0; e < k; ++e) {
        out.add(entries[e].i, entries[e].j, std::clamp(entries[e].score, 0.0, 1.0));
    }
    return out;
}

PatchAssignment group_points(const PointCloud& nodes, const PointCloud& fine, std::size_t cap) {
    if (nodes.empty()) throw InvalidInputError("cannot group points around an empty node set");
    const SpatialIndex index(nodes);
    std::vector<std::vector<Neighbor>> buckets(nodes.size());
    for (std::size_t i = 0; i < fine.size(); ++i) {
        const Neighbor nb = index.knn(fine.points[i], 1).front();
        buckets[nb.index].push_back({i, nb.distance2});
    }
    PatchAssignment out;
    out.members.resize(nodes.size());
    for (std::size_t n = 0; n < nodes.size(); ++n) {
        auto& b = buckets[n];
        std::sort(b.begin(), b.end());
        if (b.size() > cap) b.resize(cap);
        out.members[n].reserve(b.size());
        for (const Neighbor& nb : b) out.members[n].push_back(nb.index);
    }
    return out;
}

PatchAssignment group_points(const SamplingPyramid& pyramid, std::size_t node_level, std::size_t fine_level,
                             std::size_t cap) {
    if (node_level <= fine_level) throw ConfigurationError("node level must be coarser than the fine level");
    if (node_level >= pyramid.depth()) throw ConfigurationError("node level beyond pyramid depth");
    for (std::size_t level : {node_level, fine_level}) {
        if (pyramid.cloud(level).empty()) {
            throw PyramidTruncationError(static_cast<int>(level), "pyramid level " + std::to_string(level) + " is empty");
        }
    }
    return group_points(pyramid.cloud(node_level), pyramid.cloud(fine_level), cap);
}

Eigen::MatrixXd fine_transport(const PointCloud& src_patch, const PointCloud& tgt_patch, const MatchingParams& params) {
    require_features(src_patch, tgt_patch);
    const Eigen::MatrixXd sim = feature_similarity(src_patch.features, tgt_patch.features, params.kernel_scale);
    return sinkhorn_augmented(sim / params.temperature, params.sinkhorn_iterations, params.dustbin_logit);
}

CorrespondenceSet fine_match(const PointCloud& src_patch, const PointCloud& tgt_patch, const MatchingParams& params) {
    CorrespondenceSet out;
    if (src_patch.empty() || tgt_patch.empty()) return out;
    const Eigen::MatrixXd p = fine_transport(src_patch, tgt_patch, params);
    const Eigen::Index m = p.rows() - 1;
    const Eigen::Index n = p.cols() - 1;

    // Column argmax over real rows plus the dustbin row; first maximum wins.
    std::vector<Eigen::Index> col_best(static_cast<std::size_t>(n));
    for (Eigen::Index j = 0; j < n; ++j) {
        Eigen::Index best = 0;
        for (Eigen::Index i = 1; i <= m; ++i) {
            if (p(i, j) > p(best, j)) best = i;
        }
        col_best[static_cast<std::size_t>(j)] = best;
    }
    for (Eigen::Index i = 0; i < m; ++i) {
        Eigen::Index best = 0;
        for (Eigen::Index j = 1; j <= n; ++j) {
            if (p(i, j) > p(i, best)) best = j;
        }
        if (best == n) continue;
        if (col_best[static_cast<std::size_t>(best)] != i) continue;
        out.add(static_cast<std::size_t>(i), static_cast<std::size_t>(best), std::clamp(p(i, best), 0.0, 1.0));
    }
    return out;
}

}  // namespace dynreg
