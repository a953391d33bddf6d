#include "oracles.hpp"

#include "dynreg/descriptor.hpp"
#include "dynreg/errors.hpp"
#include "dynreg/matching.hpp"
#include "dynreg/sampling.hpp"
#include "dynreg/spatial_index.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

using namespace dynreg;

namespace {

PointCloud oracle_described(const std::vector<Vec3>& pts, const RigidTransform& frame = {}, double outliers = 0.0,
                            std::uint64_t seed = 0) {
    PointCloud c;
    c.points = pts;
    DescriptorBackend b;
    b.kind = DescriptorBackend::Kind::oracle;
    b.oracle.bandwidth = 0.2;
    b.oracle.frame = frame;
    b.oracle.outlier_fraction = outliers;
    b.oracle.seed = seed;
    return describe(c, b, SpatialIndex(c));
}

void expect_marginals(const Eigen::MatrixXd& p, double tol) {
    const Eigen::Index m = p.rows() - 1;
    const Eigen::Index n = p.cols() - 1;
    for (Eigen::Index i = 0; i < m; ++i) EXPECT_NEAR(p.row(i).sum(), 1.0, tol);
    for (Eigen::Index j = 0; j < n; ++j) EXPECT_NEAR(p.col(j).sum(), 1.0, tol);
    EXPECT_NEAR(p.row(m).sum(), static_cast<double>(n), tol);
    EXPECT_NEAR(p.col(n).sum(), static_cast<double>(m), tol);
}

/// Points on a plane z = 0 plus a sharp ridge along x = 0.
PointCloud plane_and_edge() {
    PointCloud c;
    for (int i = -20; i <= 20; ++i) {
        for (int j = -20; j <= 20; ++j) {
            const double x = i * 0.02;
            const double y = j * 0.02;
            c.points.emplace_back(x, y, 0.0);
            c.normals.emplace_back(0.0, 0.0, 1.0);
        }
    }
    for (int j = -20; j <= 20; ++j) {
        for (int k = 1; k <= 10; ++k) {
            c.points.emplace_back(0.0, j * 0.02, k * 0.02);
            c.normals.emplace_back(1.0, 0.0, 0.0);
        }
    }
    return c;
}

}  // namespace

TEST(Descriptor, OracleFeaturesIdenticalAcrossRigidCopies) {
    std::mt19937_64 rng(2);
    const auto pts = oracle::random_points(rng, 50, 1.0);
    const RigidTransform t = oracle::random_transform(rng, 1.0);
    std::vector<Vec3> moved;
    for (const Vec3& p : pts) moved.push_back(t.apply(p));
    const PointCloud a = oracle_described(pts);
    const PointCloud b = oracle_described(moved, t.inverse());
    EXPECT_LT((a.features - b.features).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Descriptor, OracleOutlierCountAndDeterminism) {
    std::mt19937_64 rng(9);
    const auto pts = oracle::random_points(rng, 101, 1.0);
    const PointCloud clean = oracle_described(pts);
    const PointCloud a = oracle_described(pts, {}, 0.3, 7);
    const PointCloud b = oracle_described(pts, {}, 0.3, 7);
    EXPECT_EQ(a.features, b.features);
    std::size_t changed = 0;
    for (Eigen::Index i = 0; i < a.features.rows(); ++i) {
        if ((a.features.row(i) - clean.features.row(i)).norm() > 0.0) ++changed;
    }
    EXPECT_EQ(changed, 31u);  // ceil(0.3 * 101)
    EXPECT_EQ(oracle_outlier_indices(101, 0.3, 7).size(), 31u);
}

TEST(Descriptor, FeaturesAreUnitRows) {
    std::mt19937_64 rng(4);
    const PointCloud a = oracle_described(oracle::random_points(rng, 30, 1.0), {}, 0.5, 3);
    for (Eigen::Index i = 0; i < a.features.rows(); ++i) EXPECT_NEAR(a.features.row(i).norm(), 1.0, 1e-12);
}

TEST(Descriptor, HistogramRequiresNormals) {
    PointCloud c;
    c.points = {Vec3::Zero(), Vec3::UnitX()};
    DescriptorBackend b;
    EXPECT_THROW(describe(c, b, SpatialIndex(c)), ConfigurationError);
}

TEST(Descriptor, HistogramSeparatesPlaneFromEdge) {
    const PointCloud c = plane_and_edge();
    DescriptorBackend b;
    b.histogram.radius = 0.1037;  // off the lattice spacing, so no neighbor sits on a bin edge
    const PointCloud d = describe(c, b, SpatialIndex(c));
    EXPECT_EQ(d.feature_width(), 55);
    const std::size_t plane = oracle::nearest(c.points, Vec3(0.3, 0.3, 0.0));
    // A ridge point just above the crease sees mostly perpendicular plane normals.
    const std::size_t edge = oracle::nearest(c.points, Vec3(0.0, 0.0, 0.02));
    const double cosine = d.features.row(static_cast<Eigen::Index>(plane)).dot(d.features.row(static_cast<Eigen::Index>(edge)));
    EXPECT_LT(cosine, 0.9);
}

TEST(Descriptor, HistogramIsRigidInvariant) {
    const PointCloud c = plane_and_edge();
    std::mt19937_64 rng(12);
    const RigidTransform t = oracle::random_transform(rng, 2.0);
    const PointCloud moved = apply_transform(c, t);
    DescriptorBackend b;
    b.histogram.radius = 0.1037;  // off the lattice spacing, so no neighbor sits on a bin edge
    const PointCloud d0 = describe(c, b, SpatialIndex(c));
    const PointCloud d1 = describe(moved, b, SpatialIndex(moved));
    EXPECT_LT((d0.features - d1.features).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Sinkhorn, DominantEntriesReachMarginals) {
    Eigen::MatrixXd s(3, 3);
    s << 5, 0.1, 0.2, 0.3, 6, 0.1, 0.2, 0.1, 4;
    expect_marginals(sinkhorn_augmented(s, 100, 1.0), 1e-6);
}

TEST(Sinkhorn, RandomMatrixMarginals) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    Eigen::MatrixXd s(8, 6);
    for (Eigen::Index i = 0; i < s.size(); ++i) s.data()[i] = u(rng);
    expect_marginals(sinkhorn_augmented(s, 100, 1.0), 1e-6);
    const Eigen::MatrixXd block = sinkhorn_normalize(s, 100, 1.0);
    EXPECT_EQ(block.rows(), 8);
    EXPECT_EQ(block.cols(), 6);
}

TEST(Sinkhorn, OneByOne) {
    Eigen::MatrixXd s(1, 1);
    s << 3.7;
    expect_marginals(sinkhorn_augmented(s, 100, 1.0), 1e-6);
}

TEST(Sinkhorn, UniformScoresGiveUniformTransport) {
    const Eigen::MatrixXd p = sinkhorn_normalize(Eigen::MatrixXd::Constant(4, 4, 0.7), 100, 1.0);
    EXPECT_LT((p.array() - p(0, 0)).abs().maxCoeff(), 1e-6);
}

TEST(Sinkhorn, WideLogitRangeStaysFinite) {
    Eigen::MatrixXd s(3, 4);
    s << 500, -300, 0, 1, 2, 400, -500, 3, 0, 0, 0, 0;
    // The optimum sits on the boundary here, so rows converge slowly; columns are exact after the last pass.
    const Eigen::MatrixXd p = sinkhorn_augmented(s, 100, 1.0);
    EXPECT_TRUE(p.allFinite());
    for (Eigen::Index j = 0; j < 4; ++j) EXPECT_NEAR(p.col(j).sum(), 1.0, 1e-12);
    EXPECT_NEAR(p.col(4).sum(), 3.0, 1e-12);
    for (Eigen::Index i = 0; i < 3; ++i) EXPECT_NEAR(p.row(i).sum(), 1.0, 1e-2);
}

TEST(CoarseMatch, SelfMatchGivesDiagonal) {
    std::mt19937_64 rng(3);
    const PointCloud nodes = oracle_described(oracle::random_points(rng, 5, 2.0));
    MatchingParams params;
    params.k = 5;
    const CorrespondenceSet c = coarse_match(nodes, nodes, params);
    ASSERT_EQ(c.size(), 5u);
    for (const auto& p : c.pairs) EXPECT_EQ(p.src, p.tgt);
}

TEST(CoarseMatch, TopOneIsArgmaxOfNormalizedMatrix) {
    std::mt19937_64 rng(13);
    const PointCloud a = oracle_described(oracle::random_points(rng, 6, 1.0));
    const PointCloud b = oracle_described(oracle::random_points(rng, 7, 1.0));
    MatchingParams params;
    params.k = 1;
    const Eigen::MatrixXd sim = feature_similarity(a.features, b.features, params.kernel_scale);
    const Eigen::MatrixXd t = sinkhorn_normalize(sim / params.temperature, params.sinkhorn_iterations, params.dustbin_logit);
    Eigen::Index bi = 0;
    Eigen::Index bj = 0;
    for (Eigen::Index i = 0; i < t.rows(); ++i) {
        for (Eigen::Index j = 0; j < t.cols(); ++j) {
            if (t(i, j) > t(bi, bj)) {
                bi = i;
                bj = j;
            }
        }
    }
    const CorrespondenceSet c = coarse_match(a, b, params);
    ASSERT_EQ(c.size(), 1u);
    EXPECT_EQ(c.pairs[0].src, static_cast<std::size_t>(bi));
    EXPECT_EQ(c.pairs[0].tgt, static_cast<std::size_t>(bj));
}

TEST(CoarseMatch, LargeKClampsAndFeaturelessThrows) {
    std::mt19937_64 rng(1);
    const PointCloud a = oracle_described(oracle::random_points(rng, 3, 1.0));
    const PointCloud b = oracle_described(oracle::random_points(rng, 4, 1.0));
    MatchingParams params;
    params.k = 1000;
    const CorrespondenceSet c = coarse_match(a, b, params);
    EXPECT_EQ(c.size(), 12u);
    EXPECT_NO_THROW(c.validate(3, 4));
    PointCloud bare;
    bare.points = a.points;
    EXPECT_THROW(coarse_match(bare, b, params), ConfigurationError);
}

TEST(GroupPoints, FullCapEqualsNearestPartition) {
    std::mt19937_64 rng(6);
    PointCloud nodes;
    nodes.points = oracle::random_points(rng, 8, 1.0);
    PointCloud fine;
    fine.points = oracle::random_points(rng, 200, 1.0);
    const PatchAssignment a = group_points(nodes, fine, 1000);
    std::vector<std::vector<std::size_t>> expected(8);
    for (std::size_t i = 0; i < fine.size(); ++i) expected[oracle::nearest(nodes.points, fine.points[i])].push_back(i);
    for (std::size_t n = 0; n < 8; ++n) {
        auto got = a.members[n];
        std::sort(got.begin(), got.end());
        EXPECT_EQ(got, expected[n]);
    }
}

TEST(GroupPoints, CapKeepsNearestAndSingleNodeTakesAll) {
    std::mt19937_64 rng(7);
    PointCloud node;
    node.points = {Vec3::Zero()};
    PointCloud fine;
    fine.points = oracle::random_points(rng, 50, 1.0);
    const PatchAssignment all = group_points(node, fine, 100);
    EXPECT_EQ(all.members[0].size(), 50u);
    const PatchAssignment capped = group_points(node, fine, 5);
    EXPECT_EQ(capped.members[0], oracle::knn(fine.points, Vec3::Zero(), 5));
}

TEST(GroupPoints, PyramidLevelsAreChecked) {
    std::mt19937_64 rng(7);
    PointCloud c;
    c.points = oracle::random_points(rng, 100, 1.0);
    const SamplingPyramid p = build_pyramid(c, 0.1, 3);
    EXPECT_THROW(group_points(p, 1, 1, 10), ConfigurationError);
    EXPECT_THROW(group_points(p, 5, 0, 10), ConfigurationError);
    EXPECT_NO_THROW(group_points(p, 2, 0, 10));
}

TEST(FineMatch, IdenticalPatchesPairIdentically) {
    std::mt19937_64 rng(15);
    const PointCloud patch = oracle_described(oracle::random_points(rng, 10, 1.0));
    MatchingParams params;
    const CorrespondenceSet c = fine_match(patch, patch, params);
    const Eigen::MatrixXd t = fine_transport(patch, patch, params);
    ASSERT_EQ(c.size(), 10u);
    for (const auto& p : c.pairs) {
        EXPECT_EQ(p.src, p.tgt);
        // Each kept weight is the largest entry of its row and of its column.
        const auto i = static_cast<Eigen::Index>(p.src);
        EXPECT_EQ(p.weight, t.row(i).maxCoeff());
        EXPECT_EQ(p.weight, t.col(i).maxCoeff());
    }
}

TEST(FineMatch, CorruptedPointHasLowWeight) {
    std::mt19937_64 rng(16);
    const PointCloud tgt = oracle_described(oracle::random_points(rng, 12, 1.0));
    PointCloud src = tgt;
    std::normal_distribution<double> g(0.0, 1.0);
    for (Eigen::Index k = 0; k < src.features.cols(); ++k) src.features(0, k) = g(rng);
    src.features.row(0).normalize();
    MatchingParams params;
    const Eigen::MatrixXd p = fine_transport(src, tgt, params);
    std::vector<double> inlier;
    for (Eigen::Index i = 1; i < 12; ++i) inlier.push_back(p.row(i).head(12).maxCoeff());
    std::sort(inlier.begin(), inlier.end());
    EXPECT_LT(p.row(0).head(12).maxCoeff(), inlier[inlier.size() / 2]);
}

TEST(FineMatch, AllDustbinGivesEmptySet) {
    std::mt19937_64 rng(18);
    const PointCloud a = oracle_described(oracle::random_points(rng, 4, 1.0));
    const PointCloud b = oracle_described(oracle::random_points(rng, 4, 1.0));
    MatchingParams params;
    params.dustbin_logit = 1e3;
    EXPECT_TRUE(fine_match(a, b, params).empty());
    EXPECT_TRUE(fine_match(PointCloud{}, b, params).empty());
}

TEST(Correspondences, ValidateAndMerge) {
    CorrespondenceSet c;
    c.add(0, 1, 0.5);
    c.add(0, 1, 0.7);
    c.add(2, 0, 0.1);
    EXPECT_THROW(c.validate(3, 3), InvalidInputError);
    const CorrespondenceSet m = merge_unique(c);
    ASSERT_EQ(m.size(), 2u);
    EXPECT_EQ(m.pairs[0], (Correspondence{0, 1, 0.7}));
    EXPECT_NO_THROW(m.validate(3, 3));
    CorrespondenceSet bad;
    bad.add(5, 0, 0.5);
    EXPECT_THROW(bad.validate(3, 3), InvalidInputError);
    CorrespondenceSet heavy;
    heavy.add(0, 0, 1.5);
    EXPECT_THROW(heavy.validate(3, 3), InvalidInputError);
}
