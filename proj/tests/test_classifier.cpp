#include "oracles.hpp"

#include "dynreg/classifier.hpp"
#include "dynreg/errors.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace dynreg;

namespace {

struct Fixture {
    PointCloud src;
    PointCloud tgt;
    CorrespondenceSet corr;
    std::vector<Vec3> x;
    std::vector<Vec3> y;
};

/// Random correspondence set: some pairs follow one rigid motion, the rest are random.
Fixture random_set(std::mt19937_64& rng, std::size_t n) {
    Fixture f;
    const RigidTransform t = oracle::random_transform(rng, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    f.src.points = oracle::random_points(rng, n + 3, 1.0);
    f.tgt.points = oracle::random_points(rng, n + 3, 1.0);
    for (std::size_t i = 0; i < n + 3; ++i) {
        if (u(rng) < 0.5) f.tgt.points[i] = t.apply(f.src.points[i]) + 0.02 * Vec3(u(rng), u(rng), u(rng));
    }
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t s = i;
        const std::size_t d = u(rng) < 0.7 ? i : (i * 7 + 1) % (n + 3);
        f.corr.add(s, d, u(rng));
        f.x.push_back(f.src.points[s]);
        f.y.push_back(f.tgt.points[d]);
    }
    return f;
}

}  // namespace

TEST(Sc, MatrixMatchesDoubleLoopAndIsWellFormed) {
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<std::size_t> size(2, 40);
    for (int trial = 0; trial < 200; ++trial) {
        const Fixture f = random_set(rng, size(rng));
        const double sigma = 0.05 + 0.1 * (trial % 5);
        const Eigen::MatrixXd m = sc_matrix(f.corr, f.src, f.tgt, sigma);
        const Eigen::MatrixXd ref = oracle::sc_matrix(f.x, f.y, sigma);
        EXPECT_LE((m - ref).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_LE((m - m.transpose()).cwiseAbs().maxCoeff(), 1e-12);
        for (Eigen::Index i = 0; i < m.rows(); ++i) EXPECT_EQ(m(i, i), 1.0);
        EXPECT_DOUBLE_EQ(sc_score(f.corr, f.src, f.tgt, sigma), sc_score(m));
    }
}

TEST(Sc, RigidInvariant) {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 50; ++trial) {
        const Fixture f = random_set(rng, 20);
        const RigidTransform a = oracle::random_transform(rng, 5.0);
        const RigidTransform b = oracle::random_transform(rng, 5.0);
        const Eigen::MatrixXd m0 = sc_matrix(f.corr, f.src, f.tgt, 0.1);
        const Eigen::MatrixXd m1 = sc_matrix(f.corr, apply_transform(f.src, a), apply_transform(f.tgt, b), 0.1);
        EXPECT_LE((m0 - m1).cwiseAbs().maxCoeff(), 1e-9);
    }
}

TEST(Sc, BoundaryValues) {
    PointCloud src;
    src.points = {Vec3::Zero(), Vec3(1, 0, 0), Vec3(0, 1, 0)};
    PointCloud tgt;
    // Pair 1 is stretched by exactly 0.25 relative to pair 0; pair 2 is rigid.
    tgt.points = {Vec3::Zero(), Vec3(1.25, 0, 0), Vec3(0, 1, 0)};
    CorrespondenceSet c;
    for (std::size_t i = 0; i < 3; ++i) c.add(i, i, 1.0);
    const Eigen::MatrixXd m = sc_matrix(c, src, tgt, 0.25);
    EXPECT_EQ(m(0, 2), 1.0);
    EXPECT_EQ(m(0, 1), 0.0);
    EXPECT_EQ(m(1, 0), 0.0);
}

TEST(Sc, RigidSetIsAllOnes) {
    std::mt19937_64 rng(3);
    const RigidTransform t = oracle::random_transform(rng, 1.0);
    PointCloud src;
    src.points = oracle::random_points(rng, 10, 1.0);
    PointCloud tgt = apply_transform(src, t);
    CorrespondenceSet c;
    for (std::size_t i = 0; i < 10; ++i) c.add(i, i, 1.0);
    const Eigen::MatrixXd m = sc_matrix(c, src, tgt, 0.1);
    EXPECT_LT((m.array() - 1.0).abs().maxCoeff(), 1e-12);
    EXPECT_NEAR(sc_score(m), 10.0, 1e-10);
    EXPECT_NEAR(sc2_score(c, src, tgt, 0.1), 10.0, 1e-10);
}

TEST(Sc, TooFewPairsThrowMatrixButNotScore) {
    PointCloud src;
    src.points = {Vec3::Zero()};
    CorrespondenceSet c;
    c.add(0, 0, 1.0);
    EXPECT_THROW(sc_matrix(c, src, src, 0.1), InvalidInputError);
    EXPECT_EQ(sc_score(c, src, src, 0.1), 1.0);
    EXPECT_EQ(sc_score(CorrespondenceSet{}, src, src, 0.1), 0.0);
}

TEST(Sc, ScoreIsMaxRowSum) {
    EXPECT_EQ(sc_score(Eigen::MatrixXd::Ones(4, 4)), 4.0);
    EXPECT_EQ(sc_score(Eigen::MatrixXd::Identity(5, 5)), 1.0);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::MatrixXd m(6, 6);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
    double best = 0.0;
    for (Eigen::Index i = 0; i < 6; ++i) {
        double s = 0.0;
        for (Eigen::Index j = 0; j < 6; ++j) s += m(i, j);
        best = std::max(best, s);
    }
    EXPECT_NEAR(sc_score(m), best, 1e-15);
}

TEST(Decide, GlobalThreshold) {
    ClassifierConfig cfg;
    cfg.global_threshold = 200.0;
    EXPECT_EQ(decide(0, 250.0, std::nullopt, cfg), Decision::exit_success);
    EXPECT_EQ(decide(0, 200.0, std::nullopt, cfg), Decision::exit_success);
    EXPECT_EQ(decide(0, 199.9, std::nullopt, cfg), Decision::continue_);
}

TEST(Decide, LocalDeltaRule) {
    ClassifierConfig cfg;
    cfg.local_thresholds = {15, 25, 35, 45};
    EXPECT_EQ(decide(1, 130.0, 100.0, cfg), Decision::continue_);
    EXPECT_EQ(decide(1, 115.0, 100.0, cfg), Decision::continue_);
    EXPECT_EQ(decide(1, 114.0, 100.0, cfg), Decision::exit_degraded);
    EXPECT_EQ(decide(2, 124.0, 100.0, cfg), Decision::exit_degraded);
    EXPECT_THROW(decide(1, 10.0, std::nullopt, cfg), ContractViolation);
    cfg.enabled = false;
    EXPECT_EQ(decide(0, 1e9, std::nullopt, cfg), Decision::continue_);
    EXPECT_EQ(decide(1, 0.0, 100.0, cfg), Decision::continue_);
}

TEST(Decide, RawScoreRuleAndPurity) {
    ClassifierConfig cfg;
    cfg.local_thresholds = {15};
    cfg.compare_deltas = false;
    EXPECT_EQ(decide(1, 14.0, 100.0, cfg), Decision::exit_degraded);
    EXPECT_EQ(decide(1, 15.0, 100.0, cfg), Decision::continue_);
    EXPECT_EQ(decide(3, 20.0, 0.0, cfg), decide(3, 20.0, 0.0, cfg));
}

TEST(Decide, LocalThresholdSchedule) {
    ClassifierConfig cfg;
    cfg.global_threshold = 200.0;
    EXPECT_DOUBLE_EQ(local_threshold(cfg, 1), 20.0);
    EXPECT_DOUBLE_EQ(local_threshold(cfg, 3), 40.0);
    cfg.local_thresholds = {15, 25};
    EXPECT_DOUBLE_EQ(local_threshold(cfg, 1), 15.0);
    EXPECT_DOUBLE_EQ(local_threshold(cfg, 4), 25.0);
}

TEST(Decide, NamesRoundTrip) {
    for (Decision d : {Decision::exit_success, Decision::continue_, Decision::exit_degraded}) {
        EXPECT_EQ(decision_from_string(to_string(d)), d);
    }
    for (Scorer s : {Scorer::sc, Scorer::sc2, Scorer::ir}) EXPECT_EQ(scorer_from_string(to_string(s)), s);
}
