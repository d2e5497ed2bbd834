#include <gtest/gtest.h>

#include <Eigen/Dense>

#include "smsr/errors.hpp"
#include "smsr/evaluation.hpp"
#include "test_support.hpp"

using namespace smsr;
using testing_support::max_abs;
using testing_support::Random;

namespace {

Matrix transform(const Matrix& x, double s, const Eigen::Matrix3d& r, const Eigen::Vector3d& t)
{
    return (s * r * x).colwise() + t;
}

Eigen::Matrix3d random_orthogonal(Random& rng)
{
    Eigen::Matrix3d q = rng.rotation();
    if (rng.uniform() < 0.5)
        q.col(0) *= -1.0;
    return q;
}

ShapeSequence random_sequence(Random& rng, int T, int N)
{
    std::vector<Matrix> frames;
    for (int t = 0; t < T; ++t)
        frames.push_back(rng.matrix(3, N));
    return ShapeSequence(frames);
}

/* Two-point hand case: truth (0,0,0),(1,0,0); second point off by 0.1 in x */
std::pair<ShapeSequence, ShapeSequence> hand_case()
{
    Matrix g = Matrix::Zero(3, 2);
    g(0, 1) = 1.0;
    Matrix x = g;
    x(0, 1) = 1.1;
    return {ShapeSequence({x}), ShapeSequence({g})};
}

} // namespace

TEST(ProcrustesAlign, IdenticalInputIsIdentity)
{
    Random rng(81);
    const Matrix g = rng.matrix(3, 10);
    const Alignment a = procrustes_align(g, g);
    EXPECT_LE(max_abs(a.aligned - g), 1e-12);
    EXPECT_NEAR(a.transform.scale, 1.0, 1e-12);
    EXPECT_LE(max_abs(a.transform.rotation - Matrix::Identity(3, 3)), 1e-12);
    EXPECT_LE(a.transform.translation.cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_FALSE(a.degenerate);
}

TEST(ProcrustesAlign, RecoversExactSimilarity)
{
    Random rng(82);
    const Matrix g = rng.matrix(3, 12);
    const Eigen::Matrix3d r0 = rng.rotation();
    const Matrix x = transform(g, 2.0, r0, Eigen::Vector3d(1, -2, 3));
    const Alignment a = procrustes_align(x, g);
    EXPECT_LE((a.aligned - g).norm(), 1e-12 * g.norm());
    EXPECT_NEAR(a.transform.scale, 0.5, 1e-12);
}

TEST(ProcrustesAlign, ReflectionOnlyWhenAllowed)
{
    Random rng(83);
    const Matrix g = rng.matrix(3, 9);
    Eigen::Matrix3d mirror = Eigen::Matrix3d::Identity();
    mirror(2, 2) = -1.0;
    const Matrix x = mirror * g;
    EXPECT_LE((procrustes_align(x, g, true).aligned - g).norm(), 1e-12 * g.norm());
    const Alignment proper = procrustes_align(x, g, false);
    EXPECT_NEAR(proper.transform.rotation.determinant(), 1.0, 1e-12);
    EXPECT_GT((proper.aligned - g).norm(), 1e-3);
}

TEST(ProcrustesAlign, BeatsRandomSimilarities)
{
    Random rng(84);
    const Matrix x = rng.matrix(3, 15);
    const Matrix g = rng.matrix(3, 15);
    const Alignment a = procrustes_align(x, g);
    const double best = (a.aligned - g).norm();
    EXPECT_LE(best, (x - g).norm());
    for (int trial = 0; trial < 1000; ++trial) {
        // Half fully random, half small perturbations of the optimum.
        const bool local = trial % 2 == 1;
        const Eigen::Matrix3d r =
            local ? Eigen::Matrix3d(Eigen::AngleAxisd(0.05 * rng.normal(), rng.rotation().col(0)) *
                                    a.transform.rotation)
                  : random_orthogonal(rng);
        const double s = local ? a.transform.scale * (1.0 + 0.05 * rng.normal())
                               : std::abs(rng.normal()) + 0.01;
        const Eigen::Vector3d t = local ? Eigen::Vector3d(a.transform.translation + 0.05 * rng.matrix(3, 1))
                                        : Eigen::Vector3d(rng.matrix(3, 1));
        EXPECT_LE(best, (transform(x, s, r, t) - g).norm() + 1e-12);
    }
}

TEST(ProcrustesAlign, CoincidentPointsAreDegenerate)
{
    const Matrix x = Matrix::Ones(3, 4);
    const Alignment a = procrustes_align(x, Matrix::Zero(3, 4) + Matrix::Identity(3, 4));
    EXPECT_TRUE(a.degenerate);
    EXPECT_EQ(a.aligned, x);
    EXPECT_THROW(procrustes_align(Matrix::Zero(3, 2), Matrix::Zero(3, 3)), std::invalid_argument);
}

TEST(E3d, ZeroForIdenticalSequences)
{
    Random rng(85);
    const ShapeSequence g = random_sequence(rng, 5, 8);
    const E3dResult r = e3d(g, g);
    EXPECT_EQ(r.value, 0.0);
    ASSERT_EQ(r.per_frame.size(), 5u);
}

TEST(E3d, InvariantUnderPerFrameSimilarity)
{
    Random rng(86);
    const ShapeSequence g = random_sequence(rng, 6, 10);
    std::vector<Matrix> moved;
    for (const auto& frame : g.shapes())
        moved.push_back(transform(frame, 0.1 + std::abs(rng.normal()), random_orthogonal(rng),
                                  rng.matrix(3, 1)));
    EXPECT_LE(e3d(ShapeSequence(moved), g).value, 1e-10);
}

TEST(E3d, HandComputedTwoPointCase)
{
    // sigma = (0.5 + 0 + 0) / 3; one offset point over T = 1, N = 2.
    const auto [x, g] = hand_case();
    MetricOptions opts;
    opts.align = AlignMode::kNone;
    const double sigma = 0.5 / 3.0;
    const double offset = x[0](0, 1) - g[0](0, 1);
    EXPECT_EQ(e3d(x, g, opts).value, (offset * offset) / (sigma * 1.0 * 2.0));
    EXPECT_NEAR(e3d(x, g, opts).value, 0.03, 1e-15);
    opts.error_power = 1;
    EXPECT_EQ(e3d(x, g, opts).value, std::sqrt(offset * offset) / (sigma * 1.0 * 2.0));
    EXPECT_NEAR(e3d(x, g, opts).value, 0.3, 1e-14);
    opts.error_power = 3;
    EXPECT_THROW(e3d(x, g, opts), std::invalid_argument);
}

TEST(E3d, PerFrameEntriesAverageToValue)
{
    Random rng(87);
    const ShapeSequence g = random_sequence(rng, 4, 7);
    const ShapeSequence x = random_sequence(rng, 4, 7);
    const E3dResult r = e3d(x, g);
    double mean = 0.0;
    for (double e : r.per_frame) {
        EXPECT_GE(e, 0.0);
        mean += e / 4.0;
    }
    EXPECT_NEAR(r.value, mean, 1e-12);
}

TEST(E3d, ZeroSpreadTruthThrows)
{
    const ShapeSequence g({Matrix::Zero(3, 1)});
    EXPECT_THROW(e3d(g, g), Error);
    EXPECT_THROW(e3d(ShapeSequence({Matrix::Zero(3, 2)}), ShapeSequence({Matrix::Zero(3, 3)})),
                 std::invalid_argument);
}

TEST(RmsError, ScaledCopyGivesScaleOffset)
{
    Random rng(88);
    const ShapeSequence g = random_sequence(rng, 3, 6);
    std::vector<Matrix> scaled;
    for (const auto& frame : g.shapes())
        scaled.push_back(1.05 * frame);
    MetricOptions opts;
    opts.align = AlignMode::kNone;
    EXPECT_NEAR(rms_error(ShapeSequence(scaled), g, opts), 0.05, 1e-12);
    EXPECT_EQ(rms_error(g, g), 0.0);
}

TEST(RmsError, MatchesDirectRecomputation)
{
    Random rng(89);
    const ShapeSequence g = random_sequence(rng, 4, 9);
    const ShapeSequence x = random_sequence(rng, 4, 9);
    double expected = 0.0;
    for (int t = 0; t < 4; ++t)
        expected += (procrustes_align(x[t], g[t]).aligned - g[t]).norm() / g[t].norm() / 4.0;
    EXPECT_NEAR(rms_error(x, g), expected, 1e-12);
    EXPECT_THROW(rms_error(x, ShapeSequence({g[0], g[1], g[2], Matrix::Zero(3, 9)})), Error);
}

TEST(AlignShapes, SequenceModeUsesOneTransform)
{
    Random rng(90);
    const ShapeSequence g = random_sequence(rng, 3, 5);
    const Eigen::Matrix3d r = rng.rotation();
    std::vector<Matrix> moved;
    for (const auto& frame : g.shapes())
        moved.push_back(transform(frame, 3.0, r, Eigen::Vector3d(1, 1, 1)));
    MetricOptions opts;
    opts.align = AlignMode::kSequence;
    EXPECT_LE(e3d(ShapeSequence(moved), g, opts).value, 1e-10);

    // Independent per-frame rotations cannot be undone by one shared transform.
    std::vector<Matrix> scrambled;
    for (const auto& frame : g.shapes())
        scrambled.push_back(rng.rotation() * frame);
    EXPECT_GT(e3d(ShapeSequence(scrambled), g, opts).value, 1e-3);
    EXPECT_LE(e3d(ShapeSequence(scrambled), g).value, 1e-10);
}
