#ifndef SMSR_MODEL_TYPES_HPP
#define SMSR_MODEL_TYPES_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace smsr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Pose = Eigen::Matrix<double, 2, 3>;

/*
 * 2T x N measurement matrix. Rows 2i and 2i+1 (0-based) hold the x and y
 * image coordinates of all N points in frame i.
 */
class TrackTable
{
public:
    TrackTable() = default;
    explicit TrackTable(Matrix data, bool centered = false);

    int frames() const { return static_cast<int>(mData.rows() / 2); }
    int points() const { return static_cast<int>(mData.cols()); }
    const Matrix& data() const { return mData; }
    bool centered() const { return mCentered; }

    /* 2 x N block of frame i */
    auto frame(int i) const { return mData.middleRows(2 * i, 2); }

private:
    Matrix mData;
    bool mCentered = false;
};

/* T orthographic camera blocks, each 2 x 3 with orthonormal rows */
class CameraPoseSequence
{
public:
    static constexpr double kOrthonormalityTol = 1e-8;

    CameraPoseSequence() = default;
    explicit CameraPoseSequence(std::vector<Pose> blocks);

    int frames() const { return static_cast<int>(mBlocks.size()); }
    const Pose& operator[](int i) const { return mBlocks[i]; }
    const std::vector<Pose>& blocks() const { return mBlocks; }

    /* 2T x 3 vertical stack of all blocks */
    Matrix stacked() const;
    /* max_i || R_i R_i^T - I ||_max */
    double orthonormalityError() const;

private:
    std::vector<Pose> mBlocks;
};

/* T shapes of N points, each 3 x N */
class ShapeSequence
{
public:
    ShapeSequence() = default;
    explicit ShapeSequence(std::vector<Matrix> shapes);

    int frames() const { return static_cast<int>(mShapes.size()); }
    int points() const { return mShapes.empty() ? 0 : static_cast<int>(mShapes[0].cols()); }
    const Matrix& operator[](int t) const { return mShapes[t]; }
    const std::vector<Matrix>& shapes() const { return mShapes; }

private:
    std::vector<Matrix> mShapes;
};

/* 2T x 3K motion matrix with per-frame blocks R_i (c_i kron I_3) */
class MotionMatrix
{
public:
    MotionMatrix() = default;
    explicit MotionMatrix(Matrix data);

    int frames() const { return static_cast<int>(mData.rows() / 2); }
    int bases() const { return static_cast<int>(mData.cols() / 3); }
    const Matrix& data() const { return mData; }

private:
    Matrix mData;
};

/*
 * Shape trajectory in a truncated DCT basis: C = omega * X.
 * C is always derived, never stored.
 */
class TrajectoryModel
{
public:
    TrajectoryModel() = default;
    TrajectoryModel(Matrix omega, Matrix X, Matrix basis);

    int bases() const { return static_cast<int>(mX.cols()); }
    int dctCount() const { return static_cast<int>(mX.rows()); }
    int frames() const { return static_cast<int>(mOmega.rows()); }
    const Matrix& omega() const { return mOmega; }
    const Matrix& X() const { return mX; }
    const Matrix& basis() const { return mBasis; }
    Matrix coefficients() const { return mOmega * mX; }

private:
    Matrix mOmega;
    Matrix mX;
    Matrix mBasis;
};

/* Symmetric 3K x 3K Gram matrix F = Q Q^T of the corrective transform */
class CorrectiveGram
{
public:
    CorrectiveGram() = default;
    explicit CorrectiveGram(Matrix F);

    int bases() const { return static_cast<int>(mF.rows() / 3); }
    const Matrix& F() const { return mF; }

private:
    Matrix mF;
};

enum class GramInit { kRigid, kIdentity };

struct SolverConfig
{
    int K = 0;                      // shape bases, 0 = automatic
    int d = 0;                      // DCT coefficients, 0 = automatic
    double mu0 = 1.0;
    double rho = 1.02;
    double mu_max = 1e6;
    int admm_max_iters = 300;
    double admm_tol = 1e-6;
    int admm_inner_iters = 1;
    int pg_max_iters = 500;
    double pg_tol = 1e-8;
    bool pg_accelerate = true;
    GramInit gram_init = GramInit::kRigid;
    int gn_max_iters = 20;
    double gn_tol = 1e-6;
    bool freeze_low_block = false;
    bool skip_smoothing = false;
    bool force_smoothing = false;
    double energy_threshold = 0.999;
    std::uint64_t seed = 0;

    /* throws std::invalid_argument on out-of-range values */
    void validate() const;
};

struct StageStats
{
    int iterations = 0;
    double wall_time = 0.0;         // seconds
    bool converged = true;
};

struct ReconstructionReport
{
    int frames = 0;
    int points = 0;
    int K = 0;
    int d = 0;

    std::optional<double> e3d;
    std::optional<double> rms;
    std::vector<double> per_frame_errors;
    double reprojection_error = 0.0;

    StageStats pose;
    StageStats smoothing;
    StageStats shape;
    double total_time = 0.0;

    double gram_residual = 0.0;
    std::vector<int> degenerate_frames;
    bool smoothing_applied = false;
    double smoothing_initial_objective = 0.0;
    double smoothing_final_objective = 0.0;
    std::vector<double> admm_residuals;

    struct SearchEntry
    {
        int K;
        double reprojection_error;
    };
    std::vector<SearchEntry> search;

    std::vector<std::string> warnings;
    SolverConfig config;
};

/* Column-major vectorization: out[j*p + i] = m(i, j) */
Vector vec(const Matrix& m);
Matrix unvec(const Vector& v, int rows, int cols);

/*
 * Row vector r with r * vec(F) = a * F * b^T for any p x p F:
 * r[j*p + i] = b[j] * a[i].
 */
RowVector kron_row(const RowVector& a, const RowVector& b);

} // namespace smsr

#endif // SMSR_MODEL_TYPES_HPP
