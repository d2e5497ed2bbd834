#ifndef SMSR_POSE_ESTIMATION_HPP
#define SMSR_POSE_ESTIMATION_HPP

#include <optional>
#include <vector>

#include "smsr/model_types.hpp"

namespace smsr {

/* Rank-3K factorization W ~ M' B' */
struct FactoredPair
{
    Matrix motion;      // M', 2T x 3K
    Matrix basis;       // B', 3K x N
};

enum class FactorSplit
{
    kBalanced,          // M' = U S^(1/2), B' = S^(1/2) V^T
    kOrthonormal,       // M' = U,         B' = S V^T
};

/* Stacked orthogonality constraints: A vec(F) = 0 for a valid Gram matrix */
struct OrthogonalitySystem
{
    Matrix A;           // 2T x 9K^2
    int K = 0;
};

struct GramSolution
{
    CorrectiveGram gram;
    int iterations = 0;
    bool converged = false;
    /* ||A vec(F)||^2 at the start point followed by one value per iteration */
    std::vector<double> objective_trace;
};

struct CorrectiveTransform
{
    Matrix Q;           // 3K x 3
    int rank = 0;       // eigenvalues above 1e-10 of the largest
    bool degenerate = false;
};

struct PoseRecovery
{
    CameraPoseSequence poses;
    Vector coefficients;            // c_i, signed
    std::vector<int> degenerate_frames;
};

/*
 * Smallest K whose top 3K singular values carry at least energy_threshold of
 * the total spectral energy, clamped to [1, floor(min(2T, N) / 3)].
 */
int select_basis_count(const TrackTable& w, double energy_threshold = 0.999);

FactoredPair truncated_factorization(const TrackTable& w, int K,
                                     FactorSplit split = FactorSplit::kBalanced);

/* Rows per frame: kron(m1,m1) - kron(m2,m2) and kron(m1,m2) */
OrthogonalitySystem build_orthogonality_system(const Matrix& motion);

/* Largest eigenvalue of A^T A */
double lipschitz_constant(const OrthogonalitySystem& sys);

/* Projection onto {PSD, rank <= 3}: top three eigenvalues clamped at zero */
CorrectiveGram rank3_psd_project(const Matrix& f);

/* Projection onto {PSD, rank <= 3, trace = t} */
Matrix project_rank3_fixed_trace(const Matrix& f, double trace = 3.0);

/*
 * Start point closest to the identity inside the (numerical) null space of
 * the system, restricted to symmetric matrices, then projected.
 */
Matrix identity_nullspace_start(const OrthogonalitySystem& sys);

/*
 * Start point from a rigid (K = 1) solve on the top three factor columns:
 * F0 = Q0 Q0^T with Q0 the least-squares map from M' to the rigid poses,
 * normalized to trace 3.
 */
Matrix rigid_warm_start(const Matrix& motion);

/*
 * Projected gradient on ||A vec(F)||^2 over {PSD, rank <= 3, trace = 3} with
 * step 1/L_A. Without f0 the identity null-space start is used.
 */
GramSolution solve_gram_proximal(const OrthogonalitySystem& sys,
                                 const std::optional<Matrix>& f0,
                                 const SolverConfig& cfg);

/* Q = E_3 diag(sqrt(lambda)) from the top three eigenpairs of F */
CorrectiveTransform recover_corrective(const CorrectiveGram& f);

/*
 * Per frame P_i = M'_i Q, c_i = ||P_i||_F / sqrt(2), R_i = polar factor of
 * P_i / c_i. The sign of (R_i, c_i) follows the previous frame.
 */
PoseRecovery recover_poses(const Matrix& motion, const Matrix& q);

} // namespace smsr

#endif // SMSR_POSE_ESTIMATION_HPP
