#ifndef SMSR_TRAJECTORY_SMOOTHING_HPP
#define SMSR_TRAJECTORY_SMOOTHING_HPP

#include <vector>

#include "smsr/model_types.hpp"

namespace smsr {

/* Smoothing is skipped automatically above this many track entries (T * N) */
inline constexpr double kSmoothingAutoSkipSize = 5e6;

struct ReprojectionResidual
{
    double value = 0.0;     // ||W - M M^+ W||_F^2
    Matrix matrix;          // W - M M^+ W
};

struct TrajectoryFit
{
    TrajectoryModel model;
    double initial_objective = 0.0;     // at X0 = [I_K; 0]
    double final_objective = 0.0;
    /* objective after every accepted step, starting with the initial value */
    std::vector<double> objective_trace;
    int iterations = 0;
    bool converged = false;
};

/* Orthonormal DCT-II basis, T x d */
Matrix dct_basis(int T, int d);

/* clamp(ceil(0.1 T), K, T) */
int default_dct_count(int T, int K);

/* Whether the smoothing stage runs for a T x N problem under cfg */
bool smoothing_enabled(int T, int N, const SolverConfig& cfg);

/* M_i = R_i (c_i kron I_3) with c_i the i-th row of omega * X */
MotionMatrix assemble_motion(const CameraPoseSequence& r, const Matrix& omega, const Matrix& X);

/* B = M^+ W, singular values below 1e-10 of the largest treated as zero */
Matrix basis_from_motion(const MotionMatrix& m, const TrackTable& w);

ReprojectionResidual reprojection_residual(const TrackTable& w, const MotionMatrix& m);

/*
 * Levenberg-damped Gauss-Newton over X (d x K) from X0 = [I_K; 0], minimizing
 * ||W - M(X) M(X)^+ W||_F^2 with a forward-difference Jacobian.
 */
TrajectoryFit fit_shape_trajectory(const TrackTable& w, const CameraPoseSequence& r,
                                   int d, int K, const SolverConfig& cfg);

/* W_new = R (omega X kron I_3) M^+ W, re-registered to the centroid */
TrackTable smooth_measurements(const TrackTable& w, const CameraPoseSequence& r,
                               const TrajectoryModel& model);

} // namespace smsr

#endif // SMSR_TRAJECTORY_SMOOTHING_HPP
