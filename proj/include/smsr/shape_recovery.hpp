#ifndef SMSR_SHAPE_RECOVERY_HPP
#define SMSR_SHAPE_RECOVERY_HPP

#include <vector>

#include "smsr/model_types.hpp"

namespace smsr {

/* Residual increases in a row after which the ADMM run is declared divergent */
inline constexpr int kAdmmDivergenceWindow = 50;

struct AdmmState
{
    ShapeSequence S;
    Matrix Y;                       // multipliers, in the units of the normalized data
    double mu = 0.0;
    int iteration = 0;
    /* relative primal residual ||W - RS||_F / ||W||_F after every iteration */
    std::vector<double> residual_history;
    bool converged = false;
    /* W was divided by this before iterating (its Frobenius norm) */
    double data_scale = 1.0;
};

/* T x 3N matrix; row t = [X_t1..X_tN, Y_t1..Y_tN, Z_t1..Z_tN] */
Matrix rearrange_shape(const ShapeSequence& s);
ShapeSequence unrearrange(const Matrix& m, int T, int N);

/* I - (1/T) 1 1^T */
Matrix centering_projector(int T);

/* Singular value soft-thresholding U max(S - tau, 0) V^T */
Matrix svt(const Matrix& m, double tau);

/* S_i = R_i^T W_i */
ShapeSequence initialize_planar(const TrackTable& w, const CameraPoseSequence& r);

/*
 * Linearized ADMM for  min ||S# P||_*  s.t.  W = R S.  Each outer iteration
 * takes a unit gradient step on the augmented term, soft-thresholds the
 * mean-removed rearranged shapes at 1/mu (the temporal mean passes through),
 * updates Y and grows mu geometrically. Stops when both the relative primal
 * residual and the relative change of S fall below admm_tol.
 * Throws SolverAbort when the residual increases kAdmmDivergenceWindow times
 * in a row.
 */
AdmmState admm_recover(const TrackTable& w, const CameraPoseSequence& r, const SolverConfig& cfg);

} // namespace smsr

#endif // SMSR_SHAPE_RECOVERY_HPP
