#include "smsr/trajectory_smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/SVD>

#include "smsr/parallel.hpp"

namespace smsr {

namespace {

constexpr double kRankCutoff = 1e-10;

/* Orthonormal basis of the numerical column space of m */
Matrix column_space(const Matrix& m)
{
    if (m.size() == 0)
        return Matrix(m.rows(), 0);
    Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU);
    const Vector& s = svd.singularValues();
    Eigen::Index rank = 0;
    while (rank < s.size() && s[rank] > kRankCutoff * s[0])
        ++rank;
    return svd.matrixU().leftCols(rank);
}

/* Residual of projecting the columns of data onto the column space of m */
Matrix projection_residual(const Matrix& m, const Matrix& data)
{
    const Matrix u = column_space(m);
    return data - u * (u.transpose() * data);
}

/*
 * ||(I - P) W||_F equals ||(I - P) W V||_F for any V with orthonormal rows
 * spanning the row space of W, so wide tables are compressed to 2T columns.
 */
Matrix compress_columns(const Matrix& w)
{
    if (w.cols() <= w.rows())
        return w;
    Eigen::BDCSVD<Matrix> svd(w, Eigen::ComputeThinU);
    return svd.matrixU() * svd.singularValues().asDiagonal();
}

} // namespace

Matrix dct_basis(int T, int d)
{
    if (T < 1 || d < 1 || d > T)
        throw std::invalid_argument("dct_basis requires 1 <= d <= T");
    Matrix omega(T, d);
    const double s1 = std::sqrt(1.0 / T);
    const double s = std::sqrt(2.0 / T);
    for (int t = 0; t < T; ++t)
        for (int j = 0; j < d; ++j)
            omega(t, j) = (j == 0 ? s1 : s) *
                          std::cos(std::numbers::pi * (2.0 * t + 1.0) * j / (2.0 * T));
    return omega;
}

int default_dct_count(int T, int K)
{
    const int tenth = static_cast<int>(std::ceil(0.1 * T));
    return std::min(std::max(tenth, K), T);
}

bool smoothing_enabled(int T, int N, const SolverConfig& cfg)
{
    if (cfg.skip_smoothing)
        return false;
    if (cfg.force_smoothing)
        return true;
    return static_cast<double>(T) * N <= kSmoothingAutoSkipSize;
}

MotionMatrix assemble_motion(const CameraPoseSequence& r, const Matrix& omega, const Matrix& X)
{
    if (omega.rows() != r.frames() || omega.cols() != X.rows())
        throw std::invalid_argument("assemble_motion: expected omega T x d and X d x K");
    const Matrix c = omega * X;
    const auto K = X.cols();
    Matrix m(2 * r.frames(), 3 * K);
    for (int i = 0; i < r.frames(); ++i)
        for (Eigen::Index k = 0; k < K; ++k)
            m.block(2 * i, 3 * k, 2, 3) = c(i, k) * r[i];
    return MotionMatrix(std::move(m));
}

Matrix basis_from_motion(const MotionMatrix& m, const TrackTable& w)
{
    const Matrix& a = m.data();
    if (a.rows() != w.data().rows())
        throw std::invalid_argument("basis_from_motion: row mismatch");
    if (a.size() == 0 || a.cwiseAbs().maxCoeff() == 0.0)
        return Matrix::Zero(a.cols(), w.points());

    Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& s = svd.singularValues();
    Eigen::Index rank = 0;
    while (rank < s.size() && s[rank] > kRankCutoff * s[0])
        ++rank;
    const Vector inv = s.head(rank).cwiseInverse();
    return svd.matrixV().leftCols(rank) * inv.asDiagonal() *
           (svd.matrixU().leftCols(rank).transpose() * w.data());
}

ReprojectionResidual reprojection_residual(const TrackTable& w, const MotionMatrix& m)
{
    if (m.data().rows() != w.data().rows())
        throw std::invalid_argument("reprojection_residual: row mismatch");
    ReprojectionResidual out;
    if (m.data().size() == 0 || m.data().cwiseAbs().maxCoeff() == 0.0)
        out.matrix = w.data();
    else
        out.matrix = projection_residual(m.data(), w.data());
    out.value = out.matrix.squaredNorm();
    return out;
}

TrajectoryFit fit_shape_trajectory(const TrackTable& w, const CameraPoseSequence& r,
                                   int d, int K, const SolverConfig& cfg)
{
    const int T = w.frames();
    if (r.frames() != T)
        throw std::invalid_argument("pose count does not match the track table");
    if (K < 1 || d < K || d > T)
        throw std::invalid_argument("fit_shape_trajectory requires 1 <= K <= d <= T");

    const Matrix omega = dct_basis(T, d);
    const Matrix data = compress_columns(w.data());

    // Unknowns are vec(X), column-major; optionally the top K x K block is held fixed.
    std::vector<Eigen::Index> free;
    for (int k = 0; k < K; ++k)
        for (int j = 0; j < d; ++j)
            if (!(cfg.freeze_low_block && j < K))
                free.push_back(static_cast<Eigen::Index>(k) * d + j);
    const auto n = static_cast<Eigen::Index>(free.size());

    auto residual = [&](const Vector& x) -> Vector {
        const Matrix X = unvec(x, d, K);
        const MotionMatrix m = assemble_motion(r, omega, X);
        if (m.data().cwiseAbs().maxCoeff() == 0.0)
            return vec(data);
        return vec(projection_residual(m.data(), data));
    };

    Matrix X0 = Matrix::Zero(d, K);
    X0.topRows(K).setIdentity();
    Vector x = vec(X0);
    Vector r0 = residual(x);
    double f = r0.squaredNorm();

    TrajectoryFit fit;
    fit.initial_objective = f;
    fit.objective_trace.push_back(f);

    double lambda = 1e-3;
    for (int it = 0; it < cfg.gn_max_iters && n > 0; ++it) {
        if (f == 0.0) {
            fit.converged = true;
            break;
        }
        fit.iterations = it + 1;

        Matrix J(r0.size(), n);
        parallel_for(static_cast<std::size_t>(n), [&](std::size_t c) {
            const Eigen::Index j = free[c];
            const double h = 1e-6 * (1.0 + std::abs(x[j]));
            Vector xp = x;
            xp[j] += h;
            J.col(c) = (residual(xp) - r0) / h;
        });
        const Matrix H = J.transpose() * J;
        const Vector g = J.transpose() * r0;

        bool accepted = false;
        Vector xNext;
        Vector rNext;
        double fNext = f;
        for (int attempt = 0; attempt < 10; ++attempt) {
            const Matrix damped = H + lambda * Matrix::Identity(n, n);
            const Vector step = damped.ldlt().solve(-g);
            xNext = x;
            for (Eigen::Index c = 0; c < n; ++c)
                xNext[free[c]] += step[c];
            rNext = residual(xNext);
            fNext = rNext.squaredNorm();
            if (std::isfinite(fNext) && fNext < f) {
                accepted = true;
                lambda /= 10.0;
                break;
            }
            lambda *= 10.0;
        }
        if (!accepted) {
            // No damped step decreases the objective: a stationary point.
            fit.converged = true;
            break;
        }

        const double decrease = (f - fNext) / f;
        x = std::move(xNext);
        r0 = std::move(rNext);
        f = fNext;
        fit.objective_trace.push_back(f);
        if (decrease < cfg.gn_tol) {
            fit.converged = true;
            break;
        }
    }
    if (n == 0)
        fit.converged = true;

    const Matrix X = unvec(x, d, K);
    const Matrix basis = basis_from_motion(assemble_motion(r, omega, X), w);
    fit.model = TrajectoryModel(omega, X, basis);
    fit.final_objective = f;
    return fit;
}

TrackTable smooth_measurements(const TrackTable& w, const CameraPoseSequence& r,
                               const TrajectoryModel& model)
{
    const MotionMatrix m = assemble_motion(r, model.omega(), model.X());
    const Matrix b = basis_from_motion(m, w);
    Matrix smoothed = m.data() * b;
    smoothed.colwise() -= smoothed.rowwise().mean();
    return TrackTable(std::move(smoothed), true);
}

} // namespace smsr
