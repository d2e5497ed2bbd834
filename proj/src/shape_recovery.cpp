#include "smsr/shape_recovery.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include <Eigen/SVD>

#include "smsr/errors.hpp"

namespace smsr {

namespace {

/* R S stacked into 2T x N, from the rearranged shapes */
Matrix project_rearranged(const CameraPoseSequence& r, const Matrix& s, int N)
{
    const int T = r.frames();
    Matrix out(2 * T, N);
    Matrix shape(3, N);
    for (int t = 0; t < T; ++t) {
        for (int a = 0; a < 3; ++a)
            shape.row(a) = s.block(t, a * N, 1, N);
        out.middleRows(2 * t, 2) = r[t] * shape;
    }
    return out;
}

/* Adds R_t^T G_t to every frame of the rearranged shapes */
void add_backprojection(const CameraPoseSequence& r, const Matrix& g, Matrix& s)
{
    const int N = static_cast<int>(g.cols());
    for (int t = 0; t < r.frames(); ++t) {
        const Matrix back = r[t].transpose() * g.middleRows(2 * t, 2);
        for (int a = 0; a < 3; ++a)
            s.block(t, a * N, 1, N) += back.row(a);
    }
}

} // namespace

Matrix rearrange_shape(const ShapeSequence& s)
{
    const int T = s.frames();
    const int N = s.points();
    Matrix out(T, 3 * N);
    for (int t = 0; t < T; ++t)
        for (int a = 0; a < 3; ++a)
            out.block(t, a * N, 1, N) = s[t].row(a);
    return out;
}

ShapeSequence unrearrange(const Matrix& m, int T, int N)
{
    if (m.rows() != T || m.cols() != 3 * static_cast<Eigen::Index>(N))
        throw std::invalid_argument("unrearrange: expected a T x 3N matrix");
    std::vector<Matrix> shapes(T, Matrix(3, N));
    for (int t = 0; t < T; ++t)
        for (int a = 0; a < 3; ++a)
            shapes[t].row(a) = m.block(t, a * N, 1, N);
    return ShapeSequence(std::move(shapes));
}

Matrix centering_projector(int T)
{
    if (T < 1)
        throw std::invalid_argument("centering_projector requires T >= 1");
    return Matrix::Identity(T, T) - Matrix::Constant(T, T, 1.0 / T);
}

Matrix svt(const Matrix& m, double tau)
{
    if (!(tau >= 0.0))
        throw std::invalid_argument("svt threshold must be >= 0");
    if (!m.allFinite())
        throw std::invalid_argument("svt input has non-finite entries");
    if (m.size() == 0)
        return m;
    Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector shrunk = (svd.singularValues().array() - tau).max(0.0);
    Eigen::Index keep = 0;
    while (keep < shrunk.size() && shrunk[keep] > 0.0)
        ++keep;
    if (keep == 0)
        return Matrix::Zero(m.rows(), m.cols());
    return svd.matrixU().leftCols(keep) * shrunk.head(keep).asDiagonal() *
           svd.matrixV().leftCols(keep).transpose();
}

ShapeSequence initialize_planar(const TrackTable& w, const CameraPoseSequence& r)
{
    if (r.frames() != w.frames())
        throw std::invalid_argument("pose count does not match the track table");
    std::vector<Matrix> shapes;
    shapes.reserve(w.frames());
    for (int t = 0; t < w.frames(); ++t)
        shapes.push_back(r[t].transpose() * w.frame(t));
    return ShapeSequence(std::move(shapes));
}

AdmmState admm_recover(const TrackTable& w, const CameraPoseSequence& r, const SolverConfig& cfg)
{
    cfg.validate();
    const int T = w.frames();
    const int N = w.points();
    if (r.frames() != T)
        throw std::invalid_argument("pose count does not match the track table");

    AdmmState state;
    state.mu = cfg.mu0;
    state.data_scale = w.data().norm();
    if (state.data_scale == 0.0) {
        state.S = unrearrange(Matrix::Zero(T, 3 * N), T, N);
        state.Y = Matrix::Zero(2 * T, N);
        state.converged = true;
        return state;
    }

    // The fixed mu schedule is tuned for unit-norm data; the problem itself is
    // scale-equivariant, so iterate on W / ||W|| and rescale at the end.
    const Matrix data = w.data() / state.data_scale;
    Matrix s = rearrange_shape(initialize_planar(TrackTable(data), r));
    Matrix y = Matrix::Zero(2 * T, N);

    int increases = 0;
    double previous = -1.0;
    for (int it = 0; it < cfg.admm_max_iters; ++it) {
        const Matrix before = s;
        for (int inner = 0; inner < cfg.admm_inner_iters; ++inner) {
            const Matrix g = data - project_rearranged(r, s, N) + y / state.mu;
            add_backprojection(r, g, s);
            const RowVector mean = s.colwise().mean();
            Matrix centered = s.rowwise() - mean;
            s = svt(centered, 1.0 / state.mu).rowwise() + mean;
        }

        const Matrix residual = data - project_rearranged(r, s, N);
        y += state.mu * residual;
        state.mu = std::min(cfg.rho * state.mu, cfg.mu_max);

        const double rel = residual.norm();
        const double sNorm = before.norm();
        const double change = sNorm > 0.0 ? (s - before).norm() / sNorm : (s - before).norm();
        state.residual_history.push_back(rel);
        state.iteration = it + 1;

        increases = (previous >= 0.0 && rel > previous) ? increases + 1 : 0;
        previous = rel;
        if (increases >= kAdmmDivergenceWindow) {
            std::ostringstream msg;
            msg << "ADMM diverged: primal residual increased for " << increases
                << " consecutive iterations (iteration " << state.iteration
                << ", relative residual " << rel << ", mu " << state.mu << ")";
            throw SolverAbort(msg.str());
        }
        if (rel <= cfg.admm_tol && change <= cfg.admm_tol) {
            state.converged = true;
            break;
        }
    }

    state.S = unrearrange(s * state.data_scale, T, N);
    state.Y = std::move(y);
    return state;
}

} // namespace smsr
