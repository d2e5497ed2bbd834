#include "smsr/pose_estimation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "smsr/errors.hpp"
#include "smsr/parallel.hpp"

namespace smsr {

namespace {

/* Orthonormal basis of vec(symmetric p x p), one column per i <= j */
Matrix symmetric_basis(int p)
{
    Matrix d = Matrix::Zero(p * p, p * (p + 1) / 2);
    const double h = std::sqrt(0.5);
    int col = 0;
    for (int i = 0; i < p; ++i) {
        for (int j = i; j < p; ++j, ++col) {
            if (i == j) {
                d(j * p + i, col) = 1.0;
            } else {
                d(j * p + i, col) = h;
                d(i * p + j, col) = h;
            }
        }
    }
    return d;
}

/* Euclidean projection of v onto {x >= 0, sum x = total} */
Eigen::Vector3d project_simplex(const Eigen::Vector3d& v, double total)
{
    Eigen::Vector3d u = v;
    std::sort(u.data(), u.data() + 3, std::greater<>());
    double cumulative = 0.0;
    double theta = 0.0;
    for (int r = 0; r < 3; ++r) {
        cumulative += u[r];
        const double candidate = (cumulative - total) / (r + 1);
        if (u[r] - candidate > 0.0)
            theta = candidate;
    }
    return (v.array() - theta).max(0.0);
}

Matrix symmetrize(const Matrix& f)
{
    if (f.rows() != f.cols())
        throw std::invalid_argument("Gram matrix must be square");
    if (!f.allFinite())
        throw std::invalid_argument("Gram matrix has non-finite entries");
    return 0.5 * (f + f.transpose());
}

double objective(const Matrix& a, const Matrix& f)
{
    return (a * vec(f)).squaredNorm();
}

} // namespace

int select_basis_count(const TrackTable& w, double energy_threshold)
{
    if (!(energy_threshold > 0.0 && energy_threshold <= 1.0))
        throw std::invalid_argument("energy threshold must lie in (0, 1]");
    const Vector sv = Eigen::BDCSVD<Matrix>(w.data()).singularValues();
    const double total = sv.squaredNorm();
    if (!(total > 0.0))
        throw Error("measurement matrix is all zeros; cannot select a basis count");

    const int kMax = std::max(1, static_cast<int>(std::min(2 * w.frames(), w.points()) / 3));
    double energy = 0.0;
    for (int k = 1; k <= kMax; ++k) {
        for (int i = 3 * (k - 1); i < std::min<int>(3 * k, sv.size()); ++i)
            energy += sv[i] * sv[i];
        if (energy >= energy_threshold * total)
            return k;
    }
    return kMax;
}

FactoredPair truncated_factorization(const TrackTable& w, int K, FactorSplit split)
{
    const int r = 3 * K;
    if (K < 1 || r > std::min(2 * w.frames(), w.points()))
        throw std::invalid_argument("3K = " + std::to_string(r) + " exceeds min(2T, N) = " +
                                    std::to_string(std::min(2 * w.frames(), w.points())));

    Eigen::BDCSVD<Matrix> svd(w.data(), Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector s = svd.singularValues().head(r);
    FactoredPair out;
    if (split == FactorSplit::kBalanced) {
        const Vector root = s.cwiseSqrt();
        out.motion = svd.matrixU().leftCols(r) * root.asDiagonal();
        out.basis = root.asDiagonal() * svd.matrixV().leftCols(r).transpose();
    } else {
        out.motion = svd.matrixU().leftCols(r);
        out.basis = s.asDiagonal() * svd.matrixV().leftCols(r).transpose();
    }
    return out;
}

OrthogonalitySystem build_orthogonality_system(const Matrix& motion)
{
    if (motion.rows() % 2 != 0 || motion.cols() % 3 != 0 || motion.cols() == 0)
        throw std::invalid_argument("motion factor must be 2T x 3K");
    const auto T = motion.rows() / 2;
    const auto p = motion.cols();

    OrthogonalitySystem sys;
    sys.K = static_cast<int>(p / 3);
    sys.A.resize(2 * T, p * p);
    parallel_for(static_cast<std::size_t>(T), [&](std::size_t i) {
        const RowVector m1 = motion.row(2 * i);
        const RowVector m2 = motion.row(2 * i + 1);
        sys.A.row(2 * i) = kron_row(m1, m1) - kron_row(m2, m2);
        sys.A.row(2 * i + 1) = kron_row(m1, m2);
    });
    return sys;
}

double lipschitz_constant(const OrthogonalitySystem& sys)
{
    const Matrix& a = sys.A;
    if (a.size() == 0 || a.cwiseAbs().maxCoeff() == 0.0)
        throw std::invalid_argument("orthogonality system is zero");

    if (std::min(a.rows(), a.cols()) <= 1500) {
        const Matrix gram = a.rows() < a.cols() ? Matrix(a * a.transpose())
                                                : Matrix(a.transpose() * a);
        return Eigen::SelfAdjointEigenSolver<Matrix>(gram, Eigen::EigenvaluesOnly)
            .eigenvalues()
            .maxCoeff();
    }

    // Power iteration on A^T A from a fixed, dense start vector.
    Vector x = Vector::Ones(a.cols()) / std::sqrt(static_cast<double>(a.cols()));
    double lambda = 0.0;
    for (int it = 0; it < 10000; ++it) {
        Vector y = a.transpose() * (a * x);
        const double next = y.norm();
        x = y / next;
        if (std::abs(next - lambda) <= 1e-12 * next)
            return next;
        lambda = next;
    }
    return lambda;
}

CorrectiveGram rank3_psd_project(const Matrix& f)
{
    const Matrix sym = symmetrize(f);
    const auto p = sym.rows();
    Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
    const int keep = static_cast<int>(std::min<Eigen::Index>(3, p));
    const Matrix e = eig.eigenvectors().rightCols(keep);
    const Vector l = eig.eigenvalues().tail(keep).cwiseMax(0.0);
    Matrix out = e * l.asDiagonal() * e.transpose();
    return CorrectiveGram(0.5 * (out + out.transpose()));
}

Matrix project_rank3_fixed_trace(const Matrix& f, double trace)
{
    const Matrix sym = symmetrize(f);
    if (sym.rows() < 3)
        throw std::invalid_argument("rank-3 projection needs at least a 3 x 3 matrix");
    Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
    const Matrix e = eig.eigenvectors().rightCols(3);
    const Eigen::Vector3d l = project_simplex(eig.eigenvalues().tail(3), trace);
    Matrix out = e * l.asDiagonal() * e.transpose();
    return 0.5 * (out + out.transpose());
}

Matrix identity_nullspace_start(const OrthogonalitySystem& sys)
{
    const int p = 3 * sys.K;
    const Matrix d = symmetric_basis(p);
    const Matrix ad = sys.A * d;

    Eigen::JacobiSVD<Matrix> svd(ad, Eigen::ComputeFullV);
    const Vector& sv = svd.singularValues();
    const double smax = sv.size() ? sv[0] : 0.0;
    Eigen::Index small = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv[i] <= 1e-6 * smax)
            ++small;
    const Eigen::Index nullity = std::max<Eigen::Index>(1, small + (d.cols() - sv.size()));

    const Matrix basis = d * svd.matrixV().rightCols(nullity);
    const Vector target = vec(Matrix::Identity(p, p));
    const Vector f = basis * (basis.transpose() * target);
    return project_rank3_fixed_trace(unvec(f, p, p));
}

Matrix rigid_warm_start(const Matrix& motion)
{
    if (motion.cols() < 3)
        throw std::invalid_argument("motion factor needs at least three columns");
    const Matrix top = motion.leftCols(3);
    const OrthogonalitySystem rigid = build_orthogonality_system(top);

    // Smallest right singular vector of A restricted to symmetric matrices.
    const Matrix d = symmetric_basis(3);
    Eigen::JacobiSVD<Matrix> svd(rigid.A * d, Eigen::ComputeFullV);
    Matrix f = unvec(d * svd.matrixV().col(d.cols() - 1), 3, 3);
    if (f.trace() < 0.0)
        f = -f;
    const CorrectiveGram f3(project_rank3_fixed_trace(f));

    const auto rigidPoses = recover_poses(top, recover_corrective(f3).Q).poses;
    const Matrix q0 = motion.completeOrthogonalDecomposition().solve(rigidPoses.stacked());
    Matrix f0 = rank3_psd_project(q0 * q0.transpose()).F();
    const double tr = f0.trace();
    if (!(tr > 0.0))
        return project_rank3_fixed_trace(Matrix::Identity(motion.cols(), motion.cols()));
    f0 *= 3.0 / tr;
    return f0;
}

GramSolution solve_gram_proximal(const OrthogonalitySystem& sys,
                                 const std::optional<Matrix>& f0,
                                 const SolverConfig& cfg)
{
    const int p = 3 * sys.K;
    const Matrix& a = sys.A;
    Matrix start = f0 ? *f0 : identity_nullspace_start(sys);
    if (start.rows() != p || start.cols() != p)
        throw std::invalid_argument("start Gram matrix must be 3K x 3K");

    GramSolution out;
    Matrix f = project_rank3_fixed_trace(start);
    out.objective_trace.push_back(objective(a, f));

    if (a.size() == 0 || a.cwiseAbs().maxCoeff() == 0.0) {
        out.gram = CorrectiveGram(f);
        out.iterations = 1;
        out.converged = true;
        out.objective_trace.push_back(out.objective_trace.back());
        return out;
    }

    const double invL = 1.0 / lipschitz_constant(sys);
    auto step = [&](const Matrix& x) {
        const Vector v = vec(x);
        const Vector moved = v - invL * (a.transpose() * (a * v));
        return project_rank3_fixed_trace(unvec(moved, p, p));
    };

    Matrix previous = f;
    double t = 1.0;
    double current = out.objective_trace.back();
    for (int it = 0; it < cfg.pg_max_iters; ++it) {
        Matrix next;
        double value;
        if (cfg.pg_accelerate) {
            const double tNext = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
            next = step(f + ((t - 1.0) / tNext) * (f - previous));
            value = objective(a, next);
            t = tNext;
            if (value > current) {
                // Momentum overshot: fall back to a plain monotone step.
                next = step(f);
                value = objective(a, next);
                t = 1.0;
            }
        } else {
            next = step(f);
            value = objective(a, next);
        }

        out.objective_trace.push_back(value);
        out.iterations = it + 1;
        const double change = (next - f).norm();
        const double scale = 1.0 + f.norm();
        previous = std::move(f);
        f = std::move(next);
        current = value;
        if (change <= cfg.pg_tol * scale) {
            out.converged = true;
            break;
        }
    }
    out.gram = CorrectiveGram(f);
    return out;
}

CorrectiveTransform recover_corrective(const CorrectiveGram& f)
{
    const Matrix& g = f.F();
    Eigen::SelfAdjointEigenSolver<Matrix> eig(g);
    const auto p = g.rows();

    CorrectiveTransform out;
    out.Q = Matrix::Zero(p, 3);
    const double largest = std::max(0.0, eig.eigenvalues()[p - 1]);
    for (int k = 0; k < 3 && k < p; ++k) {
        const double lambda = eig.eigenvalues()[p - 1 - k];
        if (largest > 0.0 && lambda > 1e-10 * largest) {
            out.Q.col(k) = eig.eigenvectors().col(p - 1 - k) * std::sqrt(lambda);
            ++out.rank;
        }
    }
    out.degenerate = out.rank < 3;
    return out;
}

PoseRecovery recover_poses(const Matrix& motion, const Matrix& q)
{
    if (motion.rows() % 2 != 0 || motion.cols() != q.rows() || q.cols() != 3)
        throw std::invalid_argument("recover_poses: expected M' 2T x 3K and Q 3K x 3");
    const int T = static_cast<int>(motion.rows() / 2);

    std::vector<Pose> polar(T, Pose::Zero());
    Vector c(T);
    parallel_for(static_cast<std::size_t>(T), [&](std::size_t i) {
        const Pose p = motion.middleRows(2 * i, 2) * q;
        c[i] = std::sqrt(p.squaredNorm() / 2.0);
        if (c[i] > 0.0) {
            Eigen::JacobiSVD<Eigen::Matrix<double, 2, 3>> svd(
                p / c[i], Eigen::ComputeFullU | Eigen::ComputeFullV);
            polar[i] = svd.matrixU() * svd.matrixV().leftCols<2>().transpose();
        }
    });

    const double cmax = T ? c.maxCoeff() : 0.0;
    PoseRecovery out;
    std::vector<bool> degenerate(T);
    for (int i = 0; i < T; ++i) {
        degenerate[i] = !(c[i] > 1e-12 * cmax) || cmax == 0.0;
        if (degenerate[i])
            out.degenerate_frames.push_back(i);
    }

    const Pose fallback = (Pose() << 1, 0, 0, 0, 1, 0).finished();
    int anchor = -1;
    for (int i = 0; i < T && anchor < 0; ++i)
        if (!degenerate[i])
            anchor = i;

    std::vector<Pose> blocks(T);
    for (int i = 0; i < T; ++i) {
        if (degenerate[i]) {
            blocks[i] = i > 0 ? blocks[i - 1] : (anchor >= 0 ? polar[anchor] : fallback);
            continue;
        }
        blocks[i] = polar[i];
        if (i > 0 && (-blocks[i] - blocks[i - 1]).norm() < (blocks[i] - blocks[i - 1]).norm()) {
            blocks[i] = -blocks[i];
            c[i] = -c[i];
        }
    }
    out.poses = CameraPoseSequence(std::move(blocks));
    out.coefficients = std::move(c);
    return out;
}

} // namespace smsr
