#include "smsr/model_types.hpp"

#include <cmath>
#include <stdexcept>

namespace smsr {

TrackTable::TrackTable(Matrix data, bool centered)
    : mData(std::move(data)), mCentered(centered)
{
    if (mData.rows() == 0 || mData.rows() % 2 != 0)
        throw std::invalid_argument("track table needs 2T rows with T >= 1");
    if (mData.cols() == 0)
        throw std::invalid_argument("track table needs at least one point");
    if (!mData.allFinite())
        throw std::invalid_argument("track table has non-finite entries");

    if (mCentered) {
        const double n = static_cast<double>(mData.cols());
        const double tol = 1e-9 * n * (mData.cwiseAbs().maxCoeff() + 1.0);
        if ((mData.rowwise().sum().cwiseAbs().array() > tol).any())
            throw std::invalid_argument("track table flagged centered but rows do not sum to zero");
    }
}

CameraPoseSequence::CameraPoseSequence(std::vector<Pose> blocks)
    : mBlocks(std::move(blocks))
{
    for (const auto& r : mBlocks) {
        if (!r.allFinite())
            throw std::invalid_argument("pose block has non-finite entries");
        const double err = (r * r.transpose() - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff();
        if (err > kOrthonormalityTol)
            throw std::invalid_argument("pose block rows are not orthonormal");
    }
}

Matrix CameraPoseSequence::stacked() const
{
    Matrix out(2 * frames(), 3);
    for (int i = 0; i < frames(); ++i)
        out.middleRows(2 * i, 2) = mBlocks[i];
    return out;
}

double CameraPoseSequence::orthonormalityError() const
{
    double worst = 0.0;
    for (const auto& r : mBlocks)
        worst = std::max(worst, (r * r.transpose() - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff());
    return worst;
}

ShapeSequence::ShapeSequence(std::vector<Matrix> shapes)
    : mShapes(std::move(shapes))
{
    if (mShapes.empty())
        return;
    const auto n = mShapes[0].cols();
    for (const auto& s : mShapes) {
        if (s.rows() != 3 || s.cols() != n)
            throw std::invalid_argument("every shape must be 3 x N with a common N");
        if (!s.allFinite())
            throw std::invalid_argument("shape has non-finite entries");
    }
}

MotionMatrix::MotionMatrix(Matrix data)
    : mData(std::move(data))
{
    if (mData.rows() % 2 != 0 || mData.cols() % 3 != 0)
        throw std::invalid_argument("motion matrix must be 2T x 3K");
}

TrajectoryModel::TrajectoryModel(Matrix omega, Matrix X, Matrix basis)
    : mOmega(std::move(omega)), mX(std::move(X)), mBasis(std::move(basis))
{
    const auto T = mOmega.rows();
    const auto d = mOmega.cols();
    const auto K = mX.cols();
    if (mX.rows() != d)
        throw std::invalid_argument("trajectory X must have d rows");
    if (!(1 <= K && K <= d && d <= T))
        throw std::invalid_argument("trajectory model requires 1 <= K <= d <= T");
    const Matrix gram = mOmega.transpose() * mOmega;
    if ((gram - Matrix::Identity(d, d)).cwiseAbs().maxCoeff() > 1e-12)
        throw std::invalid_argument("DCT basis columns are not orthonormal");
    if (mBasis.size() != 0 && mBasis.rows() != 3 * K)
        throw std::invalid_argument("basis shapes must have 3K rows");
}

CorrectiveGram::CorrectiveGram(Matrix F)
    : mF(std::move(F))
{
    if (mF.rows() != mF.cols() || mF.rows() % 3 != 0 || mF.rows() == 0)
        throw std::invalid_argument("Gram matrix must be 3K x 3K");
    if (!mF.allFinite())
        throw std::invalid_argument("Gram matrix has non-finite entries");
    const double scale = 1.0 + mF.cwiseAbs().maxCoeff();
    if ((mF - mF.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
        throw std::invalid_argument("Gram matrix is not symmetric");
}

void SolverConfig::validate() const
{
    if (K < 0 || d < 0)
        throw std::invalid_argument("K and d must be >= 0");
    if (!(mu0 > 0.0))
        throw std::invalid_argument("mu0 must be > 0");
    if (!(rho >= 1.0))
        throw std::invalid_argument("rho must be >= 1");
    if (!(mu_max >= mu0))
        throw std::invalid_argument("mu_max must be >= mu0");
    if (!(admm_tol > 0.0) || !(pg_tol > 0.0) || !(gn_tol > 0.0))
        throw std::invalid_argument("tolerances must be > 0");
    if (admm_max_iters < 1 || pg_max_iters < 1 || gn_max_iters < 0 || admm_inner_iters < 1)
        throw std::invalid_argument("iteration caps must be positive");
    if (!(energy_threshold > 0.0 && energy_threshold <= 1.0))
        throw std::invalid_argument("energy_threshold must lie in (0, 1]");
}

Vector vec(const Matrix& m)
{
    // Eigen's default storage is column-major, so the raw buffer is vec(m).
    return Eigen::Map<const Vector>(m.data(), m.size());
}

Matrix unvec(const Vector& v, int rows, int cols)
{
    if (v.size() != static_cast<Eigen::Index>(rows) * cols)
        throw std::invalid_argument("unvec: size mismatch");
    return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

RowVector kron_row(const RowVector& a, const RowVector& b)
{
    if (a.size() != b.size())
        throw std::invalid_argument("kron_row: length mismatch");
    const auto p = a.size();
    RowVector out(p * p);
    for (Eigen::Index j = 0; j < p; ++j)
        out.segment(j * p, p) = b[j] * a;
    return out;
}

} // namespace smsr
