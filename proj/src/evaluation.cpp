#include "smsr/evaluation.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/LU>
#include <Eigen/SVD>

#include "smsr/errors.hpp"
#include "smsr/parallel.hpp"

namespace smsr {

namespace {

void check_compatible(const ShapeSequence& x, const ShapeSequence& g)
{
    if (x.frames() != g.frames() || x.points() != g.points())
        throw std::invalid_argument("shape sequences differ in size: " +
                                    std::to_string(x.frames()) + "x" + std::to_string(x.points()) +
                                    " vs " + std::to_string(g.frames()) + "x" +
                                    std::to_string(g.points()));
    if (g.frames() == 0 || g.points() == 0)
        throw std::invalid_argument("empty shape sequence");
}

Matrix concat(const ShapeSequence& s)
{
    Matrix out(3, static_cast<Eigen::Index>(s.frames()) * s.points());
    for (int t = 0; t < s.frames(); ++t)
        out.middleCols(static_cast<Eigen::Index>(t) * s.points(), s.points()) = s[t];
    return out;
}

} // namespace

Alignment procrustes_align(const Matrix& x, const Matrix& g, bool allow_reflection)
{
    if (x.rows() != 3 || g.rows() != 3 || x.cols() != g.cols() || x.cols() == 0)
        throw std::invalid_argument("procrustes_align expects two 3 x N point sets");

    const Eigen::Vector3d xMean = x.rowwise().mean();
    const Eigen::Vector3d gMean = g.rowwise().mean();
    const Matrix xc = x.colwise() - xMean;
    const Matrix gc = g.colwise() - gMean;

    Alignment out;
    if (x == g) {
        // Already aligned; skip the SVD so the residual is exactly zero.
        out.aligned = g;
        return out;
    }
    const double xNorm2 = xc.squaredNorm();
    if (!(xNorm2 > 0.0)) {
        out.aligned = x;
        out.degenerate = true;
        return out;
    }

    const Eigen::Matrix3d cross = gc * xc.transpose();
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Vector3d d = Eigen::Vector3d::Ones();
    if (!allow_reflection && (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0)
        d[2] = -1.0;

    auto& tf = out.transform;
    tf.rotation = svd.matrixU() * d.asDiagonal() * svd.matrixV().transpose();
    tf.scale = svd.singularValues().dot(d) / xNorm2;
    tf.translation = gMean - tf.scale * tf.rotation * xMean;
    out.aligned = (tf.scale * tf.rotation * x).colwise() + tf.translation;
    return out;
}

ShapeSequence align_shapes(const ShapeSequence& x, const ShapeSequence& g, const MetricOptions& opts)
{
    check_compatible(x, g);
    const int T = x.frames();
    const int N = x.points();
    switch (opts.align) {
    case AlignMode::kNone:
        return x;
    case AlignMode::kSequence: {
        const Matrix all = procrustes_align(concat(x), concat(g), opts.allow_reflection).aligned;
        std::vector<Matrix> shapes(T);
        for (int t = 0; t < T; ++t)
            shapes[t] = all.middleCols(static_cast<Eigen::Index>(t) * N, N);
        return ShapeSequence(std::move(shapes));
    }
    case AlignMode::kPerFrame:
    default: {
        std::vector<Matrix> shapes(T);
        parallel_for(static_cast<std::size_t>(T), [&](std::size_t t) {
            shapes[t] = procrustes_align(x[t], g[t], opts.allow_reflection).aligned;
        });
        return ShapeSequence(std::move(shapes));
    }
    }
}

E3dResult e3d(const ShapeSequence& x, const ShapeSequence& g, const MetricOptions& opts)
{
    check_compatible(x, g);
    if (opts.error_power != 1 && opts.error_power != 2)
        throw std::invalid_argument("error power must be 1 or 2");
    const int T = g.frames();
    const int N = g.points();

    double sigma = 0.0;
    for (int t = 0; t < T; ++t) {
        const Matrix centered = g[t].colwise() - g[t].rowwise().mean();
        sigma += (centered.rowwise().squaredNorm() / N).cwiseSqrt().sum();
    }
    sigma /= 3.0 * T;
    if (!(sigma > 0.0))
        throw Error("ground truth has zero spread; e3D is undefined");

    const ShapeSequence aligned = align_shapes(x, g, opts);
    E3dResult out;
    out.per_frame.resize(T);
    double total = 0.0;
    for (int t = 0; t < T; ++t) {
        const Vector dist2 = (g[t] - aligned[t]).colwise().squaredNorm().transpose();
        const double sum = opts.error_power == 2 ? dist2.sum() : dist2.cwiseSqrt().sum();
        out.per_frame[t] = sum / (sigma * N);
        total += sum;
    }
    out.value = total / (sigma * T * N);
    return out;
}

double rms_error(const ShapeSequence& x, const ShapeSequence& g, const MetricOptions& opts)
{
    check_compatible(x, g);
    const ShapeSequence aligned = align_shapes(x, g, opts);
    double total = 0.0;
    for (int t = 0; t < g.frames(); ++t) {
        const double denom = g[t].norm();
        if (!(denom > 0.0))
            throw Error("ground-truth frame " + std::to_string(t) + " is all zeros; RMS is undefined");
        total += (aligned[t] - g[t]).norm() / denom;
    }
    return total / g.frames();
}

} // namespace smsr
