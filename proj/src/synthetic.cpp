#include "smsr/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "smsr/tracks_io.hpp"
#include "smsr/trajectory_smoothing.hpp"

namespace smsr {

double Rng::uniform()
{
    return static_cast<double>(mEngine() >> 11) * 0x1.0p-53;
}

double Rng::normal()
{
    if (mHasSpare) {
        mHasSpare = false;
        return mSpare;
    }
    const double u1 = 1.0 - uniform();     // (0, 1], safe for log
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    mSpare = radius * std::sin(angle);
    mHasSpare = true;
    return radius * std::cos(angle);
}

Pose yaw_pose(double angle)
{
    Pose r;
    r << std::cos(angle), 0.0, std::sin(angle),
         0.0, 1.0, 0.0;
    return r;
}

Scene generate_low_rank_scene(const SceneOptions& opts)
{
    const int T = opts.frames;
    const int N = opts.points;
    const int K = opts.bases;
    if (T < 1 || N < 1 || K < 1)
        throw std::invalid_argument("frames, points and bases must be >= 1");
    const int d = opts.motion_dct > 0 ? opts.motion_dct : default_dct_count(T, K);
    if (d < K || d > T)
        throw std::invalid_argument("motion DCT count must satisfy K <= d <= T");
    if (!(opts.deform_scale >= 0.0))
        throw std::invalid_argument("deform_scale must be >= 0");

    Rng rng(opts.seed);
    Scene scene;
    scene.basis.resize(3 * K, N);
    for (int i = 0; i < 3 * K; ++i)
        for (int j = 0; j < N; ++j)
            scene.basis(i, j) = rng.uniform(-1.0, 1.0);

    Matrix X(d, K);
    for (int j = 0; j < d; ++j)
        for (int k = 0; k < K; ++k)
            X(j, k) = rng.normal() / std::pow(j + 1.0, opts.spectral_decay);

    // First basis: constant unit coefficient (the first DCT column is 1/sqrt(T)).
    X.col(0).setZero();
    X(0, 0) = std::sqrt(static_cast<double>(T));

    const Matrix omega = dct_basis(T, d);
    for (int k = 1; k < K; ++k) {
        const double peak = (omega * X.col(k)).cwiseAbs().maxCoeff();
        X.col(k) *= peak > 0.0 ? opts.deform_scale / peak : 0.0;
    }
    scene.coefficients = omega * X;
    scene.coefficients.col(0).setOnes();

    std::vector<Matrix> shapes(T);
    std::vector<Pose> poses(T);
    const double amplitude = opts.max_angle_deg * std::numbers::pi / 180.0;
    for (int t = 0; t < T; ++t) {
        shapes[t] = Matrix::Zero(3, N);
        for (int k = 0; k < K; ++k)
            shapes[t] += scene.coefficients(t, k) * scene.basis.middleRows(3 * k, 3);
        poses[t] = yaw_pose(amplitude * std::sin(2.0 * std::numbers::pi * t / T));
    }
    scene.shapes = ShapeSequence(std::move(shapes));
    scene.poses = CameraPoseSequence(std::move(poses));
    return scene;
}

TrackTable orthographic_project(const ShapeSequence& s, const CameraPoseSequence& r)
{
    if (s.frames() != r.frames() || s.frames() == 0)
        throw std::invalid_argument("shape and pose counts differ");
    Matrix w(2 * s.frames(), s.points());
    for (int t = 0; t < s.frames(); ++t)
        w.middleRows(2 * t, 2) = r[t] * s[t];
    return register_to_centroid(TrackTable(std::move(w)));
}

TrackTable add_noise(const TrackTable& w, double sigma_rel, std::uint64_t seed)
{
    if (!(sigma_rel >= 0.0))
        throw std::invalid_argument("noise level must be >= 0");
    if (sigma_rel == 0.0)
        return w;
    const double rms = std::sqrt(w.data().squaredNorm() / static_cast<double>(w.data().size()));
    const double sd = sigma_rel * rms;
    Rng rng(seed);
    Matrix noisy = w.data();
    for (Eigen::Index i = 0; i < noisy.rows(); ++i)
        for (Eigen::Index j = 0; j < noisy.cols(); ++j)
            noisy(i, j) += sd * rng.normal();
    return register_to_centroid(TrackTable(std::move(noisy)));
}

} // namespace smsr
