#ifndef SMSR_SYNTHETIC_HPP
#define SMSR_SYNTHETIC_HPP

#include <cstdint>
#include <random>

#include "smsr/model_types.hpp"

namespace smsr {

/*
 * Portable random source: the engine is std::mt19937_64 (fully specified by
 * the standard) and the distributions are written out here, so a seed gives
 * the same numbers on every platform and standard library.
 */
class Rng
{
public:
    explicit Rng(std::uint64_t seed) : mEngine(seed) {}

    /* uniform on [0, 1) with 53 random bits */
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /* standard normal (Box-Muller) */
    double normal();

private:
    std::mt19937_64 mEngine;
    double mSpare = 0.0;
    bool mHasSpare = false;
};

struct SceneOptions
{
    int frames = 50;
    int points = 40;
    int bases = 1;
    int motion_dct = 0;             // DCT coefficients of the shape trajectory, 0 = default
    std::uint64_t seed = 0;
    double deform_scale = 0.3;      // max |c_tk| of the non-dominant bases
    double max_angle_deg = 30.0;    // rotation amplitude about the vertical axis
    double spectral_decay = 1.0;    // trajectory coefficient j is weighted 1 / j^decay
};

struct Scene
{
    ShapeSequence shapes;
    CameraPoseSequence poses;
    Matrix basis;                   // 3K x N
    Matrix coefficients;            // T x K, first column identically 1
};

/* Rotation by angle (radians) about the vertical image axis, as a 2 x 3 block */
Pose yaw_pose(double angle);

/*
 * Low-rank deforming scene: B uniform on [-1, 1], C = Omega X with a dominant
 * constant first basis, S_t = (c_t kron I_3) B, and poses sweeping
 * +-max_angle sinusoidally once over the sequence.
 */
Scene generate_low_rank_scene(const SceneOptions& opts);

/* W_i = R_i S_i, centroid registered */
TrackTable orthographic_project(const ShapeSequence& s, const CameraPoseSequence& r);

/* i.i.d. Gaussian noise of std sigma_rel * rms(W), then re-registered */
TrackTable add_noise(const TrackTable& w, double sigma_rel, std::uint64_t seed);

} // namespace smsr

#endif // SMSR_SYNTHETIC_HPP
