#ifndef SMSR_EVALUATION_HPP
#define SMSR_EVALUATION_HPP

#include <vector>

#include <Eigen/Core>

#include "smsr/model_types.hpp"

namespace smsr {

/* y = scale * rotation * x + translation */
struct SimilarityTransform
{
    double scale = 1.0;
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();
};

struct Alignment
{
    Matrix aligned;                 // 3 x N
    SimilarityTransform transform;
    bool degenerate = false;        // x has coincident points: identity returned
};

enum class AlignMode
{
    kPerFrame,      // one similarity per frame
    kSequence,      // one similarity for the whole sequence
    kNone,
};

struct MetricOptions
{
    bool allow_reflection = true;
    AlignMode align = AlignMode::kPerFrame;
    int error_power = 2;            // 2: squared point distance, 1: Euclidean distance
};

struct E3dResult
{
    double value = 0.0;
    /* per-frame contributions sum_j e_tj / (sigma N); value is their mean */
    std::vector<double> per_frame;
};

/* Least-squares similarity mapping x onto g (orthogonal Procrustes) */
Alignment procrustes_align(const Matrix& x, const Matrix& g, bool allow_reflection = true);

/* x aligned to g under opts.align */
ShapeSequence align_shapes(const ShapeSequence& x, const ShapeSequence& g, const MetricOptions& opts);

/*
 * Normalized mean 3D error: (1 / (sigma T N)) sum_t sum_j ||G_tj - X_tj||^p,
 * sigma the mean per-axis (population) standard deviation of the ground truth.
 */
E3dResult e3d(const ShapeSequence& x, const ShapeSequence& g, const MetricOptions& opts = {});

/* (1/T) sum_t ||X_t - G_t||_F / ||G_t||_F after alignment */
double rms_error(const ShapeSequence& x, const ShapeSequence& g, const MetricOptions& opts = {});

} // namespace smsr

#endif // SMSR_EVALUATION_HPP
