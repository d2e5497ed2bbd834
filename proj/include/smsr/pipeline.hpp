#ifndef SMSR_PIPELINE_HPP
#define SMSR_PIPELINE_HPP

#include <optional>

#include "smsr/evaluation.hpp"
#include "smsr/model_types.hpp"

namespace smsr {

struct PipelineResult
{
    ShapeSequence shapes;
    CameraPoseSequence poses;
    TrackTable registered;          // centroid-registered input
    ReconstructionReport report;
};

/*
 * Full reconstruction: registration, basis selection, pose estimation,
 * optional trajectory smoothing of W, and nuclear-norm shape recovery.
 * Metrics are filled in when ground truth is given. Failures are raised as
 * StageError tagged with the failing stage.
 */
PipelineResult reconstruct(const TrackTable& raw, const SolverConfig& cfg,
                           const std::optional<ShapeSequence>& ground_truth = std::nullopt,
                           const MetricOptions& metrics = {});

/*
 * Runs reconstruct for every feasible K in [k_min, k_max] and keeps the run
 * with the smallest final reprojection error against the registered input.
 */
PipelineResult reconstruct_search(const TrackTable& raw, const SolverConfig& cfg,
                                  int k_min, int k_max,
                                  const std::optional<ShapeSequence>& ground_truth = std::nullopt,
                                  const MetricOptions& metrics = {});

} // namespace smsr

#endif // SMSR_PIPELINE_HPP
