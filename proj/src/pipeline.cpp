#include "smsr/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <utility>

#include "smsr/errors.hpp"
#include "smsr/pose_estimation.hpp"
#include "smsr/shape_recovery.hpp"
#include "smsr/tracks_io.hpp"
#include "smsr/trajectory_smoothing.hpp"

namespace smsr {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start)
{
    return std::chrono::duration<double>(Clock::now() - start).count();
}

/* Runs body, converting any non-stage failure into a StageError for `stage` */
template <typename Body>
auto in_stage(const char* stage, Body&& body)
{
    try {
        return body();
    } catch (const StageError&) {
        throw;
    } catch (const SolverAbort& e) {
        throw StageError(stage, e.what(), true);
    } catch (const std::exception& e) {
        throw StageError(stage, e.what());
    }
}

Matrix project(const CameraPoseSequence& r, const ShapeSequence& s)
{
    Matrix out(2 * s.frames(), s.points());
    for (int t = 0; t < s.frames(); ++t)
        out.middleRows(2 * t, 2) = r[t] * s[t];
    return out;
}

} // namespace

PipelineResult reconstruct(const TrackTable& raw, const SolverConfig& cfg,
                           const std::optional<ShapeSequence>& ground_truth,
                           const MetricOptions& metrics)
{
    const auto start = Clock::now();
    in_stage("config", [&] { cfg.validate(); return 0; });

    PipelineResult result;
    auto& report = result.report;
    report.config = cfg;

    result.registered = in_stage("input", [&] { return register_to_centroid(raw); });
    const TrackTable& w = result.registered;
    const int T = w.frames();
    const int N = w.points();
    report.frames = T;
    report.points = N;

    // Camera motion.
    auto poseStart = Clock::now();
    const int K = in_stage("pose", [&] {
        const int k = cfg.K > 0 ? cfg.K : select_basis_count(w, cfg.energy_threshold);
        if (3 * k > std::min(2 * T, N))
            throw Error("K = " + std::to_string(k) + " needs 3K <= min(2T, N) = " +
                        std::to_string(std::min(2 * T, N)));
        return k;
    });
    report.K = K;
    report.config.K = K;

    in_stage("pose", [&] {
        const FactoredPair factors = truncated_factorization(w, K, FactorSplit::kOrthonormal);
        const OrthogonalitySystem sys = build_orthogonality_system(factors.motion);
        std::optional<Matrix> f0;
        if (cfg.gram_init == GramInit::kRigid)
            f0 = rigid_warm_start(factors.motion);
        const GramSolution gram = solve_gram_proximal(sys, f0, cfg);
        report.gram_residual = (sys.A * vec(gram.gram.F())).norm() / gram.gram.F().norm();
        report.pose.iterations = gram.iterations;
        report.pose.converged = gram.converged;
        if (!gram.converged)
            report.warnings.push_back("pose: Gram solver reached pg_max_iters without converging");

        const CorrectiveTransform q = recover_corrective(gram.gram);
        if (q.degenerate)
            report.warnings.push_back("pose: Gram matrix has rank " + std::to_string(q.rank) +
                                      " < 3 (degenerate motion)");
        PoseRecovery poses = recover_poses(factors.motion, q.Q);
        report.degenerate_frames = poses.degenerate_frames;
        if (!poses.degenerate_frames.empty())
            report.warnings.push_back("pose: " + std::to_string(poses.degenerate_frames.size()) +
                                      " frame(s) with vanishing coefficient reuse the previous pose");
        result.poses = std::move(poses.poses);
        return 0;
    });
    report.pose.wall_time = seconds_since(poseStart);

    // Smooth trajectory pre-processing of W.
    const auto smoothStart = Clock::now();
    const int d = in_stage("smoothing", [&] {
        const int dd = cfg.d > 0 ? cfg.d : default_dct_count(T, K);
        if (dd < K || dd > T)
            throw Error("d = " + std::to_string(dd) + " must satisfy K <= d <= T");
        return dd;
    });
    report.d = d;
    report.config.d = d;

    TrackTable measurements = w;
    if (smoothing_enabled(T, N, cfg)) {
        in_stage("smoothing", [&] {
            const TrajectoryFit fit = fit_shape_trajectory(w, result.poses, d, K, cfg);
            measurements = smooth_measurements(w, result.poses, fit.model);
            report.smoothing_applied = true;
            report.smoothing_initial_objective = fit.initial_objective;
            report.smoothing_final_objective = fit.final_objective;
            report.smoothing.iterations = fit.iterations;
            report.smoothing.converged = fit.converged;
            if (!fit.converged)
                report.warnings.push_back("smoothing: Gauss-Newton reached gn_max_iters");
            return 0;
        });
    } else {
        report.smoothing.iterations = 0;
        if (!cfg.skip_smoothing)
            report.warnings.push_back("smoothing: skipped automatically for T*N > " +
                                      std::to_string(static_cast<long long>(kSmoothingAutoSkipSize)));
    }
    report.smoothing.wall_time = seconds_since(smoothStart);

    // Non-rigid shapes.
    const auto shapeStart = Clock::now();
    in_stage("shape", [&] {
        AdmmState state = admm_recover(measurements, result.poses, cfg);
        report.shape.iterations = state.iteration;
        report.shape.converged = state.converged;
        report.admm_residuals = std::move(state.residual_history);
        if (!state.converged)
            report.warnings.push_back("shape: ADMM reached admm_max_iters");
        result.shapes = std::move(state.S);
        return 0;
    });
    report.shape.wall_time = seconds_since(shapeStart);

    report.reprojection_error = (w.data() - project(result.poses, result.shapes)).norm();

    if (ground_truth) {
        in_stage("evaluate", [&] {
            const E3dResult err = e3d(result.shapes, *ground_truth, metrics);
            report.e3d = err.value;
            report.per_frame_errors = err.per_frame;
            report.rms = rms_error(result.shapes, *ground_truth, metrics);
            return 0;
        });
    }

    report.total_time = seconds_since(start);
    return result;
}

PipelineResult reconstruct_search(const TrackTable& raw, const SolverConfig& cfg,
                                  int k_min, int k_max,
                                  const std::optional<ShapeSequence>& ground_truth,
                                  const MetricOptions& metrics)
{
    if (k_min < 1 || k_max < k_min)
        throw StageError("config", "K search range must satisfy 1 <= a <= b");
    const int limit = std::min(2 * (static_cast<int>(raw.data().rows()) / 2),
                               static_cast<int>(raw.data().cols())) / 3;
    k_max = std::min(k_max, limit);
    if (k_max < k_min)
        throw StageError("config", "no K in the search range satisfies 3K <= min(2T, N)");

    const auto start = Clock::now();
    std::optional<PipelineResult> best;
    std::vector<ReconstructionReport::SearchEntry> entries;
    std::vector<std::string> failures;
    std::optional<StageError> lastError;
    for (int k = k_min; k <= k_max; ++k) {
        SolverConfig run = cfg;
        run.K = k;
        try {
            PipelineResult r = reconstruct(raw, run, ground_truth, metrics);
            entries.push_back({k, r.report.reprojection_error});
            if (!best || r.report.reprojection_error < best->report.reprojection_error)
                best = std::move(r);
        } catch (const StageError& e) {
            entries.push_back({k, std::numeric_limits<double>::quiet_NaN()});
            failures.push_back("search: K = " + std::to_string(k) + " failed: " + e.what());
            lastError = e;
        }
    }
    if (!best)
        throw *lastError;

    best->report.search = std::move(entries);
    for (auto& f : failures)
        best->report.warnings.push_back(std::move(f));
    best->report.config.K = best->report.K;
    best->report.total_time = seconds_since(start);
    return std::move(*best);
}

} // namespace smsr
