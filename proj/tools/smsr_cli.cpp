#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "smsr/errors.hpp"
#include "smsr/evaluation.hpp"
#include "smsr/pipeline.hpp"
#include "smsr/synthetic.hpp"
#include "smsr/tracks_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitSolverAbort = 2;

struct MetricFlags
{
    bool no_reflection = false;
    int error_power = 2;
    std::string align = "per-frame";

    smsr::MetricOptions options() const
    {
        smsr::MetricOptions opts;
        opts.allow_reflection = !no_reflection;
        opts.error_power = error_power;
        if (align == "sequence")
            opts.align = smsr::AlignMode::kSequence;
        else if (align == "none")
            opts.align = smsr::AlignMode::kNone;
        return opts;
    }
};

void add_metric_flags(CLI::App* cmd, MetricFlags& flags)
{
    cmd->add_flag("--no-reflection", flags.no_reflection,
                  "Restrict Procrustes alignment to proper rotations");
    cmd->add_option("--error-power", flags.error_power,
                    "Point error exponent: 2 = squared distance, 1 = distance")
        ->check(CLI::IsMember({1, 2}));
    cmd->add_option("--align", flags.align, "Alignment before scoring")
        ->check(CLI::IsMember({"per-frame", "sequence", "none"}));
}

/* "a..b" -> (a, b) */
std::pair<int, int> parse_range(const std::string& text)
{
    const auto dots = text.find("..");
    if (dots == std::string::npos)
        throw CLI::ValidationError("--search-K", "expected a range 'a..b', got '" + text + "'");
    try {
        const int a = std::stoi(text.substr(0, dots));
        const int b = std::stoi(text.substr(dots + 2));
        if (a < 1 || b < a)
            throw CLI::ValidationError("--search-K", "range must satisfy 1 <= a <= b");
        return {a, b};
    } catch (const std::logic_error&) {
        throw CLI::ValidationError("--search-K", "expected a range 'a..b', got '" + text + "'");
    }
}

json metrics_json(const smsr::ShapeSequence& x, const smsr::ShapeSequence& g,
                  const smsr::MetricOptions& opts)
{
    const smsr::E3dResult err = smsr::e3d(x, g, opts);
    return json{{"e3d", err.value}, {"rms", smsr::rms_error(x, g, opts)}, {"per_frame", err.per_frame}};
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Non-rigid structure from motion under an orthographic camera"};
    app.require_subcommand(1);

    // reconstruct
    auto* rec = app.add_subcommand("reconstruct", "Recover camera poses and shapes from a tracks file");
    std::string tracksPath;
    std::string configPath;
    std::string gtPath;
    std::string searchK;
    std::string recOut = ".";
    std::optional<int> K, d, maxIters;
    std::optional<double> mu, rho, tol;
    std::optional<std::uint64_t> seed;
    bool skipSmoothing = false;
    MetricFlags recMetrics;
    rec->add_option("tracks", tracksPath, "NRSFM-TRACKS input file")->required();
    rec->add_option("--config", configPath, "JSON solver configuration (flags override it)");
    auto* kOpt = rec->add_option("--K", K, "Number of shape bases (default: automatic)")
                     ->check(CLI::PositiveNumber);
    rec->add_option("--search-K", searchK, "Grid search over K, e.g. 1..5")->excludes(kOpt);
    rec->add_option("--d", d, "Number of DCT coefficients (default: automatic)")
        ->check(CLI::PositiveNumber);
    rec->add_option("--mu", mu, "Initial ADMM step size mu0")->check(CLI::PositiveNumber);
    rec->add_option("--rho", rho, "ADMM step growth rate")->check(CLI::Range(1.0, 1e9));
    rec->add_option("--tol", tol, "ADMM relative tolerance")->check(CLI::PositiveNumber);
    rec->add_option("--max-iters", maxIters, "ADMM iteration cap")->check(CLI::PositiveNumber);
    rec->add_flag("--skip-smoothing", skipSmoothing, "Skip the trajectory smoothing stage");
    rec->add_option("--seed", seed, "Seed for randomized tie-breaking");
    rec->add_option("--gt", gtPath, "Ground-truth NRSFM-SHAPES file; fills the report metrics");
    rec->add_option("--out", recOut, "Output directory (shapes.txt, poses.txt, report.json)");
    add_metric_flags(rec, recMetrics);

    // evaluate
    auto* eval = app.add_subcommand("evaluate", "Score a reconstruction against ground truth");
    std::string reconPath;
    std::string truthPath;
    MetricFlags evalMetrics;
    eval->add_option("reconstruction", reconPath, "Reconstructed NRSFM-SHAPES file")->required();
    eval->add_option("ground_truth", truthPath, "Ground-truth NRSFM-SHAPES file")->required();
    add_metric_flags(eval, evalMetrics);

    // synth
    auto* synth = app.add_subcommand("synth", "Generate a synthetic benchmark fixture");
    smsr::SceneOptions scene;
    double noise = 0.0;
    std::uint64_t noiseSeed = 1;
    std::string synthOut = ".";
    synth->add_option("--T", scene.frames, "Frames")->check(CLI::PositiveNumber);
    synth->add_option("--N", scene.points, "Points")->check(CLI::PositiveNumber);
    synth->add_option("--K", scene.bases, "Shape bases")->check(CLI::PositiveNumber);
    synth->add_option("--motion-dct", scene.motion_dct, "DCT coefficients of the shape trajectory (0 = default)")
        ->check(CLI::NonNegativeNumber);
    synth->add_option("--seed", scene.seed, "Generator seed");
    synth->add_option("--deform-scale", scene.deform_scale, "Peak coefficient of the non-dominant bases")
        ->check(CLI::NonNegativeNumber);
    synth->add_option("--max-angle", scene.max_angle_deg, "Rotation amplitude in degrees");
    synth->add_option("--noise", noise, "Gaussian noise, relative to the RMS track magnitude")
        ->check(CLI::NonNegativeNumber);
    synth->add_option("--noise-seed", noiseSeed, "Noise seed");
    synth->add_option("--out", synthOut, "Output directory (tracks.txt, shapes.txt, poses.txt)");

    // export
    auto* exp = app.add_subcommand("export", "Write one PLY point cloud per frame");
    std::string exportShapes;
    std::string exportOut = ".";
    exp->add_option("shapes", exportShapes, "NRSFM-SHAPES file")->required();
    exp->add_option("--out", exportOut, "Output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return kExitError;
    }

    try {
        if (*rec) {
            smsr::SolverConfig cfg;
            if (!configPath.empty())
                cfg = smsr::load_config(configPath);
            if (K) cfg.K = *K;
            if (d) cfg.d = *d;
            if (mu) cfg.mu0 = *mu;
            if (rho) cfg.rho = *rho;
            if (tol) cfg.admm_tol = *tol;
            if (maxIters) cfg.admm_max_iters = *maxIters;
            if (seed) cfg.seed = *seed;
            if (skipSmoothing) cfg.skip_smoothing = true;

            const smsr::TrackTable tracks = smsr::load_tracks(tracksPath);
            std::optional<smsr::ShapeSequence> gt;
            if (!gtPath.empty())
                gt = smsr::load_shapes(gtPath);

            smsr::PipelineResult result;
            if (!searchK.empty()) {
                const auto [a, b] = parse_range(searchK);
                result = smsr::reconstruct_search(tracks, cfg, a, b, gt, recMetrics.options());
            } else {
                result = smsr::reconstruct(tracks, cfg, gt, recMetrics.options());
            }

            fs::create_directories(recOut);
            const fs::path dir(recOut);
            smsr::save_shapes(result.shapes, dir / "shapes.txt");
            smsr::save_poses(result.poses, dir / "poses.txt");
            smsr::save_report(result.report, dir / "report.json");

            const auto& r = result.report;
            json summary{{"K", r.K},
                         {"d", r.d},
                         {"reprojection_error", r.reprojection_error},
                         {"total_time", r.total_time},
                         {"out", dir.string()}};
            if (r.e3d)
                summary["e3d"] = *r.e3d;
            std::cout << summary.dump() << '\n';
            for (const auto& w : r.warnings)
                std::cerr << "warning: " << w << '\n';
        } else if (*eval) {
            const smsr::ShapeSequence x = smsr::load_shapes(reconPath);
            const smsr::ShapeSequence g = smsr::load_shapes(truthPath);
            std::cout << metrics_json(x, g, evalMetrics.options()).dump(2) << '\n';
        } else if (*synth) {
            const smsr::Scene s = smsr::generate_low_rank_scene(scene);
            smsr::TrackTable w = smsr::orthographic_project(s.shapes, s.poses);
            w = smsr::add_noise(w, noise, noiseSeed);

            fs::create_directories(synthOut);
            const fs::path dir(synthOut);
            smsr::save_tracks(w, dir / "tracks.txt");
            smsr::save_shapes(s.shapes, dir / "shapes.txt");
            smsr::save_poses(s.poses, dir / "poses.txt");
            std::cout << json{{"frames", scene.frames},
                              {"points", scene.points},
                              {"bases", scene.bases},
                              {"seed", scene.seed},
                              {"deform_scale", scene.deform_scale},
                              {"max_angle_deg", scene.max_angle_deg},
                              {"noise", noise},
                              {"out", dir.string()}}
                             .dump()
                      << '\n';
        } else if (*exp) {
            const auto files = smsr::export_ply(smsr::load_shapes(exportShapes), exportOut);
            std::cout << json{{"files", files.size()}, {"out", exportOut}}.dump() << '\n';
        }
    } catch (const smsr::StageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.solverAbort() ? kExitSolverAbort : kExitError;
    } catch (const smsr::SolverAbort& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitSolverAbort;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitError;
    }
    return kExitOk;
}
