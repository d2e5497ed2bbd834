#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>

#include "smsr/errors.hpp"
#include "smsr/tracks_io.hpp"
#include "test_support.hpp"

using namespace smsr;
using testing_support::Random;
using testing_support::TempDir;
using testing_support::write_text;

namespace {

int parse_error_line(const std::function<void()>& body)
{
    try {
        body();
    } catch (const ParseError& e) {
        return e.line();
    }
    return -1;
}

/* Minimal independent ASCII PLY reader: vertex count and x y z rows */
Matrix read_ply(const std::filesystem::path& path)
{
    std::ifstream in(path);
    std::string line;
    long count = -1;
    std::vector<std::string> properties;
    while (std::getline(in, line) && line != "end_header") {
        std::istringstream words(line);
        std::string keyword;
        words >> keyword;
        if (keyword == "element") {
            std::string name;
            words >> name >> count;
        } else if (keyword == "property") {
            std::string type, name;
            words >> type >> name;
            properties.push_back(name);
        }
    }
    EXPECT_EQ(properties, (std::vector<std::string>{"x", "y", "z"}));
    Matrix pts(3, count);
    for (long j = 0; j < count; ++j) {
        std::getline(in, line);
        double x, y, z;
        EXPECT_EQ(std::sscanf(line.c_str(), "%lf %lf %lf", &x, &y, &z), 3);
        pts.col(j) << x, y, z;
    }
    return pts;
}

} // namespace

TEST(LoadTracks, MinimalFile)
{
    TempDir dir;
    write_text(dir / "t.txt", "NRSFM-TRACKS v1 1 2\n0 1\n0 0\n");
    const TrackTable t = load_tracks(dir / "t.txt");
    EXPECT_EQ(t.frames(), 1);
    EXPECT_EQ(t.points(), 2);
    EXPECT_FALSE(t.centered());
    Matrix expected(2, 2);
    expected << 0, 1,
                0, 0;
    EXPECT_EQ(t.data(), expected);
}

TEST(LoadTracks, ReportsLineOfShortRow)
{
    TempDir dir;
    write_text(dir / "t.txt", "NRSFM-TRACKS v1 1 3\n1 2 3\n4 5\n");
    EXPECT_EQ(parse_error_line([&] { load_tracks(dir / "t.txt"); }), 3);
}

TEST(LoadTracks, CountsCommentAndBlankLines)
{
    TempDir dir;
    write_text(dir / "t.txt", "# tracks\nNRSFM-TRACKS v1 1 2\n\n1 2\n# y row next\n3 x\n");
    EXPECT_EQ(parse_error_line([&] { load_tracks(dir / "t.txt"); }), 6);

    write_text(dir / "ok.txt", "# tracks\nNRSFM-TRACKS v1 1 2\n\n1 2\n# y row next\n3 4\n");
    EXPECT_EQ(load_tracks(dir / "ok.txt").data()(1, 1), 4.0);
}

TEST(LoadTracks, RejectsMalformedInput)
{
    TempDir dir;
    write_text(dir / "header.txt", "NRSFM-TRACK v1 1 2\n0 1\n0 0\n");
    EXPECT_EQ(parse_error_line([&] { load_tracks(dir / "header.txt"); }), 1);
    write_text(dir / "nan.txt", "NRSFM-TRACKS v1 1 2\n0 nan\n0 0\n");
    EXPECT_EQ(parse_error_line([&] { load_tracks(dir / "nan.txt"); }), 2);
    write_text(dir / "inf.txt", "NRSFM-TRACKS v1 1 2\n0 1\ninf 0\n");
    EXPECT_EQ(parse_error_line([&] { load_tracks(dir / "inf.txt"); }), 3);
    write_text(dir / "rows.txt", "NRSFM-TRACKS v1 2 2\n0 1\n0 0\n");
    EXPECT_THROW(load_tracks(dir / "rows.txt"), ParseError);
    write_text(dir / "extra.txt", "NRSFM-TRACKS v1 1 2\n0 1\n0 0\n1 1\n");
    EXPECT_EQ(parse_error_line([&] { load_tracks(dir / "extra.txt"); }), 4);
    EXPECT_THROW(load_tracks(dir / "missing.txt"), Error);
}

TEST(SaveTracks, RoundTripIsBitIdentical)
{
    TempDir dir;
    Random rng(3);
    const TrackTable t(rng.matrix(10, 7) * 123.456);
    save_tracks(t, dir / "t.txt");
    EXPECT_EQ(load_tracks(dir / "t.txt").data(), t.data());
}

TEST(RegisterToCentroid, RemovesRowMeans)
{
    Matrix m(2, 3);
    m << 1, 2, 3,
         5, 5, 5;
    const TrackTable r = register_to_centroid(TrackTable(m));
    EXPECT_TRUE(r.centered());
    EXPECT_DOUBLE_EQ(r.data()(0, 0), -1.0);
    EXPECT_DOUBLE_EQ(r.data()(0, 1), 0.0);
    EXPECT_DOUBLE_EQ(r.data()(0, 2), 1.0);
    EXPECT_EQ(r.data().row(1).cwiseAbs().maxCoeff(), 0.0);
}

TEST(RegisterToCentroid, IdempotentAndNormNonIncreasing)
{
    Random rng(4);
    const int N = 25;
    const TrackTable raw(rng.matrix(8, N) + Matrix::Constant(8, N, 3.0));
    const TrackTable once = register_to_centroid(raw);
    const TrackTable twice = register_to_centroid(once);
    EXPECT_LE(testing_support::max_abs(once.data() - twice.data()), 1e-15);
    for (Eigen::Index i = 0; i < raw.data().rows(); ++i) {
        EXPECT_LE(std::abs(once.data().row(i).sum()), 1e-9 * N);
        EXPECT_LE(once.data().row(i).norm(), raw.data().row(i).norm());
    }
}

TEST(Shapes, MinimalFileAndErrors)
{
    TempDir dir;
    write_text(dir / "s.txt", "NRSFM-SHAPES v1 1 1\n1\n2\n3\n");
    const ShapeSequence s = load_shapes(dir / "s.txt");
    ASSERT_EQ(s.frames(), 1);
    EXPECT_EQ(s[0](0, 0), 1.0);
    EXPECT_EQ(s[0](1, 0), 2.0);
    EXPECT_EQ(s[0](2, 0), 3.0);

    write_text(dir / "bad.txt", "NRSFM-SHAPES v1 1 2\n1 2\n3\n4 5\n");
    EXPECT_EQ(parse_error_line([&] { load_shapes(dir / "bad.txt"); }), 3);
}

TEST(Shapes, RoundTripIsExact)
{
    TempDir dir;
    Random rng(5);
    std::vector<Matrix> frames;
    for (int t = 0; t < 4; ++t)
        frames.push_back(rng.matrix(3, 6) * 1e-3);
    const ShapeSequence s(frames);
    save_shapes(s, dir / "s.txt");
    const ShapeSequence back = load_shapes(dir / "s.txt");
    for (int t = 0; t < 4; ++t)
        EXPECT_EQ(back[t], s[t]);
}

TEST(Poses, RoundTripAndValidation)
{
    TempDir dir;
    Random rng(6);
    const CameraPoseSequence poses({rng.pose(), rng.pose(), rng.pose()});
    save_poses(poses, dir / "p.txt");
    const CameraPoseSequence back = load_poses(dir / "p.txt");
    ASSERT_EQ(back.frames(), 3);
    for (int i = 0; i < 3; ++i)
        EXPECT_EQ(back[i], poses[i]);

    write_text(dir / "bad.txt", "NRSFM-POSES v1 1\n2 0 0\n0 1 0\n");
    EXPECT_THROW(load_poses(dir / "bad.txt"), ParseError);
}

TEST(ExportPly, SinglePointFile)
{
    TempDir dir;
    Matrix p(3, 1);
    p << 1.5, -2, 3;
    const auto files = export_ply(ShapeSequence({p}), dir.path());
    ASSERT_EQ(files.size(), 1u);
    EXPECT_EQ(files[0].filename(), "frame_0000.ply");
    const std::string text = testing_support::read_text(files[0]);
    EXPECT_NE(text.find("format ascii 1.0"), std::string::npos);
    EXPECT_NE(text.find("element vertex 1\n"), std::string::npos);
    EXPECT_NE(text.find("end_header\n1.5 -2 3\n"), std::string::npos);
}

TEST(ExportPly, OneFilePerFrameReadableByIndependentParser)
{
    TempDir dir;
    Random rng(7);
    std::vector<Matrix> frames;
    for (int t = 0; t < 3; ++t)
        frames.push_back(rng.matrix(3, 5));
    const auto files = export_ply(ShapeSequence(frames), dir / "ply");
    ASSERT_EQ(files.size(), 3u);
    EXPECT_EQ(files[2].filename(), "frame_0002.ply");
    for (int t = 0; t < 3; ++t)
        EXPECT_LE(testing_support::max_abs(read_ply(files[t]) - frames[t]), 1e-12);
}

TEST(Config, JsonRoundTrip)
{
    SolverConfig cfg;
    cfg.K = 4;
    cfg.rho = 1.05;
    cfg.gram_init = GramInit::kIdentity;
    cfg.freeze_low_block = true;
    cfg.seed = 99;
    const SolverConfig back = config_from_json(config_to_json(cfg));
    EXPECT_EQ(back.K, 4);
    EXPECT_DOUBLE_EQ(back.rho, 1.05);
    EXPECT_EQ(back.gram_init, GramInit::kIdentity);
    EXPECT_TRUE(back.freeze_low_block);
    EXPECT_EQ(back.seed, 99u);
    EXPECT_EQ(config_to_json(back), config_to_json(cfg));
}

TEST(Config, RejectsUnknownKeysAndBadValues)
{
    EXPECT_THROW(config_from_json(nlohmann::json{{"Kay", 3}}), ParseError);
    EXPECT_THROW(config_from_json(nlohmann::json{{"rho", 0.5}}), ParseError);
    EXPECT_THROW(config_from_json(nlohmann::json{{"rho", "fast"}}), ParseError);
    EXPECT_THROW(config_from_json(nlohmann::json{{"gram_init", "random"}}), ParseError);
    EXPECT_THROW(config_from_json(nlohmann::json::array()), ParseError);
    EXPECT_EQ(config_from_json(nlohmann::json{{"mu0", 2.0}}).mu0, 2.0);

    TempDir dir;
    write_text(dir / "c.json", "{\"K\": 2, \"skip_smoothing\": true}");
    const SolverConfig cfg = load_config(dir / "c.json");
    EXPECT_EQ(cfg.K, 2);
    EXPECT_TRUE(cfg.skip_smoothing);
    write_text(dir / "broken.json", "{\"K\": ");
    EXPECT_THROW(load_config(dir / "broken.json"), ParseError);
}

TEST(Report, JsonCarriesAllFields)
{
    ReconstructionReport r;
    r.frames = 2;
    r.points = 3;
    r.K = 1;
    r.per_frame_errors = {0.1, 0.2};
    r.search.push_back({1, 0.5});
    const nlohmann::json j = report_to_json(r);
    for (const char* key : {"frames", "points", "K", "d", "e3d", "rms", "per_frame_errors",
                            "reprojection_error", "stages", "total_time", "gram_residual",
                            "degenerate_frames", "smoothing", "admm_residuals", "search",
                            "warnings", "config"})
        EXPECT_TRUE(j.contains(key)) << key;
    EXPECT_TRUE(j["e3d"].is_null());
    EXPECT_EQ(j["search"][0]["K"], 1);
    EXPECT_EQ(j["stages"]["pose"]["iterations"], 0);

    r.e3d = 0.25;
    EXPECT_EQ(report_to_json(r)["e3d"], 0.25);
}
