#include "smsr/tracks_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "smsr/errors.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace smsr {

namespace {

struct Line
{
    int number;
    std::vector<std::string_view> tokens;
};

std::vector<std::string_view> split(std::string_view text)
{
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i])))
            ++i;
        std::size_t j = i;
        while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j])))
            ++j;
        if (j > i)
            out.push_back(text.substr(i, j - i));
        i = j;
    }
    return out;
}

/* Reads a whole file and keeps only content lines */
class TextReader
{
public:
    explicit TextReader(const fs::path& path) : mPath(path.string())
    {
        std::ifstream in(path);
        if (!in)
            throw Error("cannot open " + mPath);
        std::ostringstream buffer;
        buffer << in.rdbuf();
        mText = buffer.str();

        std::size_t start = 0;
        int number = 0;
        while (start <= mText.size()) {
            std::size_t end = mText.find('\n', start);
            if (end == std::string::npos)
                end = mText.size();
            ++number;
            std::string_view line(mText.data() + start, end - start);
            auto tokens = split(line);
            if (!tokens.empty() && tokens[0][0] != '#')
                mLines.push_back({number, std::move(tokens)});
            start = end + 1;
        }
    }

    const std::string& path() const { return mPath; }
    std::size_t size() const { return mLines.size(); }
    const Line& operator[](std::size_t i) const { return mLines[i]; }

    [[noreturn]] void fail(int line, const std::string& what) const
    {
        throw ParseError(mPath, line, what);
    }

    double number(const Line& line, std::size_t k) const
    {
        const auto tok = line.tokens[k];
        double value = 0.0;
        const auto* first = tok.data();
        const auto* last = tok.data() + tok.size();
        auto [ptr, ec] = std::from_chars(first, last, value);
        if (ec != std::errc() || ptr != last)
            fail(line.number, "invalid number '" + std::string(tok) + "'");
        if (!std::isfinite(value))
            fail(line.number, "non-finite value '" + std::string(tok) + "'");
        return value;
    }

    long count(const Line& line, std::size_t k, const char* name) const
    {
        const auto tok = line.tokens[k];
        long value = 0;
        auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
        if (ec != std::errc() || ptr != tok.data() + tok.size() || value < 1)
            fail(line.number, std::string("invalid ") + name + " '" + std::string(tok) + "'");
        return value;
    }

    /* Parses the magic header; returns the declared counts */
    std::vector<long> header(const std::string& magic, std::size_t numCounts) const
    {
        if (mLines.empty())
            fail(0, "empty file, expected '" + magic + " v1' header");
        const Line& h = mLines[0];
        if (h.tokens.size() != 2 + numCounts || h.tokens[0] != magic || h.tokens[1] != "v1")
            fail(h.number, "malformed header, expected '" + magic + " v1' followed by " +
                               std::to_string(numCounts) + " count(s)");
        std::vector<long> counts;
        const char* names[] = {"T", "N"};
        for (std::size_t k = 0; k < numCounts; ++k)
            counts.push_back(count(h, 2 + k, names[k]));
        return counts;
    }

    /* Fills rows 1..expectedRows of the file into a matrix with `cols` columns */
    Matrix rows(long expectedRows, long cols) const
    {
        if (static_cast<long>(mLines.size()) - 1 < expectedRows) {
            const int last = mLines.empty() ? 0 : mLines.back().number;
            fail(last, "expected " + std::to_string(expectedRows) + " data rows, found " +
                           std::to_string(mLines.size() - 1));
        }
        if (static_cast<long>(mLines.size()) - 1 > expectedRows)
            fail(mLines[expectedRows + 1].number, "unexpected extra data row");

        Matrix out(expectedRows, cols);
        for (long r = 0; r < expectedRows; ++r) {
            const Line& line = mLines[r + 1];
            if (static_cast<long>(line.tokens.size()) != cols)
                fail(line.number, "expected " + std::to_string(cols) + " values, found " +
                                      std::to_string(line.tokens.size()));
            for (long c = 0; c < cols; ++c)
                out(r, c) = number(line, c);
        }
        return out;
    }

private:
    std::string mPath;
    std::string mText;
    std::vector<Line> mLines;
};

std::ofstream open_for_write(const fs::path& path)
{
    std::ofstream out(path);
    if (!out)
        throw Error("cannot write " + path.string());
    out.precision(17);
    return out;
}

void write_row(std::ostream& out, const Eigen::Ref<const RowVector>& row)
{
    for (Eigen::Index c = 0; c < row.size(); ++c) {
        if (c)
            out << ' ';
        out << row[c];
    }
    out << '\n';
}

void finish(std::ofstream& out, const fs::path& path)
{
    out.flush();
    if (!out)
        throw Error("write failed: " + path.string());
}

} // namespace

TrackTable load_tracks(const fs::path& path)
{
    TextReader reader(path);
    const auto counts = reader.header("NRSFM-TRACKS", 2);
    return TrackTable(reader.rows(2 * counts[0], counts[1]), false);
}

void save_tracks(const TrackTable& tracks, const fs::path& path)
{
    auto out = open_for_write(path);
    out << "NRSFM-TRACKS v1 " << tracks.frames() << ' ' << tracks.points() << '\n';
    for (Eigen::Index r = 0; r < tracks.data().rows(); ++r)
        write_row(out, tracks.data().row(r));
    finish(out, path);
}

ShapeSequence load_shapes(const fs::path& path)
{
    TextReader reader(path);
    const auto counts = reader.header("NRSFM-SHAPES", 2);
    const Matrix all = reader.rows(3 * counts[0], counts[1]);
    std::vector<Matrix> shapes;
    shapes.reserve(counts[0]);
    for (long t = 0; t < counts[0]; ++t)
        shapes.push_back(all.middleRows(3 * t, 3));
    return ShapeSequence(std::move(shapes));
}

void save_shapes(const ShapeSequence& shapes, const fs::path& path)
{
    auto out = open_for_write(path);
    out << "NRSFM-SHAPES v1 " << shapes.frames() << ' ' << shapes.points() << '\n';
    for (const auto& s : shapes.shapes())
        for (int r = 0; r < 3; ++r)
            write_row(out, s.row(r));
    finish(out, path);
}

CameraPoseSequence load_poses(const fs::path& path)
{
    TextReader reader(path);
    const auto counts = reader.header("NRSFM-POSES", 1);
    const Matrix all = reader.rows(2 * counts[0], 3);
    std::vector<Pose> blocks(counts[0]);
    for (long t = 0; t < counts[0]; ++t)
        blocks[t] = all.middleRows(2 * t, 2);
    try {
        return CameraPoseSequence(std::move(blocks));
    } catch (const std::invalid_argument& e) {
        throw ParseError(path.string(), 0, e.what());
    }
}

void save_poses(const CameraPoseSequence& poses, const fs::path& path)
{
    auto out = open_for_write(path);
    out << "NRSFM-POSES v1 " << poses.frames() << '\n';
    for (const auto& r : poses.blocks())
        for (int k = 0; k < 2; ++k)
            write_row(out, r.row(k));
    finish(out, path);
}

TrackTable register_to_centroid(const TrackTable& tracks)
{
    Matrix w = tracks.data();
    w.colwise() -= w.rowwise().mean();
    return TrackTable(std::move(w), true);
}

std::vector<fs::path> export_ply(const ShapeSequence& shapes, const fs::path& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
        throw Error("cannot create directory " + dir.string() + ": " + ec.message());

    std::vector<fs::path> written;
    char name[32];
    for (int t = 0; t < shapes.frames(); ++t) {
        std::snprintf(name, sizeof(name), "frame_%04d.ply", t);
        const fs::path path = dir / name;
        auto out = open_for_write(path);
        out << "ply\n"
            << "format ascii 1.0\n"
            << "element vertex " << shapes.points() << '\n'
            << "property double x\n"
            << "property double y\n"
            << "property double z\n"
            << "end_header\n";
        const Matrix& s = shapes[t];
        for (Eigen::Index j = 0; j < s.cols(); ++j)
            out << s(0, j) << ' ' << s(1, j) << ' ' << s(2, j) << '\n';
        finish(out, path);
        written.push_back(path);
    }
    return written;
}

namespace {

const char* to_string(GramInit init)
{
    return init == GramInit::kRigid ? "rigid" : "identity";
}

template <typename T>
void read_field(const json& j, const char* key, T& field)
{
    try {
        field = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ParseError("config", 0, std::string("bad value for '") + key + "': " + e.what());
    }
}

} // namespace

SolverConfig config_from_json(const json& j)
{
    if (!j.is_object())
        throw ParseError("config", 0, "config must be a JSON object");

    SolverConfig cfg;
    for (const auto& [key, value] : j.items()) {
        if (key == "K") read_field(j, "K", cfg.K);
        else if (key == "d") read_field(j, "d", cfg.d);
        else if (key == "mu0") read_field(j, "mu0", cfg.mu0);
        else if (key == "rho") read_field(j, "rho", cfg.rho);
        else if (key == "mu_max") read_field(j, "mu_max", cfg.mu_max);
        else if (key == "admm_max_iters") read_field(j, "admm_max_iters", cfg.admm_max_iters);
        else if (key == "admm_tol") read_field(j, "admm_tol", cfg.admm_tol);
        else if (key == "admm_inner_iters") read_field(j, "admm_inner_iters", cfg.admm_inner_iters);
        else if (key == "pg_max_iters") read_field(j, "pg_max_iters", cfg.pg_max_iters);
        else if (key == "pg_tol") read_field(j, "pg_tol", cfg.pg_tol);
        else if (key == "pg_accelerate") read_field(j, "pg_accelerate", cfg.pg_accelerate);
        else if (key == "gn_max_iters") read_field(j, "gn_max_iters", cfg.gn_max_iters);
        else if (key == "gn_tol") read_field(j, "gn_tol", cfg.gn_tol);
        else if (key == "freeze_low_block") read_field(j, "freeze_low_block", cfg.freeze_low_block);
        else if (key == "skip_smoothing") read_field(j, "skip_smoothing", cfg.skip_smoothing);
        else if (key == "force_smoothing") read_field(j, "force_smoothing", cfg.force_smoothing);
        else if (key == "energy_threshold") read_field(j, "energy_threshold", cfg.energy_threshold);
        else if (key == "seed") read_field(j, "seed", cfg.seed);
        else if (key == "gram_init") {
            std::string name;
            read_field(j, "gram_init", name);
            if (name == "rigid") cfg.gram_init = GramInit::kRigid;
            else if (name == "identity") cfg.gram_init = GramInit::kIdentity;
            else throw ParseError("config", 0, "gram_init must be 'rigid' or 'identity'");
        } else {
            throw ParseError("config", 0, "unknown key '" + key + "'");
        }
    }

    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw ParseError("config", 0, e.what());
    }
    return cfg;
}

json config_to_json(const SolverConfig& cfg)
{
    return json{
        {"K", cfg.K},
        {"d", cfg.d},
        {"mu0", cfg.mu0},
        {"rho", cfg.rho},
        {"mu_max", cfg.mu_max},
        {"admm_max_iters", cfg.admm_max_iters},
        {"admm_tol", cfg.admm_tol},
        {"admm_inner_iters", cfg.admm_inner_iters},
        {"pg_max_iters", cfg.pg_max_iters},
        {"pg_tol", cfg.pg_tol},
        {"pg_accelerate", cfg.pg_accelerate},
        {"gram_init", to_string(cfg.gram_init)},
        {"gn_max_iters", cfg.gn_max_iters},
        {"gn_tol", cfg.gn_tol},
        {"freeze_low_block", cfg.freeze_low_block},
        {"skip_smoothing", cfg.skip_smoothing},
        {"force_smoothing", cfg.force_smoothing},
        {"energy_threshold", cfg.energy_threshold},
        {"seed", cfg.seed},
    };
}

SolverConfig load_config(const fs::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error("cannot open " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ParseError(path.string(), 0, e.what());
    }
    try {
        return config_from_json(j);
    } catch (const ParseError& e) {
        throw ParseError(path.string(), 0, e.what());
    }
}

json report_to_json(const ReconstructionReport& r)
{
    auto stage = [](const StageStats& s) {
        return json{{"iterations", s.iterations}, {"wall_time", s.wall_time}, {"converged", s.converged}};
    };
    json search = json::array();
    for (const auto& e : r.search)
        search.push_back({{"K", e.K}, {"reprojection_error", e.reprojection_error}});

    return json{
        {"frames", r.frames},
        {"points", r.points},
        {"K", r.K},
        {"d", r.d},
        {"e3d", r.e3d ? json(*r.e3d) : json(nullptr)},
        {"rms", r.rms ? json(*r.rms) : json(nullptr)},
        {"per_frame_errors", r.per_frame_errors},
        {"reprojection_error", r.reprojection_error},
        {"stages", {{"pose", stage(r.pose)}, {"smoothing", stage(r.smoothing)}, {"shape", stage(r.shape)}}},
        {"total_time", r.total_time},
        {"gram_residual", r.gram_residual},
        {"degenerate_frames", r.degenerate_frames},
        {"smoothing",
         {{"applied", r.smoothing_applied},
          {"initial_objective", r.smoothing_initial_objective},
          {"final_objective", r.smoothing_final_objective}}},
        {"admm_residuals", r.admm_residuals},
        {"search", search},
        {"warnings", r.warnings},
        {"config", config_to_json(r.config)},
    };
}

void save_report(const ReconstructionReport& report, const fs::path& path)
{
    auto out = open_for_write(path);
    out << report_to_json(report).dump(2) << '\n';
    finish(out, path);
}

} // namespace smsr
