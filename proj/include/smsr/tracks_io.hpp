#ifndef SMSR_TRACKS_IO_HPP
#define SMSR_TRACKS_IO_HPP

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "smsr/model_types.hpp"

namespace smsr {

/*
 * Text formats (whitespace separated, '#' comment lines and blank lines
 * ignored, numbers written with 17 significant digits):
 *
 *   NRSFM-TRACKS v1 <T> <N>   then 2T rows of N values (x_1, y_1, ..., x_T, y_T)
 *   NRSFM-SHAPES v1 <T> <N>   then per frame three rows (X, Y, Z) of N values
 *   NRSFM-POSES v1 <T>        then per frame two rows of 3 values
 */
TrackTable load_tracks(const std::filesystem::path& path);
void save_tracks(const TrackTable& tracks, const std::filesystem::path& path);

ShapeSequence load_shapes(const std::filesystem::path& path);
void save_shapes(const ShapeSequence& shapes, const std::filesystem::path& path);

CameraPoseSequence load_poses(const std::filesystem::path& path);
void save_poses(const CameraPoseSequence& poses, const std::filesystem::path& path);

/* Translates every row of the table to zero mean */
TrackTable register_to_centroid(const TrackTable& tracks);

/* Writes frame_%04d.ply (0-based) per frame; returns the written paths */
std::vector<std::filesystem::path> export_ply(const ShapeSequence& shapes,
                                              const std::filesystem::path& dir);

/* Keys are the SolverConfig field names; unknown keys throw ParseError */
SolverConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const SolverConfig& cfg);
SolverConfig load_config(const std::filesystem::path& path);

nlohmann::json report_to_json(const ReconstructionReport& report);
void save_report(const ReconstructionReport& report, const std::filesystem::path& path);

} // namespace smsr

#endif // SMSR_TRACKS_IO_HPP
