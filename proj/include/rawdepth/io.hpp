#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "rawdepth/camera.hpp"
#include "rawdepth/image.hpp"
#include "rawdepth/se3.hpp"
#include "rawdepth/synthetic.hpp"

namespace rawdepth {

/// printf("%.9g"); the fixed format every text writer uses.
std::string format_double(double v);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

// -- Calibration --------------------------------------------------------------------
//
// JSON object with "model", "width", "height", an optional "distance_kind"
// ("depth" or "distance") and exactly the model's parameters:
//   brown_conrady  fx fy cx cy k1 k2 k3 p1 p2
//   polynomial     a1 a2 a3 a4 cx cy [theta_max]
//   ucm            f xi cx cy [theta_max]
//   eucm           f alpha beta cx cy [theta_max]
//   rectilinear    f cx cy [theta_max]
//   stereographic  f cx cy [theta_max]
//   double_sphere  f xi alpha cx cy [theta_max]
// theta_max is in radians.

/// Throws ParseError (detail carries the byte offset), UnknownModel, or
/// InvalidParameter naming the missing / unexpected / invalid key.
CameraModel parse_calibration(std::string_view text);
CameraModel load_calibration(const std::filesystem::path& path);
std::string serialize_calibration(const CameraModel& cam);

// -- Grids ----------------------------------------------------------------------------

/// Little-endian PFM ("Pf" for 1 channel, "PF" for 3), rows stored bottom-up.
void write_pfm(const std::filesystem::path& path, const Grid<double>& grid);
Grid<double> read_pfm(const std::filesystem::path& path);
std::string encode_pfm(const Grid<double>& grid);
Grid<double> decode_pfm(std::string_view bytes);

/// Remap grid as a 3-channel PFM: source x, source y, validity.
void write_coordinate_map(const std::filesystem::path& path, const CoordinateMap& map);
CoordinateMap read_coordinate_map(const std::filesystem::path& path);

/// Depth maps are PFM (kind is not stored; the caller supplies it).
DepthMap read_depth(const std::filesystem::path& path, DistanceKind kind);
void write_depth(const std::filesystem::path& path, const DepthMap& depth);

/// 8- or 16-bit PNG, gray or RGB (alpha dropped), normalized to [0, 1].
ImageBuffer read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const ImageBuffer& image, int bit_depth = 8);

/// 16-bit gray PNG storing round(depth * scale); 0 marks missing depth.
void write_depth_png16(const std::filesystem::path& path, const DepthMap& depth, double scale = 256.0);
DepthMap read_depth_png16(const std::filesystem::path& path, DistanceKind kind, double scale = 256.0);

/// Image by extension: .png or .pfm.
ImageBuffer read_image(const std::filesystem::path& path);
void write_image(const std::filesystem::path& path, const ImageBuffer& image);

// -- Tabular text ----------------------------------------------------------------------

/// Rows of comma-separated numbers; blank lines, '#' comments and a
/// non-numeric header row are skipped.
std::vector<std::vector<double>> parse_csv_numbers(std::string_view text);

/// "timestamp_s,speed_mps" rows. Throws NonMonotonicTime.
std::vector<OdometrySample> parse_odometry_csv(std::string_view text);

/// Six values: axis-angle rotation then translation in meters.
Se3Transform parse_pose(std::string_view csv_values);
std::vector<Se3Transform> parse_poses_csv(std::string_view text);
std::string format_pose(const Se3Transform& T);

// -- Scenes --------------------------------------------------------------------------------
//
// {"background": 0.0, "channels": 1, "primitives": [
//   {"type": "plane", "rotation": [0,0,0], "translation": [0,0,5], "size": [20,20],
//    "texture": {"kind": "noise", "period": 0.5, "low": 0.1, "high": 0.9, "seed": 1}},
//   {"type": "sphere", "translation": [0,0,5], "radius": 1, "texture": {...}}]}

SyntheticScene parse_scene(std::string_view text);
std::string serialize_scene(const SyntheticScene& scene);

}  // namespace rawdepth
