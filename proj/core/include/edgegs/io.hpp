#pragma once

#include "edgegs/extract.hpp"
#include "edgegs/geometry.hpp"
#include "edgegs/metrics.hpp"
#include "edgegs/trainer.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace edgegs {

namespace fs = std::filesystem;

// Format tags written into (and required by) every artifact.
inline constexpr const char* kCamerasFormat = "edgegs-cameras";
inline constexpr const char* kEdgesFormat = "edgegs-edges";
inline constexpr const char* kMetricsFormat = "edgegs-metrics";
inline constexpr int kCamerasVersion = 1;
inline constexpr int kEdgesVersion = 1;
inline constexpr int kMetricsVersion = 1;
inline constexpr int kCheckpointVersion = 1;

// Dataset directory:
//   images/            grayscale edge maps (.pgm or .png)
//   cameras.json       intrinsics + 4x4 row-major world-to-camera per view
//   init_points.ply    optional initial Gaussian centers
//   gt_edges.json      optional ground-truth edges
struct Dataset {
    std::vector<std::string> names; // per view
    std::vector<CameraView> views;
    Vec3 bbox_min = Vec3::Constant(-0.5);
    Vec3 bbox_max = Vec3::Constant(0.5);
    std::optional<std::vector<Vec3>> init_points;
    std::optional<std::vector<ParametricEdge>> gt_edges;
};

// Throws DataError naming the offending view or file.
Dataset load_dataset(const fs::path& root);

// Writes images as images/<name>.<image_ext> plus cameras.json (and
// gt_edges.json when given).
void save_dataset(const fs::path& root, const std::vector<CameraView>& views,
                  const Vec3& bbox_min, const Vec3& bbox_max,
                  const std::vector<ParametricEdge>* gt_edges = nullptr,
                  const std::string& image_ext = "pgm");

void write_edges_json(const fs::path& path, const std::vector<ParametricEdge>& edges);
std::vector<ParametricEdge> read_edges_json(const fs::path& path);

// ASCII PLY with x y z nx ny nz; the direction is stored in the normal fields.
void write_oriented_ply(const fs::path& path, const std::vector<OrientedPoint>& points);
std::vector<OrientedPoint> read_oriented_ply(const fs::path& path);
// Reads the x y z vertex properties of an ASCII PLY, ignoring any others.
std::vector<Vec3> read_ply_points(const fs::path& path);

// Versioned little-endian binary dump of the full training state.
std::string encode_checkpoint(const TrainState& state);
TrainState decode_checkpoint(const std::string& bytes);
void write_checkpoint(const fs::path& path, const TrainState& state);
TrainState read_checkpoint(const fs::path& path);

// Plain-text "key = value" configuration ('#' starts a comment). Unknown keys
// are rejected. Keys not present keep their value from `base`.
TrainConfig parse_train_config(const std::string& text, TrainConfig base = {});
TrainConfig read_train_config(const fs::path& path, TrainConfig base = {});
std::string format_train_config(const TrainConfig& cfg);

void write_metrics_json(const fs::path& path, const MetricReport& report);
MetricReport read_metrics_json(const fs::path& path);

void write_train_report_json(const fs::path& path, const TrainReport& report,
                             const TrainConfig& cfg);

// Reads a whole file; throws DataError when it cannot be opened.
std::string read_text_file(const fs::path& path);
void write_text_file(const fs::path& path, const std::string& text);

} // namespace edgegs
