#pragma once

#include "dynreg/geometry.hpp"
#include "dynreg/pipeline.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

namespace dynreg {

enum class CloudFormat { ply_ascii, xyz, xyzn };

std::string to_string(CloudFormat f);
CloudFormat cloud_format_from_string(const std::string& name);
/// Format implied by the file extension (.ply, .xyz, .xyzn); throws ParseError otherwise.
CloudFormat cloud_format_from_path(const std::string& path);

/**
 * @brief Parse point cloud text.
 *
 * Rows must all have the same width; NaN/Inf coordinates are rejected.
 * Normals (xyzn, or ply with nx/ny/nz) are renormalized. Errors are ParseError
 * naming `source`, the line number and the byte offset.
 */
PointCloud parse_cloud(std::string_view text, CloudFormat format, const std::string& source = "<memory>");

/// Read a cloud; the format defaults to the one implied by the extension.
PointCloud load_cloud(const std::string& path, std::optional<CloudFormat> format = std::nullopt);

std::string format_cloud(const PointCloud& cloud, CloudFormat format);
void save_cloud(const std::string& path, const PointCloud& cloud, std::optional<CloudFormat> format = std::nullopt);

/// 4 lines of 4 whitespace-separated reals (row-major homogeneous matrix).
RigidTransform parse_pose(std::string_view text, const std::string& source = "<memory>");
RigidTransform load_pose(const std::string& path);
std::string format_pose(const RigidTransform& transform);
void save_pose(const std::string& path, const RigidTransform& transform);

/// One CSV row per stage; wall times are written only when `timing` is set.
void write_trace_csv(std::ostream& out, const IterationTrace& trace, bool timing = true);

/// Whole file as a string; throws ParseError if it cannot be opened.
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

/// Shortest text that parses back to exactly the same double.
std::string format_double(double value);

}  // namespace dynreg
