#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mosaikit/types.hpp"

namespace mosaikit {

// Shortest representation that parses back to the exact double.
std::string format_full(double value);

// 9 significant digits.
std::string format_sig9(double value);

// Writes content to path via a temporary file plus rename.
void write_text_atomic(const std::filesystem::path& path, const std::string& content);

std::string read_text(const std::filesystem::path& path);

std::vector<std::string> split_csv_line(const std::string& line);

double parse_double(const std::string& token, const std::string& context);
long parse_long(const std::string& token, const std::string& context);

// Homography text format: one homography per line as 9 space-separated
// decimal floats, row-major, with the m(2,2) entry included and equal to 1.
// Lines starting with '#' are comments.
std::string homography_line(const Homography& h);
void write_homography_file(const std::filesystem::path& path, const std::vector<Homography>& hs,
                           const std::vector<std::string>& header_comments = {});

struct HomographyFile {
  std::vector<Homography> homographies;
  std::vector<std::string> comments;
};

HomographyFile read_homography_file(const std::filesystem::path& path);

// Pose files are homography files whose header comment carries the reference
// frame index ("# reference=<k>").
void write_pose_file(const std::filesystem::path& path, const std::vector<Homography>& absolute,
                     int reference_index, const std::vector<std::string>& extra_comments = {});

struct PoseFileContents {
  std::vector<Homography> absolute;
  int reference_index = 0;
};

PoseFileContents read_pose_file(const std::filesystem::path& path);

}  // namespace mosaikit
