#include "mosaikit/text_io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "mosaikit/error.hpp"

namespace mosaikit {

std::string format_full(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

std::string format_sig9(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", value);
  return buf;
}

void write_text_atomic(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) {
      throw_error(ErrorCode::IoError, "cannot open " + tmp.string() + " for writing");
    }
    out << content;
    if (!out) {
      throw_error(ErrorCode::IoError, "write failed for " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    throw_error(ErrorCode::IoError, "cannot rename " + tmp.string() + ": " + ec.message());
  }
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw_error(ErrorCode::IoError, "cannot open " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(field);
      field.clear();
    } else if (c != '\r') {
      field.push_back(c);
    }
  }
  fields.push_back(field);
  return fields;
}

double parse_double(const std::string& token, const std::string& context) {
  errno = 0;
  char* end = nullptr;
  const double value = std::strtod(token.c_str(), &end);
  if (end == token.c_str() || *end != '\0' || errno == ERANGE) {
    throw_error(ErrorCode::MalformedFile, "bad number '" + token + "' in " + context);
  }
  return value;
}

long parse_long(const std::string& token, const std::string& context) {
  errno = 0;
  char* end = nullptr;
  const long value = std::strtol(token.c_str(), &end, 10);
  if (end == token.c_str() || *end != '\0' || errno == ERANGE) {
    throw_error(ErrorCode::MalformedFile, "bad integer '" + token + "' in " + context);
  }
  return value;
}

std::string homography_line(const Homography& h) {
  std::string line;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      if (!line.empty()) line += ' ';
      line += format_full(h.m(r, c));
    }
  }
  return line;
}

void write_homography_file(const std::filesystem::path& path, const std::vector<Homography>& hs,
                           const std::vector<std::string>& header_comments) {
  std::string content;
  for (const std::string& comment : header_comments) {
    content += "# " + comment + "\n";
  }
  for (const Homography& h : hs) {
    content += homography_line(h) + "\n";
  }
  write_text_atomic(path, content);
}

HomographyFile read_homography_file(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw_error(ErrorCode::MalformedFile, "missing file " + path.string());
  }
  std::istringstream in(read_text(path));
  HomographyFile out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      out.comments.push_back(line);
      continue;
    }
    std::istringstream ls(line);
    Homography h;
    double values[9];
    for (int i = 0; i < 9; ++i) {
      if (!(ls >> values[i])) {
        throw_error(ErrorCode::MalformedFile,
                    path.string() + ":" + std::to_string(line_no) + " expects 9 floats");
      }
    }
    std::string trailing;
    if (ls >> trailing) {
      throw_error(ErrorCode::MalformedFile,
                  path.string() + ":" + std::to_string(line_no) + " has trailing tokens");
    }
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) {
        h.m(r, c) = values[3 * r + c];
      }
    }
    if (!h.is_finite() || std::abs(h.m(2, 2) - 1.0) > 1e-6) {
      throw_error(ErrorCode::MalformedFile,
                  path.string() + ":" + std::to_string(line_no) + " entry m(2,2) must be 1");
    }
    h.m /= h.m(2, 2);
    h.m(2, 2) = 1.0;
    out.homographies.push_back(h);
  }
  return out;
}

void write_pose_file(const std::filesystem::path& path, const std::vector<Homography>& absolute,
                     int reference_index, const std::vector<std::string>& extra_comments) {
  std::vector<std::string> comments;
  comments.push_back("reference=" + std::to_string(reference_index) +
                     " frames=" + std::to_string(absolute.size()));
  comments.insert(comments.end(), extra_comments.begin(), extra_comments.end());
  write_homography_file(path, absolute, comments);
}

PoseFileContents read_pose_file(const std::filesystem::path& path) {
  const HomographyFile file = read_homography_file(path);
  PoseFileContents out;
  out.absolute = file.homographies;
  for (const std::string& comment : file.comments) {
    const std::size_t pos = comment.find("reference=");
    if (pos != std::string::npos) {
      out.reference_index =
          static_cast<int>(std::strtol(comment.c_str() + pos + 10, nullptr, 10));
      break;
    }
  }
  return out;
}

}  // namespace mosaikit
