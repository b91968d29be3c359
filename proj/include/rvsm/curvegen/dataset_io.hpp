#pragma once

// On-disk dataset split: a directory holding manifest.csv
// (filename,label,seed with label 0 = normal, 1 = shaky) and one binary
// PGM (P5, maxval 255, pixels 0/255) per image.

#include <cctype>
#include <charconv>
#include <cstdio>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "rvsm/csv.hpp"
#include "rvsm/curvegen/curvegen.hpp"
#include "rvsm/error.hpp"

namespace rvsm::curvegen {

inline constexpr const char* kManifestName = "manifest.csv";

inline void write_pgm(std::ostream& os, const BinaryImage& image) {
  os << "P5\n" << image.size() << ' ' << image.size() << "\n255\n";
  for (auto p : image.pixels()) os.put(p ? static_cast<char>(255) : '\0');
}

namespace detail {

inline std::string pgm_token(std::istream& is) {
  std::string tok;
  int c;
  while ((c = is.get()) != EOF) {
    if (c == '#') {
      while ((c = is.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok += static_cast<char>(c);
  }
  return tok;
}

inline std::uint64_t parse_u64(const std::string& s, const std::string& what) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) throw FormatError("invalid " + what + ": '" + s + "'");
  return v;
}

}  // namespace detail

/// Reads a square P5 image; nonzero pixels become foreground.
inline BinaryImage read_pgm(std::istream& is) {
  if (detail::pgm_token(is) != "P5") throw FormatError("not a binary PGM (P5)");
  const auto w = detail::parse_u64(detail::pgm_token(is), "PGM width");
  const auto h = detail::parse_u64(detail::pgm_token(is), "PGM height");
  const auto maxval = detail::parse_u64(detail::pgm_token(is), "PGM maxval");
  if (w != h || w == 0 || w > 4096) throw FormatError("PGM must be a non-empty square image");
  if (maxval != 255) throw FormatError("PGM maxval must be 255");
  BinaryImage img(w);
  std::vector<char> buf(w * h);
  if (!is.read(buf.data(), static_cast<std::streamsize>(buf.size()))) throw FormatError("PGM pixel data truncated");
  for (std::size_t i = 0; i < buf.size(); ++i) {
    const auto v = static_cast<unsigned char>(buf[i]);
    if (v != 0 && v != 255) throw FormatError("PGM pixel values must be 0 or 255");
    img.pixels()[i] = v ? 1 : 0;
  }
  return img;
}

inline void write_split(const std::filesystem::path& dir, const std::vector<CurveSample>& samples) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
  std::ofstream manifest(dir / kManifestName, std::ios::binary | std::ios::trunc);
  if (!manifest) throw IoError("cannot write " + (dir / kManifestName).string());
  manifest << "filename,label,seed\n";
  for (std::size_t i = 0; i < samples.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "img_%05zu.pgm", i);
    std::ofstream img(dir / name, std::ios::binary | std::ios::trunc);
    if (!img) throw IoError("cannot write " + (dir / name).string());
    write_pgm(img, samples[i].image);
    if (!img) throw IoError("failed writing " + (dir / name).string());
    manifest << csv::escape(name) << ',' << static_cast<int>(samples[i].label) << ',' << samples[i].seed << '\n';
  }
  if (!manifest) throw IoError("failed writing " + (dir / kManifestName).string());
}

/// Loads a split written by write_split; LF and CRLF manifests are accepted.
inline std::vector<CurveSample> read_split(const std::filesystem::path& dir) {
  const auto manifest_path = dir / kManifestName;
  std::ifstream manifest(manifest_path, std::ios::binary);
  if (!manifest) throw IoError("cannot read " + manifest_path.string());
  std::string line;
  if (!std::getline(manifest, line)) throw FormatError(manifest_path.string() + " is empty");
  const auto header = csv::parse_line(line);
  if (header != std::vector<std::string>{"filename", "label", "seed"})
    throw FormatError(manifest_path.string() + ": expected header filename,label,seed");
  std::vector<CurveSample> out;
  std::size_t line_no = 1;
  while (std::getline(manifest, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = csv::parse_line(line);
    if (fields.size() != 3)
      throw FormatError(manifest_path.string() + ":" + std::to_string(line_no) + ": expected 3 fields");
    const auto label = detail::parse_u64(fields[1], "label");
    if (label > 1) throw FormatError(manifest_path.string() + ":" + std::to_string(line_no) + ": label must be 0 or 1");
    const auto seed = detail::parse_u64(fields[2], "seed");
    const auto img_path = dir / fields[0];
    std::ifstream img(img_path, std::ios::binary);
    if (!img) throw IoError("cannot read " + img_path.string());
    out.push_back({read_pgm(img), static_cast<CurveLabel>(label), seed});
  }
  if (out.empty()) throw FormatError(manifest_path.string() + " lists no images");
  return out;
}

}  // namespace rvsm::curvegen
