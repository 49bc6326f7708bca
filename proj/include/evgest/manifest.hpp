#pragma once

// Dataset manifest: one clip per line, "path<TAB>label<TAB>subject".
// Relative paths resolve against the manifest's directory. Clip streams are
// loaded lazily through ClipRecord::load().

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "evgest/error.hpp"
#include "evgest/event.hpp"

namespace evgest {

struct ClipRecord {
  std::filesystem::path source;
  std::string label;
  std::string subject;

  EventStream load() const { return load_binary_events(source); }
};

inline std::vector<ClipRecord> parse_manifest(std::string_view text, const std::filesystem::path& base_dir) {
  std::vector<ClipRecord> clips;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    ++line_no;
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    std::size_t tab1 = line.find('\t');
    std::size_t tab2 = tab1 == std::string_view::npos ? tab1 : line.find('\t', tab1 + 1);
    if (tab2 == std::string_view::npos || line.find('\t', tab2 + 1) != std::string_view::npos) {
      throw DataError("manifest line " + std::to_string(line_no) + ": expected path<TAB>label<TAB>subject");
    }
    ClipRecord rec;
    std::filesystem::path p{std::string(line.substr(0, tab1))};
    rec.label = std::string(line.substr(tab1 + 1, tab2 - tab1 - 1));
    rec.subject = std::string(line.substr(tab2 + 1));
    if (p.empty() || rec.label.empty() || rec.subject.empty()) {
      throw DataError("manifest line " + std::to_string(line_no) + ": empty path, label or subject");
    }
    rec.source = p.is_absolute() ? p : base_dir / p;
    clips.push_back(std::move(rec));
  }
  return clips;
}

inline std::vector<ClipRecord> load_manifest(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) {
    throw DataError("manifest not found: " + path.string());
  }
  return parse_manifest(read_file(path), path.parent_path());
}

// Inverse of parse_manifest for paths already relative to the manifest dir.
inline std::string format_manifest(const std::vector<ClipRecord>& clips) {
  std::string out;
  for (const auto& c : clips) {
    out += c.source.generic_string();
    out += '\t';
    out += c.label;
    out += '\t';
    out += c.subject;
    out += '\n';
  }
  return out;
}

}  // namespace evgest
