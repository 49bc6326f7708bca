#pragma once

// Event data model and the two on-disk event formats.
//
// Text format: one event per line, "t x y p" as unsigned decimals separated
// by single spaces, every line terminated by '\n'. Geometry is not stored and
// must be supplied by the caller.
//
// Binary format "EVS1" (all little-endian):
//   magic    4 bytes  'E' 'V' 'S' '1'
//   width    u16
//   height   u16
//   channels u8
//   then N records of 13 bytes: t u64, x u16, y u16, p u8

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "evgest/detail/byte_io.hpp"
#include "evgest/error.hpp"

namespace evgest {

using Timestamp = std::uint64_t;  // microseconds

struct Event {
  Timestamp t = 0;
  std::uint16_t x = 0;
  std::uint16_t y = 0;
  std::uint16_t p = 0;  // polarity at the sensor, prototype id after a layer

  friend bool operator==(const Event&, const Event&) = default;
};

struct SensorGeometry {
  std::uint32_t width = 1;
  std::uint32_t height = 1;
  std::uint32_t channels = 1;

  bool contains(const Event& e) const { return e.x < width && e.y < height && e.p < channels; }

  friend bool operator==(const SensorGeometry&, const SensorGeometry&) = default;
};

inline void check_geometry(const SensorGeometry& g) {
  if (g.width < 1 || g.height < 1 || g.channels < 1) {
    throw ContractError("sensor geometry must have width, height and channels >= 1");
  }
}

struct EventStream {
  SensorGeometry geometry;
  std::vector<Event> events;

  std::size_t size() const { return events.size(); }
  bool empty() const { return events.empty(); }

  friend bool operator==(const EventStream&, const EventStream&) = default;
};

inline constexpr std::size_t kBinaryHeaderSize = 9;
inline constexpr std::size_t kBinaryRecordSize = 13;
inline constexpr std::string_view kBinaryMagic = "EVS1";

// ---------------------------------------------------------------------------
// Validation

enum class ViolationKind { kNonMonotonic, kOutOfBounds };

struct Violation {
  std::size_t index = 0;
  ViolationKind kind = ViolationKind::kOutOfBounds;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  std::size_t event_count = 0;
  Timestamp duration = 0;                   // last t - first t
  std::vector<std::size_t> channel_counts;  // indexed by channel, in-range events only

  bool ok() const { return violations.empty(); }
};

inline std::string describe(const Event& e) {
  return "(t=" + std::to_string(e.t) + ", x=" + std::to_string(e.x) + ", y=" + std::to_string(e.y) +
         ", p=" + std::to_string(e.p) + ")";
}

inline ValidationReport validate_stream(const EventStream& stream) {
  ValidationReport report;
  const auto& g = stream.geometry;
  report.event_count = stream.events.size();
  report.channel_counts.assign(g.channels, 0);
  for (std::size_t i = 0; i < stream.events.size(); ++i) {
    const Event& e = stream.events[i];
    if (i > 0 && e.t < stream.events[i - 1].t) {
      report.violations.push_back({i, ViolationKind::kNonMonotonic,
                                   "event " + std::to_string(i) + " t=" + std::to_string(e.t) +
                                       " precedes previous t=" + std::to_string(stream.events[i - 1].t)});
    }
    if (!g.contains(e)) {
      report.violations.push_back({i, ViolationKind::kOutOfBounds,
                                   "event " + std::to_string(i) + " " + describe(e) + " outside " +
                                       std::to_string(g.width) + "x" + std::to_string(g.height) + "x" +
                                       std::to_string(g.channels)});
    } else {
      ++report.channel_counts[e.p];
    }
  }
  if (!stream.events.empty()) {
    report.duration = stream.events.back().t - stream.events.front().t;
  }
  return report;
}

namespace detail {

// Readers reject the first violation with a DataError; the report is still
// useful for the message.
inline void require_valid(const EventStream& stream, const std::string& where) {
  auto report = validate_stream(stream);
  if (!report.ok()) {
    const auto& v = report.violations.front();
    const char* kind = v.kind == ViolationKind::kNonMonotonic ? "non-monotonic timestamp" : "out-of-bounds event";
    throw DataError(where + ": " + kind + " at index " + std::to_string(v.index) + ": " + v.message);
  }
}

template <typename T>
bool parse_uint(std::string_view field, T& out) {
  if (field.empty()) return false;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), out);
  return ec == std::errc{} && ptr == field.data() + field.size();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Text codec

inline EventStream read_text_events(std::string_view source, const SensorGeometry& geometry) {
  check_geometry(geometry);
  EventStream stream{geometry, {}};
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < source.size()) {
    ++line_no;
    std::size_t end = source.find('\n', pos);
    if (end == std::string_view::npos) end = source.size();
    std::string_view line = source.substr(pos, end - pos);
    pos = end + 1;

    std::uint64_t fields[4];
    std::size_t start = 0;
    bool ok = true;
    for (int f = 0; f < 4 && ok; ++f) {
      std::size_t stop = f < 3 ? line.find(' ', start) : line.size();
      if (stop == std::string_view::npos) {
        ok = false;
        break;
      }
      ok = detail::parse_uint(line.substr(start, stop - start), fields[f]);
      start = stop + 1;
    }
    if (!ok) {
      throw DataError("malformed event at line " + std::to_string(line_no) + ": \"" + std::string(line) + "\"");
    }
    if (fields[1] >= geometry.width || fields[2] >= geometry.height || fields[3] >= geometry.channels) {
      throw DataError("out-of-bounds event at line " + std::to_string(line_no) + ": \"" + std::string(line) + "\"");
    }
    stream.events.push_back({fields[0], static_cast<std::uint16_t>(fields[1]), static_cast<std::uint16_t>(fields[2]),
                             static_cast<std::uint16_t>(fields[3])});
  }
  detail::require_valid(stream, "text events");
  return stream;
}

inline std::string write_text_events(const EventStream& stream) {
  std::string out;
  out.reserve(stream.events.size() * 16);
  char buf[32];
  auto put = [&](std::uint64_t v, char sep) {
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, ptr);
    out.push_back(sep);
  };
  for (const Event& e : stream.events) {
    put(e.t, ' ');
    put(e.x, ' ');
    put(e.y, ' ');
    put(e.p, '\n');
  }
  return out;
}

// ---------------------------------------------------------------------------
// Binary codec

inline EventStream read_binary_events(std::span<const std::byte> source) {
  detail::ByteReader in(source);
  if (source.size() < kBinaryMagic.size() || in.raw(kBinaryMagic.size(), "magic") != kBinaryMagic) {
    throw DataError("bad magic: not an EVS1 event file");
  }
  EventStream stream;
  stream.geometry.width = in.u16("header width");
  stream.geometry.height = in.u16("header height");
  stream.geometry.channels = in.u8("header channels");
  if (stream.geometry.width < 1 || stream.geometry.height < 1 || stream.geometry.channels < 1) {
    throw DataError("EVS1 header declares an empty geometry");
  }
  if (in.remaining() % kBinaryRecordSize != 0) {
    throw DataError("truncated record: " + std::to_string(in.remaining()) + " payload bytes is not a multiple of " +
                    std::to_string(kBinaryRecordSize));
  }
  stream.events.reserve(in.remaining() / kBinaryRecordSize);
  while (!in.at_end()) {
    Event e;
    e.t = in.u64("record t");
    e.x = in.u16("record x");
    e.y = in.u16("record y");
    e.p = in.u8("record p");
    stream.events.push_back(e);
  }
  detail::require_valid(stream, "EVS1 events");
  return stream;
}

inline std::vector<std::byte> write_binary_events(const EventStream& stream) {
  const auto& g = stream.geometry;
  if (g.width > 0xFFFF || g.height > 0xFFFF || g.channels > 0xFF) {
    throw ContractError("geometry " + std::to_string(g.width) + "x" + std::to_string(g.height) + "x" +
                        std::to_string(g.channels) + " does not fit the EVS1 header");
  }
  detail::ByteWriter out;
  out.raw(kBinaryMagic);
  out.u16(static_cast<std::uint16_t>(g.width));
  out.u16(static_cast<std::uint16_t>(g.height));
  out.u8(static_cast<std::uint8_t>(g.channels));
  for (const Event& e : stream.events) {
    out.u64(e.t);
    out.u16(e.x);
    out.u16(e.y);
    out.u8(static_cast<std::uint8_t>(e.p));
  }
  return std::move(out).take();
}

// ---------------------------------------------------------------------------
// Files

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path, std::string_view data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw DataError("write failed for " + path.string());
}

inline void write_file(const std::filesystem::path& path, std::span<const std::byte> data) {
  write_file(path, std::string_view(reinterpret_cast<const char*>(data.data()), data.size()));
}

inline bool looks_binary(std::string_view data) { return data.substr(0, kBinaryMagic.size()) == kBinaryMagic; }

inline EventStream load_binary_events(const std::filesystem::path& path) {
  auto data = read_file(path);
  try {
    return read_binary_events(detail::as_bytes(data));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

inline void save_binary_events(const std::filesystem::path& path, const EventStream& stream) {
  write_file(path, write_binary_events(stream));
}

}  // namespace evgest
