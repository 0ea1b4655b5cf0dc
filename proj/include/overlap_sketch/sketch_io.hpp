#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "overlap_sketch/minhash.hpp"

namespace overlap_sketch {

// Binary sketch layout, all integers little-endian:
//   "MHS1" | u32 k | k x u64 seeds | u64 source_size | k x u64 minima
inline constexpr std::array<char, 4> sketch_magic{'M', 'H', 'S', '1'};

namespace detail {

class ByteWriter {
 public:
  explicit ByteWriter(std::vector<std::uint8_t>& out) : out_(out) {}

  void bytes(std::span<const char> b) { out_.insert(out_.end(), b.begin(), b.end()); }
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }

 private:
  void put(std::uint64_t v, int width) {
    for (int i = 0; i < width; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t>& out_;
};

class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> in, std::size_t offset) : in_(in), pos_(offset) {}

  std::size_t position() const noexcept { return pos_; }
  bool at_end() const noexcept { return pos_ == in_.size(); }

  void expect_magic(const std::array<char, 4>& magic) {
    need(4, "magic");
    if (std::memcmp(in_.data() + pos_, magic.data(), 4) != 0) throw format_error("bad magic bytes", pos_);
    pos_ += 4;
  }
  std::uint32_t u32(const char* what) { return static_cast<std::uint32_t>(get(4, what)); }
  std::uint64_t u64(const char* what) { return get(8, what); }

 private:
  void need(std::size_t n, const char* what) {
    if (in_.size() - pos_ < n) throw format_error(std::string("truncated stream while reading ") + what, pos_);
  }
  std::uint64_t get(int width, const char* what) {
    need(static_cast<std::size_t>(width), what);
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(in_[pos_ + static_cast<std::size_t>(i)]) << (8 * i);
    pos_ += static_cast<std::size_t>(width);
    return v;
  }

  std::span<const std::uint8_t> in_;
  std::size_t pos_;
};

}  // namespace detail

inline void append_sketch(const MinHashSketch& sketch, std::vector<std::uint8_t>& out) {
  detail::ByteWriter w(out);
  w.bytes(sketch_magic);
  w.u32(static_cast<std::uint32_t>(sketch.k()));
  for (std::uint64_t s : sketch.family()->seeds()) w.u64(s);
  w.u64(static_cast<std::uint64_t>(sketch.source_size()));
  for (std::uint64_t m : sketch.minima()) w.u64(m);
}

inline std::vector<std::uint8_t> serialize_sketch(const MinHashSketch& sketch) {
  std::vector<std::uint8_t> out;
  out.reserve(16 + 16 * sketch.k());
  append_sketch(sketch, out);
  return out;
}

// Reads one sketch starting at `offset` and advances it. Nothing is returned
// unless the whole record decodes.
inline MinHashSketch read_sketch(std::span<const std::uint8_t> bytes, std::size_t& offset) {
  detail::ByteReader r(bytes, offset);
  r.expect_magic(sketch_magic);
  const std::size_t k_pos = r.position();
  const std::uint32_t k = r.u32("k");
  if (k == 0) throw format_error("sketch with k = 0", k_pos);
  // Reject impossible lengths before allocating.
  if ((bytes.size() - r.position()) / 16 < k) throw format_error("truncated stream: k exceeds remaining bytes", k_pos);
  std::vector<std::uint64_t> seeds(k);
  for (auto& s : seeds) s = r.u64("seeds");
  const std::uint64_t source_size = r.u64("source_size");
  std::vector<std::uint64_t> minima(k);
  for (auto& m : minima) m = r.u64("minima");
  HashFamilyPtr family;
  try {
    family = std::make_shared<const HashFamily>(std::move(seeds));
  } catch (const domain_error& e) {
    throw format_error(std::string("invalid seeds: ") + e.what(), k_pos + 4);
  }
  if (source_size > static_cast<std::uint64_t>(std::numeric_limits<count_t>::max())) {
    throw format_error("source_size out of range", k_pos + 4 + 8 * static_cast<std::size_t>(k));
  }
  offset = r.position();
  return MinHashSketch(std::move(family), std::move(minima), static_cast<count_t>(source_size));
}

inline MinHashSketch deserialize_sketch(std::span<const std::uint8_t> bytes) {
  std::size_t offset = 0;
  auto sketch = read_sketch(bytes, offset);
  if (offset != bytes.size()) throw format_error("trailing bytes after sketch", offset);
  return sketch;
}

// JSON mirror. 64-bit values travel as decimal strings.
inline nlohmann::json sketch_to_json(const MinHashSketch& sketch) {
  nlohmann::json seeds = nlohmann::json::array();
  for (std::uint64_t s : sketch.family()->seeds()) seeds.push_back(std::to_string(s));
  nlohmann::json minima = nlohmann::json::array();
  for (std::uint64_t m : sketch.minima()) minima.push_back(std::to_string(m));
  return {{"k", sketch.k()}, {"seeds", seeds}, {"source_size", sketch.source_size()}, {"minima", minima}};
}

inline MinHashSketch sketch_from_json(const nlohmann::json& j) {
  auto parse_u64 = [](const nlohmann::json& v, std::size_t index) -> std::uint64_t {
    if (!v.is_string()) throw format_error("expected decimal string", index);
    const std::string& s = v.get_ref<const std::string&>();
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
      throw format_error("not a decimal u64: " + s, index);
    }
    try {
      return std::stoull(s);
    } catch (const std::exception&) {
      throw format_error("u64 out of range: " + s, index);
    }
  };
  try {
    const auto k = j.at("k").get<std::size_t>();
    const auto& seeds_json = j.at("seeds");
    const auto& minima_json = j.at("minima");
    if (k == 0 || seeds_json.size() != k || minima_json.size() != k) throw format_error("k does not match arrays", 0);
    std::vector<std::uint64_t> seeds(k), minima(k);
    for (std::size_t t = 0; t < k; ++t) {
      seeds[t] = parse_u64(seeds_json[t], t);
      minima[t] = parse_u64(minima_json[t], t);
    }
    const auto source_size = j.at("source_size").get<count_t>();
    return MinHashSketch(std::make_shared<const HashFamily>(std::move(seeds)), std::move(minima), source_size);
  } catch (const nlohmann::json::exception& e) {
    throw format_error(std::string("malformed sketch JSON: ") + e.what(), 0);
  } catch (const domain_error& e) {
    throw format_error(std::string("invalid sketch JSON: ") + e.what(), 0);
  }
}

inline std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path);
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_file_bytes(const std::string& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw io_error("write failed: " + path);
}

}  // namespace overlap_sketch
