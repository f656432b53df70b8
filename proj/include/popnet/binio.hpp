#pragma once

// Binary containers shared by every persisted artifact.
//
// Two formats exist:
//   * flat block   - 8-byte magic, u64 length, length x f64 (little-endian).
//                    Used for single feature vectors.
//   * archive      - "PPNARCH1", u32 version, u32 entry count, then entries
//                    of either named f64 arrays (with shape) or named strings.
//                    Used for PCA/scaler models, network checkpoints and
//                    baseline models. Entry order is insertion order, so
//                    writing the same content always yields the same bytes.

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace popnet {

inline constexpr std::uint32_t kArchiveVersion = 1;

std::uint64_t fnv1a64(std::string_view bytes,
                      std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a64(std::span<const double> values,
                      std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t value);

std::string read_file_bytes(const std::filesystem::path& path);
// Writes through a temporary file and renames, so readers never observe a
// partially written artifact.
void write_file_bytes(const std::filesystem::path& path, std::string_view bytes);

void write_flat_block(const std::filesystem::path& path, std::string_view magic,
                      std::span<const double> values);
std::vector<double> read_flat_block(const std::filesystem::path& path,
                                    std::string_view magic);

struct ArrayEntry {
  std::vector<std::uint64_t> shape;
  std::vector<double> values;
};

class Archive {
 public:
  void put_array(const std::string& name, std::vector<std::uint64_t> shape,
                 std::vector<double> values);
  void put_array(const std::string& name, std::span<const double> values);
  void put_string(const std::string& name, std::string value);
  void put_scalar(const std::string& name, double value);

  bool has(const std::string& name) const;
  const ArrayEntry& array(const std::string& name) const;
  const std::string& string(const std::string& name) const;
  double scalar(const std::string& name) const;

  // Names in insertion order.
  const std::vector<std::string>& names() const { return order_; }

  std::string serialize() const;
  static Archive deserialize(std::string_view bytes);

  void save(const std::filesystem::path& path) const;
  static Archive load(const std::filesystem::path& path);

 private:
  std::vector<std::string> order_;
  std::map<std::string, ArrayEntry> arrays_;
  std::map<std::string, std::string> strings_;
};

}  // namespace popnet
