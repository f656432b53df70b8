#include "popnet/binio.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "popnet/error.hpp"

namespace popnet {
namespace {

constexpr std::string_view kArchiveMagic = "PPNARCH1";
constexpr std::uint8_t kTagArray = 1;
constexpr std::uint8_t kTagString = 2;

template <typename T>
void put_le(std::string& out, T value) {
  static_assert(std::is_integral_v<T>);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xff));
  }
}

void put_f64(std::string& out, double value) {
  put_le(out, std::bit_cast<std::uint64_t>(value));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(T);
    return static_cast<T>(v);
  }

  double get_f64() { return std::bit_cast<double>(get<std::uint64_t>()); }

  std::string_view take(std::size_t n) {
    need(n);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) {
      throw Error(ErrorCode::kIoError, "truncated binary container");
    }
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t fnv1a64(std::span<const double> values, std::uint64_t seed) {
  std::string buf;
  buf.reserve(values.size() * 8);
  for (double v : values) put_f64(buf, v);
  return fnv1a64(buf, seed);
}

std::string hex64(std::uint64_t value) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = kDigits[value & 0xf];
    value >>= 4;
  }
  return s;
}

std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

void write_file_bytes(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::kIoError, "short write to " + path.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot rename onto " + path.string());
}

void write_flat_block(const std::filesystem::path& path, std::string_view magic,
                      std::span<const double> values) {
  if (magic.size() != 8) throw Error(ErrorCode::kInvalidArgument, "flat block magic must be 8 bytes");
  std::string out(magic);
  put_le<std::uint64_t>(out, values.size());
  for (double v : values) put_f64(out, v);
  write_file_bytes(path, out);
}

std::vector<double> read_flat_block(const std::filesystem::path& path,
                                    std::string_view magic) {
  const std::string bytes = read_file_bytes(path);
  Reader r(bytes);
  if (r.take(8) != magic) throw Error(ErrorCode::kIoError, "bad magic in " + path.string());
  const auto n = r.get<std::uint64_t>();
  if (bytes.size() != 16 + n * 8) {
    throw Error(ErrorCode::kWrongLength, "flat block length mismatch in " + path.string());
  }
  std::vector<double> values(n);
  for (auto& v : values) v = r.get_f64();
  return values;
}

void Archive::put_array(const std::string& name, std::vector<std::uint64_t> shape,
                        std::vector<double> values) {
  std::uint64_t count = 1;
  for (auto s : shape) count *= s;
  if (count != values.size()) {
    throw Error(ErrorCode::kShapeMismatch, "archive entry '" + name + "' shape/size disagree");
  }
  if (!has(name)) order_.push_back(name);
  strings_.erase(name);
  arrays_[name] = ArrayEntry{std::move(shape), std::move(values)};
}

void Archive::put_array(const std::string& name, std::span<const double> values) {
  put_array(name, {values.size()}, std::vector<double>(values.begin(), values.end()));
}

void Archive::put_string(const std::string& name, std::string value) {
  if (!has(name)) order_.push_back(name);
  arrays_.erase(name);
  strings_[name] = std::move(value);
}

void Archive::put_scalar(const std::string& name, double value) {
  put_array(name, {1}, {value});
}

bool Archive::has(const std::string& name) const {
  return arrays_.contains(name) || strings_.contains(name);
}

const ArrayEntry& Archive::array(const std::string& name) const {
  auto it = arrays_.find(name);
  if (it == arrays_.end()) throw Error(ErrorCode::kMissingField, "archive has no array '" + name + "'");
  return it->second;
}

const std::string& Archive::string(const std::string& name) const {
  auto it = strings_.find(name);
  if (it == strings_.end()) throw Error(ErrorCode::kMissingField, "archive has no string '" + name + "'");
  return it->second;
}

double Archive::scalar(const std::string& name) const {
  const auto& a = array(name);
  if (a.values.size() != 1) throw Error(ErrorCode::kShapeMismatch, "'" + name + "' is not a scalar");
  return a.values[0];
}

std::string Archive::serialize() const {
  std::string out(kArchiveMagic);
  put_le<std::uint32_t>(out, kArchiveVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(order_.size()));
  for (const auto& name : order_) {
    if (auto it = arrays_.find(name); it != arrays_.end()) {
      out.push_back(static_cast<char>(kTagArray));
      put_le<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
      out += name;
      put_le<std::uint32_t>(out, static_cast<std::uint32_t>(it->second.shape.size()));
      for (auto s : it->second.shape) put_le<std::uint64_t>(out, s);
      for (double v : it->second.values) put_f64(out, v);
    } else {
      const auto& s = strings_.at(name);
      out.push_back(static_cast<char>(kTagString));
      put_le<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
      out += name;
      put_le<std::uint64_t>(out, s.size());
      out += s;
    }
  }
  return out;
}

Archive Archive::deserialize(std::string_view bytes) {
  Reader r(bytes);
  if (r.take(8) != kArchiveMagic) throw Error(ErrorCode::kIoError, "not a popnet archive");
  const auto version = r.get<std::uint32_t>();
  if (version != kArchiveVersion) {
    throw Error(ErrorCode::kIoError, "unsupported archive version " + std::to_string(version));
  }
  const auto count = r.get<std::uint32_t>();
  Archive a;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto tag = r.get<std::uint8_t>();
    const auto name_len = r.get<std::uint32_t>();
    std::string name(r.take(name_len));
    if (tag == kTagArray) {
      const auto rank = r.get<std::uint32_t>();
      std::vector<std::uint64_t> shape(rank);
      std::uint64_t n = 1;
      for (auto& s : shape) {
        s = r.get<std::uint64_t>();
        n *= s;
      }
      std::vector<double> values(n);
      for (auto& v : values) v = r.get_f64();
      a.put_array(name, std::move(shape), std::move(values));
    } else if (tag == kTagString) {
      const auto len = r.get<std::uint64_t>();
      a.put_string(name, std::string(r.take(len)));
    } else {
      throw Error(ErrorCode::kIoError, "unknown archive entry tag");
    }
  }
  if (!r.done()) throw Error(ErrorCode::kIoError, "trailing bytes in archive");
  return a;
}

void Archive::save(const std::filesystem::path& path) const {
  write_file_bytes(path, serialize());
}

Archive Archive::load(const std::filesystem::path& path) {
  return deserialize(read_file_bytes(path));
}

}  // namespace popnet
