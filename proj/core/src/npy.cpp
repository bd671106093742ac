#include "flowood/npy.hpp"

#include <cctype>
#include <fstream>

#include "byte_io.hpp"
#include "flowood/error.hpp"

namespace flowood {

namespace detail {

std::vector<std::byte> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0, std::ios::beg);
  std::vector<std::byte> bytes(size);
  if (size > 0 && !in.read(reinterpret_cast<char*>(bytes.data()),
                           static_cast<std::streamsize>(size)))
    throw IoError("failed reading " + path.string());
  return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::byte> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace detail

namespace {

constexpr char kMagic[] = "\x93NUMPY";
constexpr std::size_t kMagicLen = 6;
constexpr std::size_t kAlign = 64;

// Minimal parser for the Python-literal dict numpy writes as the header.
class HeaderParser {
 public:
  explicit HeaderParser(std::string text) : s_(std::move(text)) {}

  std::string descr;
  bool fortran_order = false;
  std::vector<std::size_t> shape;

  void parse() {
    skip_ws();
    expect('{');
    bool seen_descr = false, seen_order = false, seen_shape = false;
    while (true) {
      skip_ws();
      if (peek() == '}') break;
      const std::string key = quoted();
      skip_ws();
      expect(':');
      skip_ws();
      if (key == "descr") {
        descr = quoted();
        seen_descr = true;
      } else if (key == "fortran_order") {
        fortran_order = boolean();
        seen_order = true;
      } else if (key == "shape") {
        shape = tuple();
        seen_shape = true;
      } else {
        throw FormatError("npy header: unexpected key '" + key + "'");
      }
      skip_ws();
      if (peek() == ',') {
        ++pos_;
        continue;
      }
      skip_ws();
      if (peek() != '}') throw FormatError("npy header: malformed dict");
    }
    if (!seen_descr || !seen_order || !seen_shape)
      throw FormatError("npy header: missing descr, fortran_order or shape");
  }

 private:
  char peek() const {
    if (pos_ >= s_.size()) throw FormatError("npy header: unexpected end");
    return s_[pos_];
  }
  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  void expect(char c) {
    if (peek() != c)
      throw FormatError(std::string("npy header: expected '") + c + "'");
    ++pos_;
  }
  std::string quoted() {
    const char q = peek();
    if (q != '\'' && q != '"') throw FormatError("npy header: expected string");
    ++pos_;
    const auto end = s_.find(q, pos_);
    if (end == std::string::npos) throw FormatError("npy header: unterminated string");
    std::string out = s_.substr(pos_, end - pos_);
    pos_ = end + 1;
    return out;
  }
  bool boolean() {
    if (s_.compare(pos_, 4, "True") == 0) {
      pos_ += 4;
      return true;
    }
    if (s_.compare(pos_, 5, "False") == 0) {
      pos_ += 5;
      return false;
    }
    throw FormatError("npy header: expected True or False");
  }
  std::vector<std::size_t> tuple() {
    expect('(');
    std::vector<std::size_t> dims;
    while (true) {
      skip_ws();
      if (peek() == ')') {
        ++pos_;
        break;
      }
      std::size_t v = 0;
      bool any = false;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
        v = v * 10 + static_cast<std::size_t>(s_[pos_] - '0');
        ++pos_;
        any = true;
      }
      if (!any) throw FormatError("npy header: bad shape entry");
      dims.push_back(v);
      skip_ws();
      if (peek() == ',') ++pos_;
    }
    return dims;
  }

  std::string s_;
  std::size_t pos_ = 0;
};

template <typename T>
std::vector<T> decode_payload(std::span<const std::byte> raw, std::size_t count) {
  std::vector<T> out(count);
  if (count > 0) std::memcpy(out.data(), raw.data(), count * sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    for (auto& v : out) v = detail::byteswap_if_big(v);
  }
  return out;
}

std::string shape_literal(const std::vector<std::size_t>& shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  if (shape.size() == 1) s += ",";
  return s + ")";
}

}  // namespace

std::size_t NpyArray::element_count() const noexcept {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string NpyArray::descr() const {
  switch (data.index()) {
    case 0: return "<f4";
    case 1: return "<f8";
    default: return "<i8";
  }
}

NpyArray parse_npy(std::span<const std::byte> bytes) {
  detail::ByteReader reader(bytes, "npy");
  const auto magic = reader.get_raw(kMagicLen);
  if (std::memcmp(magic.data(), kMagic, kMagicLen) != 0)
    throw FormatError("npy: bad magic");
  const auto major = reader.get<std::uint8_t>();
  const auto minor = reader.get<std::uint8_t>();
  if (major != 1 || minor != 0)
    throw FormatError("npy: unsupported version " + std::to_string(major) + "." +
                      std::to_string(minor));
  const auto header_len = reader.get<std::uint16_t>();
  const auto header_raw = reader.get_raw(header_len);
  HeaderParser header(std::string(reinterpret_cast<const char*>(header_raw.data()),
                                  header_raw.size()));
  header.parse();
  if (header.fortran_order) throw FormatError("npy: fortran_order arrays are not supported");
  if (header.shape.empty() || header.shape.size() > 2)
    throw FormatError("npy: only rank 1 and 2 arrays are supported");

  NpyArray array;
  array.shape = header.shape;
  const std::size_t count = array.element_count();
  std::size_t width = 0;
  if (header.descr == "<f4") width = 4;
  else if (header.descr == "<f8") width = 8;
  else if (header.descr == "<i8") width = 8;
  else throw FormatError("npy: unsupported dtype '" + header.descr + "'");

  if (reader.remaining() != count * width) {
    throw FormatError("npy: payload has " + std::to_string(reader.remaining()) +
                      " bytes, header shape " + shape_literal(array.shape) +
                      " needs " + std::to_string(count * width));
  }
  const auto raw = reader.get_raw(count * width);
  if (header.descr == "<f4") array.data = decode_payload<float>(raw, count);
  else if (header.descr == "<f8") array.data = decode_payload<double>(raw, count);
  else array.data = decode_payload<std::int64_t>(raw, count);
  return array;
}

std::vector<std::byte> encode_npy(const NpyArray& array) {
  if (array.shape.empty() || array.shape.size() > 2)
    throw FormatError("npy: only rank 1 and 2 arrays are supported");
  const std::size_t count = std::visit([](const auto& v) { return v.size(); }, array.data);
  if (count != array.element_count())
    throw DimensionError("npy: data length does not match shape");

  std::string header = "{'descr': '" + array.descr() +
                       "', 'fortran_order': False, 'shape': " +
                       shape_literal(array.shape) + ", }";
  // Same padding rule as numpy: magic + version + u16 length + header + '\n'
  // is a multiple of 64.
  const std::size_t hlen = header.size() + 1;
  const std::size_t pad = kAlign - ((kMagicLen + 2 + 2 + hlen) % kAlign);
  header.append(pad, ' ');
  header.push_back('\n');
  if (header.size() > 0xFFFF) throw FormatError("npy: header too long for v1.0");

  detail::ByteWriter w;
  w.put_raw(std::as_bytes(std::span(kMagic, kMagicLen)));
  w.put<std::uint8_t>(1);
  w.put<std::uint8_t>(0);
  w.put<std::uint16_t>(static_cast<std::uint16_t>(header.size()));
  w.put_raw(std::as_bytes(std::span(header.data(), header.size())));
  std::visit([&](const auto& v) {
    for (auto x : v) w.put(x);
  }, array.data);
  return w.take();
}

NpyArray read_npy(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  try {
    return parse_npy(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_npy(const std::filesystem::path& path, const NpyArray& array) {
  detail::write_file(path, encode_npy(array));
}

NpyArray to_npy(const Matrix& m) {
  return {{m.rows(), m.cols()},
          std::vector<float>(m.values().begin(), m.values().end())};
}

NpyArray to_npy(std::vector<double> values) {
  const std::size_t n = values.size();
  return {{n}, std::move(values)};
}

NpyArray to_npy(std::vector<float> values) {
  const std::size_t n = values.size();
  return {{n}, std::move(values)};
}

NpyArray to_npy(std::vector<std::int64_t> values) {
  const std::size_t n = values.size();
  return {{n}, std::move(values)};
}

Matrix npy_to_matrix(const NpyArray& array, const std::string& what) {
  if (array.shape.size() != 2)
    throw FormatError(what + ": expected a rank-2 array, got rank " +
                      std::to_string(array.shape.size()));
  if (const auto* f = std::get_if<std::vector<float>>(&array.data))
    return Matrix(array.shape[0], array.shape[1], *f);
  if (const auto* d = std::get_if<std::vector<double>>(&array.data))
    return Matrix(array.shape[0], array.shape[1],
                  std::vector<float>(d->begin(), d->end()));
  throw FormatError(what + ": expected a float array, got " + array.descr());
}

std::vector<double> npy_to_reals(const NpyArray& array, const std::string& what) {
  if (array.shape.size() != 1 && !(array.shape.size() == 2 && array.shape[1] == 1))
    throw FormatError(what + ": expected a rank-1 array");
  if (const auto* f = std::get_if<std::vector<float>>(&array.data))
    return {f->begin(), f->end()};
  if (const auto* d = std::get_if<std::vector<double>>(&array.data)) return *d;
  throw FormatError(what + ": expected a float array, got " + array.descr());
}

std::vector<std::int64_t> npy_to_labels(const NpyArray& array,
                                        const std::string& what) {
  if (array.shape.size() != 1) throw FormatError(what + ": expected a rank-1 array");
  if (const auto* i = std::get_if<std::vector<std::int64_t>>(&array.data)) return *i;
  throw FormatError(what + ": expected an int64 array, got " + array.descr());
}

}  // namespace flowood
