#include "lensless/tensor_file.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

namespace lensless {

static_assert(std::endian::native == std::endian::little, "tensor files assume a little-endian host");

namespace {

using Kind = StackFormatError::Kind;

void put_u32(std::string& out, std::uint32_t v) {
  char b[4];
  std::memcpy(b, &v, 4);
  out.append(b, 4);
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::uint32_t u32(const char* what) {
    if (remaining() < 4) throw StackFormatError(Kind::payload_length, std::string("truncated header: ") + what);
    std::uint32_t v;
    std::memcpy(&v, bytes_.data() + pos_, 4);
    pos_ += 4;
    return v;
  }
  std::string_view take(std::size_t n) {
    std::string_view s = bytes_.substr(pos_, n);
    pos_ += s.size();
    return s;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

std::size_t dtype_size(Dtype d) { return d == Dtype::float32 ? 4 : 8; }

}  // namespace

std::size_t Tensor::count() const {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return dims.empty() ? 0 : n;
}

std::string encode_stack(const Tensor& t) {
  if (t.dims.empty() || t.count() == 0) throw StackFormatError(Kind::dims, "tensor has no elements");
  if (t.data.size() != t.count()) throw StackFormatError(Kind::payload_length, "tensor data does not match its dims");
  if (t.dtype != Dtype::float32 && t.dtype != Dtype::float64) throw StackFormatError(Kind::dtype, "unknown dtype");
  for (double v : t.data)
    if (!std::isfinite(v)) throw StackFormatError(Kind::non_finite, "tensor holds non-finite values");

  std::string out(kStackMagic);
  put_u32(out, kStackVersion);
  put_u32(out, static_cast<std::uint32_t>(t.dims.size()));
  for (auto d : t.dims) put_u32(out, d);
  put_u32(out, static_cast<std::uint32_t>(t.dtype));
  out.reserve(out.size() + t.count() * dtype_size(t.dtype));
  for (double v : t.data) {
    if (t.dtype == Dtype::float32) {
      const float f = static_cast<float>(v);
      out.append(reinterpret_cast<const char*>(&f), 4);
    } else {
      out.append(reinterpret_cast<const char*>(&v), 8);
    }
  }
  return out;
}

Tensor decode_stack(std::string_view bytes) {
  Reader in(bytes);
  if (in.take(kStackMagic.size()) != kStackMagic) throw StackFormatError(Kind::magic, "not a tensor stack file");
  const std::uint32_t version = in.u32("version");
  if (version != kStackVersion)
    throw StackFormatError(Kind::version, "unsupported tensor stack version " + std::to_string(version));
  Tensor t;
  const std::uint32_t ndim = in.u32("ndim");
  if (ndim == 0 || ndim > 16) throw StackFormatError(Kind::dims, "invalid dimension count " + std::to_string(ndim));
  for (std::uint32_t i = 0; i < ndim; ++i) t.dims.push_back(in.u32("dims"));
  if (t.count() == 0) throw StackFormatError(Kind::dims, "tensor has a zero dimension");
  const std::uint32_t dtype = in.u32("dtype");
  if (dtype != 1 && dtype != 2) throw StackFormatError(Kind::dtype, "unknown dtype tag " + std::to_string(dtype));
  t.dtype = static_cast<Dtype>(dtype);

  const std::size_t expected = t.count() * dtype_size(t.dtype);
  if (in.remaining() != expected)
    throw StackFormatError(Kind::payload_length, "payload is " + std::to_string(in.remaining()) + " bytes, expected " +
                                                     std::to_string(expected));
  const std::string_view payload = in.take(expected);
  t.data.resize(t.count());
  for (std::size_t i = 0; i < t.count(); ++i) {
    if (t.dtype == Dtype::float32) {
      float f;
      std::memcpy(&f, payload.data() + 4 * i, 4);
      t.data[i] = f;
    } else {
      std::memcpy(&t.data[i], payload.data() + 8 * i, 8);
    }
  }
  return t;
}

void write_stack(const std::filesystem::path& path, const Tensor& t) {
  const std::string bytes = encode_stack(t);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw StackFormatError(Kind::io, "cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw StackFormatError(Kind::io, "failed writing " + path.string());
}

Tensor read_stack(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StackFormatError(Kind::io, "cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_stack(bytes);
}

}  // namespace lensless
