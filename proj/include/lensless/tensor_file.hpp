#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace lensless {

// On-disk layout (all integers little-endian u32):
//   "L3DSTACK" | version | ndim | dims[ndim] | dtype | row-major payload
enum class Dtype : std::uint32_t { float32 = 1, float64 = 2 };

inline constexpr std::uint32_t kStackVersion = 1;
inline constexpr std::string_view kStackMagic = "L3DSTACK";

struct Tensor {
  std::vector<std::uint32_t> dims;
  std::vector<double> data;
  Dtype dtype = Dtype::float64;

  std::size_t count() const;
};

class StackFormatError : public std::runtime_error {
 public:
  enum class Kind { io, magic, version, dtype, dims, payload_length, non_finite };

  StackFormatError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

std::string encode_stack(const Tensor& t);
Tensor decode_stack(std::string_view bytes);

void write_stack(const std::filesystem::path& path, const Tensor& t);
Tensor read_stack(const std::filesystem::path& path);

}  // namespace lensless
