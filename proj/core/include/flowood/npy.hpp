#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "flowood/matrix.hpp"

namespace flowood {

// In-memory NPY v1.0 array. Only little-endian, C-order arrays of rank 1 or 2
// with dtype <f4, <f8 or <i8 are supported.
struct NpyArray {
  using Storage = std::variant<std::vector<float>, std::vector<double>,
                               std::vector<std::int64_t>>;

  std::vector<std::size_t> shape;
  Storage data;

  std::size_t element_count() const noexcept;
  std::string descr() const;  // "<f4", "<f8" or "<i8"

  friend bool operator==(const NpyArray&, const NpyArray&) = default;
};

NpyArray parse_npy(std::span<const std::byte> bytes);
std::vector<std::byte> encode_npy(const NpyArray& array);

NpyArray read_npy(const std::filesystem::path& path);
void write_npy(const std::filesystem::path& path, const NpyArray& array);

NpyArray to_npy(const Matrix& m);
NpyArray to_npy(std::vector<double> values);
NpyArray to_npy(std::vector<float> values);
NpyArray to_npy(std::vector<std::int64_t> values);

// Conversions accept f4 and f8 for real data, i8 for labels. `what` names the
// array in error messages.
Matrix npy_to_matrix(const NpyArray& array, const std::string& what);
std::vector<double> npy_to_reals(const NpyArray& array, const std::string& what);
std::vector<std::int64_t> npy_to_labels(const NpyArray& array,
                                        const std::string& what);

}  // namespace flowood
