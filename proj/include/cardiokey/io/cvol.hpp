#pragma once

#include <cstddef>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "cardiokey/core/sequence.hpp"

namespace cardiokey::io {

/// Raised for unreadable or inconsistent cvol directories. `key()` names the
/// header field at fault when there is one.
class FormatError : public std::runtime_error {
 public:
  FormatError(std::string key, const std::string& what)
      : std::runtime_error(what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

/// Raw contents of a cvol directory: header.json plus data.raw holding
/// little-endian float32 values, t-major then (z,) y, x.
struct CvolVolume {
  std::vector<std::size_t> dims;  // [t, (z,) y, x]
  std::vector<double> spacing_mm;  // one per spatial axis
  std::vector<float> data;
};

inline constexpr const char* kCvolOrder = "t-major, then z, y, x";

CvolVolume read_cvol(const std::filesystem::path& dir);
void write_cvol(const std::filesystem::path& dir, const CvolVolume& volume);

ImageSequence to_sequence(const CvolVolume& volume);
CvolVolume from_sequence(const ImageSequence& seq);

/// A field sequence is stored as one cvol per displacement component, in
/// subdirectories u_z, u_y, u_x (u_y, u_x for 2D).
void write_fields(const std::filesystem::path& dir, const DisplacementFieldSequence& fields);
DisplacementFieldSequence read_fields(const std::filesystem::path& dir);

/// Single-frame cvol with 0/1 values.
void write_mask(const std::filesystem::path& dir, const std::vector<bool>& mask, const Shape& shape,
                const std::vector<double>& spacing_mm);

}  // namespace cardiokey::io
