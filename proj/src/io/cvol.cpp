#include "cardiokey/io/cvol.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

#include <nlohmann/json.hpp>

namespace cardiokey::io {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const json& require(const json& header, const char* key) {
  if (!header.contains(key)) throw FormatError(key, std::string("header.json is missing '") + key + "'");
  return header.at(key);
}

std::vector<std::string> component_names(std::size_t rank) {
  if (rank == 2) return {"u_y", "u_x"};
  return {"u_z", "u_y", "u_x"};
}

}  // namespace

CvolVolume read_cvol(const fs::path& dir) {
  std::ifstream hs(dir / "header.json");
  if (!hs) throw FormatError("", "cannot open " + (dir / "header.json").string());
  json header;
  try {
    header = json::parse(hs);
  } catch (const json::parse_error& e) {
    throw FormatError("", "header.json is not valid JSON: " + std::string(e.what()));
  }
  if (!header.is_object()) throw FormatError("", "header.json must hold an object");

  CvolVolume vol;
  const json& dims = require(header, "dims");
  if (!dims.is_array() || dims.size() < 2 || dims.size() > 4) {
    throw FormatError("dims", "'dims' must be an array [t, (z,) y, x]");
  }
  for (const auto& d : dims) {
    if (!d.is_number_integer() || d.get<long long>() <= 0) {
      throw FormatError("dims", "'dims' entries must be positive integers");
    }
    vol.dims.push_back(d.get<std::size_t>());
  }
  const json& spacing = require(header, "spacing_mm");
  if (!spacing.is_array() || spacing.size() != vol.dims.size() - 1) {
    throw FormatError("spacing_mm", "'spacing_mm' needs one entry per spatial axis");
  }
  for (const auto& s : spacing) {
    if (!s.is_number() || !(s.get<double>() > 0.0)) {
      throw FormatError("spacing_mm", "'spacing_mm' entries must be positive numbers");
    }
    vol.spacing_mm.push_back(s.get<double>());
  }
  const json& dtype = require(header, "dtype");
  if (!dtype.is_string() || dtype.get<std::string>() != "f32le") {
    throw FormatError("dtype", "'dtype' must be \"f32le\"");
  }
  const json& order = require(header, "order");
  if (!order.is_string()) throw FormatError("order", "'order' must be a string");

  std::size_t count = 1;
  for (std::size_t d : vol.dims) count *= d;
  std::ifstream ds(dir / "data.raw", std::ios::binary);
  if (!ds) throw FormatError("", "cannot open " + (dir / "data.raw").string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(ds)), std::istreambuf_iterator<char>());
  if (bytes.size() != count * 4) {
    throw FormatError("dims", "data.raw holds " + std::to_string(bytes.size()) + " bytes, dims imply " +
                                  std::to_string(count * 4));
  }
  vol.data.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const unsigned char* b = &bytes[4 * i];
    const std::uint32_t bits = std::uint32_t{b[0]} | (std::uint32_t{b[1]} << 8) |
                               (std::uint32_t{b[2]} << 16) | (std::uint32_t{b[3]} << 24);
    vol.data[i] = std::bit_cast<float>(bits);
  }
  return vol;
}

void write_cvol(const fs::path& dir, const CvolVolume& volume) {
  fs::create_directories(dir);
  json header;
  header["dims"] = volume.dims;
  header["spacing_mm"] = volume.spacing_mm;
  header["dtype"] = "f32le";
  header["order"] = kCvolOrder;
  std::ofstream hs(dir / "header.json");
  hs << header.dump(2) << '\n';
  if (!hs) throw std::runtime_error("cannot write " + (dir / "header.json").string());

  std::vector<unsigned char> bytes(volume.data.size() * 4);
  for (std::size_t i = 0; i < volume.data.size(); ++i) {
    const auto bits = std::bit_cast<std::uint32_t>(volume.data[i]);
    for (int k = 0; k < 4; ++k) bytes[4 * i + k] = static_cast<unsigned char>((bits >> (8 * k)) & 0xFFU);
  }
  std::ofstream ds(dir / "data.raw", std::ios::binary);
  ds.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!ds) throw std::runtime_error("cannot write " + (dir / "data.raw").string());
}

ImageSequence to_sequence(const CvolVolume& volume) {
  if (volume.dims.size() != 3 && volume.dims.size() != 4) {
    throw FormatError("dims", "image sequences need dims [t, y, x] or [t, z, y, x]");
  }
  const std::size_t frames = volume.dims.front();
  const Shape shape(std::vector<std::size_t>(volume.dims.begin() + 1, volume.dims.end()));
  std::vector<ScalarGrid> grids;
  grids.reserve(frames);
  for (std::size_t t = 0; t < frames; ++t) {
    std::vector<double> values(volume.data.begin() + static_cast<std::ptrdiff_t>(t * shape.size()),
                               volume.data.begin() + static_cast<std::ptrdiff_t>((t + 1) * shape.size()));
    grids.emplace_back(shape, std::move(values));
  }
  return {std::move(grids), volume.spacing_mm};
}

CvolVolume from_sequence(const ImageSequence& seq) {
  CvolVolume vol;
  vol.dims.push_back(seq.length());
  for (std::size_t d : seq.shape().dims()) vol.dims.push_back(d);
  vol.spacing_mm = seq.spacing();
  vol.data.reserve(seq.length() * seq.shape().size());
  for (const auto& f : seq.frames()) {
    for (double v : f.values()) vol.data.push_back(static_cast<float>(v));
  }
  return vol;
}

void write_fields(const fs::path& dir, const DisplacementFieldSequence& fields) {
  const Shape& shape = fields.shape();
  const auto names = component_names(shape.rank());
  for (std::size_t axis = 0; axis < shape.rank(); ++axis) {
    CvolVolume vol;
    vol.dims.push_back(fields.length());
    for (std::size_t d : shape.dims()) vol.dims.push_back(d);
    vol.spacing_mm = fields.spacing();
    vol.data.reserve(fields.length() * shape.size());
    for (const auto& f : fields.fields()) {
      for (double v : f.component(axis).values()) vol.data.push_back(static_cast<float>(v));
    }
    write_cvol(dir / names[axis], vol);
  }
}

DisplacementFieldSequence read_fields(const fs::path& dir) {
  const std::size_t rank = fs::exists(dir / "u_z") ? 3 : 2;
  const auto names = component_names(rank);
  std::vector<CvolVolume> parts;
  for (const auto& name : names) {
    parts.push_back(read_cvol(dir / name));
    if (parts.back().dims.size() != rank + 1 || parts.back().dims != parts.front().dims) {
      throw FormatError("dims", "field component " + name + " has inconsistent dims");
    }
  }
  const std::size_t frames = parts.front().dims.front();
  const Shape shape(std::vector<std::size_t>(parts.front().dims.begin() + 1, parts.front().dims.end()));
  std::vector<VectorGrid> fields;
  for (std::size_t t = 0; t < frames; ++t) {
    VectorGrid field(shape);
    for (std::size_t axis = 0; axis < rank; ++axis) {
      auto dst = field.component(axis).values();
      for (std::size_t i = 0; i < shape.size(); ++i) dst[i] = parts[axis].data[t * shape.size() + i];
    }
    fields.push_back(std::move(field));
  }
  return {std::move(fields), parts.front().spacing_mm};
}

void write_mask(const fs::path& dir, const std::vector<bool>& mask, const Shape& shape,
                const std::vector<double>& spacing_mm) {
  CvolVolume vol;
  vol.dims.push_back(1);
  for (std::size_t d : shape.dims()) vol.dims.push_back(d);
  vol.spacing_mm = spacing_mm;
  vol.data.reserve(mask.size());
  for (bool m : mask) vol.data.push_back(m ? 1.0F : 0.0F);
  write_cvol(dir, vol);
}

}  // namespace cardiokey::io
