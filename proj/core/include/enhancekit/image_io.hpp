#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "enhancekit/tensor.hpp"

namespace enhancekit {

// 8-bit PNG, gray or RGB (alpha is dropped, palettes expanded). Returns a display-space tensor.
Tensor read_png(const std::string& path);
// Quantizes round(255 * v) after clamping to [0,1]. Accepts display or model space.
void write_png(const std::string& path, const Tensor& img);

std::vector<std::uint8_t> quantize_8bit(const Tensor& display);

// Tensor dump: one-line JSON header {"h":..,"w":..,"c":..,"space":".."} and '\n',
// then h*w*c little-endian float32 values in row-major HWC order.
std::vector<std::uint8_t> encode_tensor_dump(const Tensor& t);
Tensor decode_tensor_dump(const std::vector<std::uint8_t>& bytes);
void write_tensor_dump(const std::string& path, const Tensor& t);
Tensor read_tensor_dump(const std::string& path);

std::vector<std::uint8_t> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes);

// Float32 little-endian helpers shared by the dump and checkpoint formats.
void append_f32_le(std::vector<std::uint8_t>& out, float v);
float read_f32_le(const std::uint8_t* p);

// 64-bit FNV-1a; used for input/output fingerprints in run manifests.
std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ULL);
std::string tensor_hash(const Tensor& t);

}  // namespace enhancekit
