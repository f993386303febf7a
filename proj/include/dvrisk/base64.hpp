#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dvrisk {

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);

/// float64 buffer <-> base64 of its little-endian bytes.
std::string encode_f64_le(std::span<const double> values);
std::vector<double> decode_f64_le(std::string_view text);

}  // namespace dvrisk
