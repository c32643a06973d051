#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "truewm/random.hpp"

namespace truewm {

/// Fixed-length binary message.
class WatermarkBits {
 public:
  WatermarkBits() = default;
  explicit WatermarkBits(std::vector<std::uint8_t> bits);

  static WatermarkBits random(std::size_t length, Rng& rng);
  /// Hex, most significant bit first, left-padded with zeros to `length`.
  /// Throws ParseError on bad digits or when set bits exceed `length`.
  static WatermarkBits from_hex(std::string_view hex, std::size_t length);
  std::string to_hex() const;

  std::size_t size() const { return bits_.size(); }
  std::uint8_t operator[](std::size_t i) const { return bits_[i]; }
  const std::vector<std::uint8_t>& bits() const { return bits_; }
  std::vector<double> as_reals() const;
  WatermarkBits complement() const;
  std::string to_string() const;  // "0101..."

  bool operator==(const WatermarkBits&) const = default;

 private:
  std::vector<std::uint8_t> bits_;
};

}  // namespace truewm
