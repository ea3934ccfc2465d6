#pragma once

#include <cstdint>
#include <cstring>
#include <span>
#include <string_view>

namespace afil {

// FNV-1a over raw bytes; used for parameter fingerprints and record ids.
class Fnv1a {
 public:
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h_ ^= p[i];
      h_ *= 0x100000001b3ULL;
    }
  }
  void doubles(std::span<const double> xs) { bytes(xs.data(), xs.size_bytes()); }
  template <class T>
  void value(const T& v) { bytes(&v, sizeof(T)); }
  void text(std::string_view s) { bytes(s.data(), s.size()); }
  std::uint64_t digest() const { return h_; }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

}  // namespace afil
