#pragma once

#include <cstdint>
#include <cstring>
#include <string_view>

namespace fickkin {

/// FNV-1a, 64 bit. Used for content addressing of caches and configs.
class Fnv1a {
 public:
  Fnv1a& bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const unsigned char*>(p);
    for (std::size_t k = 0; k < n; ++k) {
      h_ ^= c[k];
      h_ *= 0x100000001b3ULL;
    }
    return *this;
  }
  Fnv1a& add(double x) {
    if (x == 0.0) x = 0.0;  // fold -0
    return bytes(&x, sizeof x);
  }
  Fnv1a& add(std::int64_t x) { return bytes(&x, sizeof x); }
  Fnv1a& add(std::string_view s) { return bytes(s.data(), s.size()); }
  std::uint64_t value() const { return h_; }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

}  // namespace fickkin
