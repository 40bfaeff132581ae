#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>

namespace draftval {

// 64-bit FNV-1a, used for provenance hashes of configs, data and artifacts.
class Fnv1a {
 public:
  Fnv1a& update(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      state_ ^= p[i];
      state_ *= 0x100000001b3ULL;
    }
    return *this;
  }
  Fnv1a& update(std::string_view s) { return update(s.data(), s.size()); }
  template <class T>
  Fnv1a& update_value(const T& v) {
    unsigned char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    return update(buf, sizeof(T));
  }
  std::uint64_t digest() const { return state_; }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

inline std::uint64_t fnv1a(std::string_view s) { return Fnv1a().update(s).digest(); }

std::string hex64(std::uint64_t v);

}  // namespace draftval
