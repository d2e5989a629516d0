#include "bargain/rng.hpp"

namespace bargain {

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t derive_seed(std::uint64_t base,
                          std::initializer_list<std::string_view> parts) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (int shift = 0; shift < 64; shift += 8) {
    const char byte = static_cast<char>((base >> shift) & 0xff);
    h = fnv1a64(std::string_view(&byte, 1), h);
  }
  for (const auto& part : parts) {
    h = fnv1a64(part, h);
    h = fnv1a64(std::string_view("\x1f", 1), h);  // separator, avoids gluing
  }
  return h;
}

}  // namespace bargain
