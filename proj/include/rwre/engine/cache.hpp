#pragma once

// Content-addressed artifact store: one file per key with a checksummed
// header line "RWRECACHE1 <fnv64-hex> <payload-bytes>".

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>

#include "rwre/core.hpp"

namespace rwre {

[[nodiscard]] inline std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

[[nodiscard]] inline std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

enum class CacheStatus { Hit, Miss, Corrupt };

class ContentCache {
 public:
  explicit ContentCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
  }

  [[nodiscard]] static std::string key_for(std::string_view manifest) { return hex64(fnv1a64(manifest)); }

  [[nodiscard]] std::filesystem::path path_for(const std::string& key) const {
    return dir_ / (key + ".cache");
  }

  /// Payload for `key`; nullopt when absent. Throws CorruptEntry on checksum mismatch.
  [[nodiscard]] std::optional<std::string> load(const std::string& key) const {
    std::ifstream in(path_for(key), std::ios::binary);
    if (!in) return std::nullopt;
    std::string magic, sum;
    std::size_t len = 0;
    in >> magic >> sum >> len;
    in.get();
    std::string payload(len, '\0');
    in.read(payload.data(), static_cast<std::streamsize>(len));
    if (magic != "RWRECACHE1" || !in || static_cast<std::size_t>(in.gcount()) != len ||
        sum != hex64(fnv1a64(payload)))
      throw CorruptEntry("cache entry " + key + " failed checksum");
    return payload;
  }

  void store(const std::string& key, std::string_view payload) const {
    const auto tmp = path_for(key).string() + ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      out << "RWRECACHE1 " << hex64(fnv1a64(payload)) << ' ' << payload.size() << '\n';
      out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    }
    std::filesystem::rename(tmp, path_for(key));
  }

  /// Loads `key`, or runs `produce` and stores its output. Corrupt entries are recomputed.
  std::string get_or_compute(const std::string& key, const std::function<std::string()>& produce,
                             CacheStatus* status = nullptr) const {
    try {
      if (auto hit = load(key)) {
        if (status) *status = CacheStatus::Hit;
        return *hit;
      }
      if (status) *status = CacheStatus::Miss;
    } catch (const CorruptEntry&) {
      if (status) *status = CacheStatus::Corrupt;
    }
    std::string payload = produce();
    store(key, payload);
    return payload;
  }

 private:
  std::filesystem::path dir_;
};

}  // namespace rwre
