#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace semsurf {

/// Incremental SHA-1, used for content-addressing dataset directories in run
/// manifests. Not a security boundary.
class Sha1 {
 public:
  Sha1();
  void update(const void* data, std::size_t len);
  void update(const std::string& s) { update(s.data(), s.size()); }
  /// Finalizes and returns the 40-char lowercase hex digest.
  std::string hex_digest();

 private:
  void process_block(const std::uint8_t* block);
  std::uint32_t h_[5];
  std::uint8_t buffer_[64];
  std::size_t buffer_len_ = 0;
  std::uint64_t total_bits_ = 0;
};

std::string sha1_hex(const std::string& data);

/// Hash of every regular file under dir (sorted relative paths + contents).
std::string sha1_directory(const std::string& dir);

}  // namespace semsurf
