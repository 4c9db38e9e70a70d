#pragma once

#include <bit>
#include <cstdint>
#include <fstream>
#include <string>

#include "semsurf/common.hpp"

namespace semsurf {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

/// Little-endian binary checkpoint stream. Layout is fixed per format
/// version; tensors are stored as (rows, cols, row-major float64 payload).
class BlobWriter {
 public:
  BlobWriter(const std::string& path, const char magic[8]) : out_(path, std::ios::binary) {
    if (!out_) throw io_error("cannot open " + path);
    out_.write(magic, 8);
  }
  void u32(std::uint32_t v) { raw(&v, 4); }
  void u64(std::uint64_t v) { raw(&v, 8); }
  void f64(double v) { raw(&v, 8); }
  void str(const std::string& s) {
    u32(std::uint32_t(s.size()));
    raw(s.data(), s.size());
  }
  template <typename S>
  void tensor(const MatX<S>& m) {
    u32(std::uint32_t(m.rows()));
    u32(std::uint32_t(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) f64(double(m(r, c)));
  }
  void close() {
    out_.flush();
    if (!out_) throw io_error("checkpoint write failed");
    out_.close();
  }

 private:
  void raw(const void* p, std::size_t n) {
    out_.write(static_cast<const char*>(p), std::streamsize(n));
  }
  std::ofstream out_;
};

class BlobReader {
 public:
  BlobReader(const std::string& path, const char magic[8]) : in_(path, std::ios::binary) {
    if (!in_) throw io_error("cannot open " + path);
    char got[8];
    raw(got, 8);
    for (int i = 0; i < 8; ++i)
      if (got[i] != magic[i]) throw io_error("bad checkpoint magic in " + path);
  }
  std::uint32_t u32() {
    std::uint32_t v;
    raw(&v, 4);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v;
    raw(&v, 8);
    return v;
  }
  double f64() {
    double v;
    raw(&v, 8);
    return v;
  }
  std::string str() {
    std::string s(u32(), '\0');
    raw(s.data(), s.size());
    return s;
  }
  template <typename S>
  MatX<S> tensor() {
    std::uint32_t rows = u32(), cols = u32();
    MatX<S> m(rows, cols);
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = S(f64());
    return m;
  }

 private:
  void raw(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), std::streamsize(n));
    if (!in_) throw io_error("truncated checkpoint");
  }
  std::ifstream in_;
};

}  // namespace semsurf
