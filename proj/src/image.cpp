#include "semsurf/image.hpp"

#include <fstream>

namespace semsurf {

namespace {

void expect(bool ok, const std::string& msg) {
  if (!ok) throw io_error(msg);
}

std::string next_token(std::istream& in) {
  // PNM tokens may be separated by whitespace and '#' comments.
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (!std::isspace(c)) {
      tok.push_back(char(c));
      while ((c = in.peek()) != EOF && !std::isspace(c)) tok.push_back(char(in.get()));
      return tok;
    }
  }
  throw io_error("truncated PNM header");
}

}  // namespace

void write_ppm(const std::string& path, const Image<Rgb8>& img) {
  std::ofstream out(path, std::ios::binary);
  expect(bool(out), "cannot open " + path);
  out << "P6\n" << img.width << " " << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.data.data()), std::streamsize(img.pixels() * 3));
  expect(bool(out), "write failed: " + path);
}

Image<Rgb8> read_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  expect(bool(in), "cannot open " + path);
  expect(next_token(in) == "P6", "not a P6 PPM: " + path);
  int w = std::stoi(next_token(in));
  int h = std::stoi(next_token(in));
  int maxval = std::stoi(next_token(in));
  expect(w > 0 && h > 0 && maxval == 255, "unsupported PPM: " + path);
  in.get();  // single whitespace after maxval
  Image<Rgb8> img(w, h);
  in.read(reinterpret_cast<char*>(img.data.data()), std::streamsize(img.pixels() * 3));
  expect(bool(in), "truncated PPM: " + path);
  return img;
}

void write_pgm(const std::string& path, const Image<std::uint8_t>& img) {
  std::ofstream out(path, std::ios::binary);
  expect(bool(out), "cannot open " + path);
  out << "P5\n" << img.width << " " << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.data.data()), std::streamsize(img.pixels()));
  expect(bool(out), "write failed: " + path);
}

Image<std::uint8_t> read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  expect(bool(in), "cannot open " + path);
  expect(next_token(in) == "P5", "not a P5 PGM: " + path);
  int w = std::stoi(next_token(in));
  int h = std::stoi(next_token(in));
  int maxval = std::stoi(next_token(in));
  expect(w > 0 && h > 0 && maxval == 255, "unsupported PGM: " + path);
  in.get();
  Image<std::uint8_t> img(w, h);
  in.read(reinterpret_cast<char*>(img.data.data()), std::streamsize(img.pixels()));
  expect(bool(in), "truncated PGM: " + path);
  return img;
}

void write_normal_map(const std::string& path, const Image<Normal3f>& normals,
                      const Image<std::uint8_t>& validity) {
  expect(normals.width == validity.width && normals.height == validity.height,
         "normal/validity size mismatch");
  std::ofstream out(path, std::ios::binary);
  expect(bool(out), "cannot open " + path);
  for (std::size_t i = 0; i < normals.pixels(); ++i) {
    out.write(reinterpret_cast<const char*>(normals.data[i].data()), 12);
    out.write(reinterpret_cast<const char*>(&validity.data[i]), 1);
  }
  expect(bool(out), "write failed: " + path);
}

void read_normal_map(const std::string& path, int width, int height, Image<Normal3f>& normals,
                     Image<std::uint8_t>& validity) {
  std::ifstream in(path, std::ios::binary);
  expect(bool(in), "cannot open " + path);
  normals = Image<Normal3f>(width, height);
  validity = Image<std::uint8_t>(width, height);
  for (std::size_t i = 0; i < normals.pixels(); ++i) {
    in.read(reinterpret_cast<char*>(normals.data[i].data()), 12);
    in.read(reinterpret_cast<char*>(&validity.data[i]), 1);
  }
  expect(bool(in), "truncated normal map: " + path);
}

void write_float_map(const std::string& path, const Image<float>& img) {
  std::ofstream out(path, std::ios::binary);
  expect(bool(out), "cannot open " + path);
  out.write(reinterpret_cast<const char*>(img.data.data()), std::streamsize(img.pixels() * 4));
  expect(bool(out), "write failed: " + path);
}

Image<float> read_float_map(const std::string& path, int width, int height) {
  std::ifstream in(path, std::ios::binary);
  expect(bool(in), "cannot open " + path);
  Image<float> img(width, height);
  in.read(reinterpret_cast<char*>(img.data.data()), std::streamsize(img.pixels() * 4));
  expect(bool(in), "truncated float map: " + path);
  return img;
}

}  // namespace semsurf
