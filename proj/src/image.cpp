#include "roadcal/image.hpp"

#include "roadcal/geometry.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <string>

namespace roadcal {

std::size_t count_nonzero(const BinaryImage& img) {
  return static_cast<std::size_t>(
      std::count_if(img.data().begin(), img.data().end(), [](std::uint8_t v) { return v != 0; }));
}

namespace {

struct PnmHeader {
  std::string magic;
  int width = 0;
  int height = 0;
  int maxval = 0;
};

int read_header_int(std::istream& in) {
  // skips whitespace and '#' comments
  for (;;) {
    const int c = in.peek();
    if (c == EOF) throw CalibrationError("truncated netpbm header");
    if (std::isspace(c)) {
      in.get();
    } else if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else {
      break;
    }
  }
  int value = 0;
  if (!(in >> value)) throw CalibrationError("malformed netpbm header");
  return value;
}

PnmHeader read_header(std::istream& in, const std::filesystem::path& path) {
  PnmHeader h;
  char m[2] = {0, 0};
  in.read(m, 2);
  if (!in) throw CalibrationError("cannot read " + path.string());
  h.magic = std::string(m, 2);
  h.width = read_header_int(in);
  h.height = read_header_int(in);
  h.maxval = read_header_int(in);
  in.get();  // single whitespace before raster
  if (h.width <= 0 || h.height <= 0 || h.maxval <= 0 || h.maxval > 65535)
    throw CalibrationError("invalid netpbm header in " + path.string());
  return h;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CalibrationError("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CalibrationError("cannot write " + path.string());
  return out;
}

}  // namespace

GrayImage read_pgm8(const std::filesystem::path& path) {
  auto in = open_in(path);
  const PnmHeader h = read_header(in, path);
  if (h.magic != "P5" || h.maxval > 255)
    throw CalibrationError(path.string() + " is not an 8-bit binary PGM");
  GrayImage img(h.width, h.height);
  in.read(reinterpret_cast<char*>(img.data().data()), static_cast<std::streamsize>(img.size()));
  if (!in) throw CalibrationError("truncated raster in " + path.string());
  return img;
}

Image<std::uint16_t> read_pgm16(const std::filesystem::path& path) {
  auto in = open_in(path);
  const PnmHeader h = read_header(in, path);
  if (h.magic != "P5") throw CalibrationError(path.string() + " is not a binary PGM");
  Image<std::uint16_t> img(h.width, h.height);
  if (h.maxval < 256) {
    std::vector<std::uint8_t> raw(img.size());
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!in) throw CalibrationError("truncated raster in " + path.string());
    std::copy(raw.begin(), raw.end(), img.data().begin());
    return img;
  }
  std::vector<std::uint8_t> raw(img.size() * 2);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!in) throw CalibrationError("truncated raster in " + path.string());
  for (std::size_t i = 0; i < img.size(); ++i)
    img.data()[i] = static_cast<std::uint16_t>((raw[2 * i] << 8) | raw[2 * i + 1]);
  return img;
}

void write_pgm(const std::filesystem::path& path, const GrayImage& img) {
  auto out = open_out(path);
  out << "P5\n" << img.width() << ' ' << img.height() << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.data().data()),
            static_cast<std::streamsize>(img.size()));
}

void write_pgm(const std::filesystem::path& path, const Image<std::uint16_t>& img) {
  auto out = open_out(path);
  out << "P5\n" << img.width() << ' ' << img.height() << "\n65535\n";
  std::vector<std::uint8_t> raw(img.size() * 2);
  for (std::size_t i = 0; i < img.size(); ++i) {
    raw[2 * i] = static_cast<std::uint8_t>(img.data()[i] >> 8);
    raw[2 * i + 1] = static_cast<std::uint8_t>(img.data()[i] & 0xff);
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
}

void write_ppm(const std::filesystem::path& path, const RgbImage& img) {
  auto out = open_out(path);
  out << "P6\n" << img.width() << ' ' << img.height() << "\n255\n";
  for (const Rgb& px : img.data()) out.write(reinterpret_cast<const char*>(px.data()), 3);
}

RgbImage read_ppm(const std::filesystem::path& path) {
  auto in = open_in(path);
  const PnmHeader h = read_header(in, path);
  if (h.magic != "P6" || h.maxval > 255)
    throw CalibrationError(path.string() + " is not an 8-bit binary PPM");
  RgbImage img(h.width, h.height);
  for (Rgb& px : img.data()) in.read(reinterpret_cast<char*>(px.data()), 3);
  if (!in) throw CalibrationError("truncated raster in " + path.string());
  return img;
}

GrayImage mask_to_gray(const BinaryImage& mask) {
  GrayImage out(mask.width(), mask.height());
  std::transform(mask.data().begin(), mask.data().end(), out.data().begin(),
                 [](std::uint8_t m) { return static_cast<std::uint8_t>(m ? 255 : 0); });
  return out;
}

}  // namespace roadcal
