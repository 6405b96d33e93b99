#include "mdda/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cfenv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

namespace mdda {

namespace {

std::vector<unsigned char> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImageIoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

ImageTensor from_bytes(int height, int width, int channels, const unsigned char* bytes) {
  std::vector<double> data(static_cast<std::size_t>(height) * width * channels);
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = bytes[i] / 255.0;
  return ImageTensor(height, width, channels, std::move(data));
}

std::vector<unsigned char> to_bytes(const ImageTensor& img) {
  std::vector<unsigned char> bytes(img.size());
  const auto data = img.data();
  for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = quantize_sample(data[i]);
  return bytes;
}

ImageTensor decode_png(const std::vector<unsigned char>& buf, const std::string& name) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, buf.data(), buf.size())) {
    throw ImageIoError("bad PNG " + name + ": " + image.message);
  }
  if (image.format & PNG_FORMAT_FLAG_LINEAR) {
    png_image_free(&image);
    throw ImageIoError("unsupported PNG bit depth in " + name);
  }
  const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  std::vector<unsigned char> pixels(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, pixels.data(), 0, nullptr)) {
    throw ImageIoError("bad PNG " + name + ": " + image.message);
  }
  return from_bytes(static_cast<int>(image.height), static_cast<int>(image.width),
                    color ? 3 : 1, pixels.data());
}

// Skips whitespace and '#' comments in a PNM header.
std::size_t skip_pnm_space(const std::vector<unsigned char>& buf, std::size_t pos) {
  while (pos < buf.size()) {
    if (buf[pos] == '#') {
      while (pos < buf.size() && buf[pos] != '\n') ++pos;
    } else if (std::isspace(buf[pos])) {
      ++pos;
    } else {
      break;
    }
  }
  return pos;
}

int read_pnm_int(const std::vector<unsigned char>& buf, std::size_t& pos, const std::string& name) {
  pos = skip_pnm_space(buf, pos);
  long value = 0;
  const std::size_t start = pos;
  while (pos < buf.size() && std::isdigit(buf[pos])) {
    value = value * 10 + (buf[pos] - '0');
    if (value > 1 << 24) throw ImageIoError("PNM header value too large in " + name);
    ++pos;
  }
  if (pos == start) throw ImageIoError("malformed PNM header in " + name);
  return static_cast<int>(value);
}

ImageTensor decode_pnm(const std::vector<unsigned char>& buf, const std::string& name) {
  const int channels = buf[1] == '5' ? 1 : 3;
  std::size_t pos = 2;
  const int width = read_pnm_int(buf, pos, name);
  const int height = read_pnm_int(buf, pos, name);
  const int maxval = read_pnm_int(buf, pos, name);
  if (maxval != 255) throw ImageIoError("only maxval 255 is supported: " + name);
  if (width <= 0 || height <= 0) throw ImageIoError("empty PNM image: " + name);
  if (pos >= buf.size() || !std::isspace(buf[pos])) {
    throw ImageIoError("malformed PNM header in " + name);
  }
  ++pos;
  const std::size_t need = static_cast<std::size_t>(width) * height * channels;
  if (buf.size() - pos < need) throw ImageIoError("truncated PNM data in " + name);
  return from_bytes(height, width, channels, buf.data() + pos);
}

std::string lower_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

}  // namespace

unsigned char quantize_sample(double value) {
  const double scaled = std::clamp(value, 0.0, 1.0) * 255.0;
  // nearbyint honours the default FE_TONEAREST mode: ties go to even.
  return static_cast<unsigned char>(std::nearbyint(scaled));
}

ImageTensor load_image(const std::filesystem::path& path) {
  const auto buf = read_all(path);
  const std::string name = path.string();
  static constexpr unsigned char kPngMagic[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (buf.size() >= 8 && std::equal(buf.begin(), buf.begin() + 8, kPngMagic)) {
    return decode_png(buf, name);
  }
  if (buf.size() >= 2 && buf[0] == 'P' && (buf[1] == '5' || buf[1] == '6')) {
    return decode_pnm(buf, name);
  }
  throw ImageIoError("unsupported image format: " + name);
}

void save_image(const ImageTensor& img, const std::filesystem::path& path) {
  const std::string ext = lower_extension(path);
  const auto bytes = to_bytes(img);
  if (ext == ".png") {
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(img.width());
    image.height = static_cast<png_uint_32>(img.height());
    image.format = img.channels() == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    if (!png_image_write_to_file(&image, path.string().c_str(), 0, bytes.data(), 0, nullptr)) {
      throw ImageIoError("cannot write " + path.string() + ": " + image.message);
    }
    return;
  }
  if (ext != ".pgm" && ext != ".ppm" && ext != ".pnm") {
    throw ImageIoError("unsupported output format: " + path.string());
  }
  if (ext == ".pgm" && img.channels() != 1) {
    throw ImageIoError("PGM output requires a single-channel image");
  }
  if (ext == ".ppm" && img.channels() != 3) {
    throw ImageIoError("PPM output requires a three-channel image");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ImageIoError("cannot open " + path.string() + " for writing");
  out << (img.channels() == 1 ? "P5" : "P6") << '\n'
      << img.width() << ' ' << img.height() << "\n255\n";
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ImageIoError("write failed: " + path.string());
}

}  // namespace mdda
