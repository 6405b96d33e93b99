#pragma once

#include <filesystem>
#include <stdexcept>

#include "mdda/image.hpp"

namespace mdda {

class ImageIoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Reads an 8-bit PNG (gray or RGB) or binary PGM/PPM (maxval 255).
/// Samples are divided by 255. Format is detected from the file contents.
ImageTensor load_image(const std::filesystem::path& path);

/// Writes an 8-bit image; format follows the extension (.png, .pgm, .ppm).
/// Samples are clamped to [0,1], scaled by 255 and rounded half-to-even.
void save_image(const ImageTensor& img, const std::filesystem::path& path);

/// The 8-bit code a sample is written as.
unsigned char quantize_sample(double value);

}  // namespace mdda
