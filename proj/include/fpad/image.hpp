#ifndef FPAD_IMAGE_HPP
#define FPAD_IMAGE_HPP

#include <Eigen/Dense>
#include <filesystem>

namespace fpad {

// Grayscale image, intensities in [0,1]. Row index = y, column index = x.
using GrayImage = Eigen::ArrayXXf;

namespace io {

// 8-bit grayscale PNG. Intensities are quantized as round(255*x) on write
// and mapped back as v/255 on read.
GrayImage read_png_gray(const std::filesystem::path& path);
void write_png_gray(const std::filesystem::path& path, const GrayImage& img);

}  // namespace io

}  // namespace fpad

#endif  // FPAD_IMAGE_HPP
