#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

namespace edgegs {

// Row-major single-channel image with values nominally in [0,1].
class GrayImage {
public:
    GrayImage() = default;
    GrayImage(int width, int height, double fill = 0.0);

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return pixels_.size(); }
    bool empty() const { return pixels_.empty(); }

    double& operator()(int x, int y) { return pixels_[index(x, y)]; }
    double operator()(int x, int y) const { return pixels_[index(x, y)]; }
    double& operator[](std::size_t i) { return pixels_[i]; }
    double operator[](std::size_t i) const { return pixels_[i]; }

    std::size_t index(int x, int y) const {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
               static_cast<std::size_t>(x);
    }

    std::vector<double>& data() { return pixels_; }
    const std::vector<double>& data() const { return pixels_; }

    bool operator==(const GrayImage&) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<double> pixels_;
};

// 8-bit quantization used by every image writer: round(clamp(v,0,1) * 255).
unsigned char quantize_u8(double v);

// Binary PGM (P5, maxval 255) and 8-bit grayscale PNG. Readers accept P2/P5
// PGM with any maxval, and PNG of any bit depth/color type (converted to gray).
void write_pgm(const std::filesystem::path& path, const GrayImage& image);
void write_png(const std::filesystem::path& path, const GrayImage& image);
GrayImage read_pgm(const std::filesystem::path& path);
GrayImage read_png(const std::filesystem::path& path);

// Dispatches on the file extension (.pgm or .png).
GrayImage read_image(const std::filesystem::path& path);
void write_image(const std::filesystem::path& path, const GrayImage& image);

} // namespace edgegs
