#include "edgegs/image.hpp"

#include "edgegs/types.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>

namespace edgegs {

GrayImage::GrayImage(int width, int height, double fill)
    : width_(width), height_(height) {
    if (width < 0 || height < 0) {
        throw DataError("image dimensions must be non-negative");
    }
    pixels_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
}

unsigned char quantize_u8(double v) {
    const double c = std::clamp(v, 0.0, 1.0);
    return static_cast<unsigned char>(std::lround(c * 255.0));
}

namespace {

std::string lower_extension(const std::filesystem::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext;
}

// Reads the next whitespace-separated token of a PGM header, skipping comments.
std::string next_header_token(std::istream& in) {
    std::string token;
    char c = 0;
    while (in.get(c)) {
        if (c == '#') {
            std::string discard;
            std::getline(in, discard);
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!token.empty()) {
                break;
            }
            continue;
        }
        token.push_back(c);
    }
    return token;
}

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f != nullptr) {
            std::fclose(f);
        }
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

} // namespace

void write_pgm(const std::filesystem::path& path, const GrayImage& image) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot open " + path.string() + " for writing");
    }
    out << "P5\n" << image.width() << ' ' << image.height() << "\n255\n";
    std::string row(static_cast<std::size_t>(image.width()), '\0');
    for (int y = 0; y < image.height(); ++y) {
        for (int x = 0; x < image.width(); ++x) {
            row[static_cast<std::size_t>(x)] = static_cast<char>(quantize_u8(image(x, y)));
        }
        out.write(row.data(), static_cast<std::streamsize>(row.size()));
    }
    if (!out) {
        throw DataError("failed writing " + path.string());
    }
}

GrayImage read_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open image " + path.string());
    }
    const std::string magic = next_header_token(in);
    if (magic != "P5" && magic != "P2") {
        throw DataError(path.string() + ": not a PGM file (magic '" + magic + "')");
    }
    int width = 0;
    int height = 0;
    int maxval = 0;
    try {
        width = std::stoi(next_header_token(in));
        height = std::stoi(next_header_token(in));
        maxval = std::stoi(next_header_token(in));
    } catch (const std::exception&) {
        throw DataError(path.string() + ": malformed PGM header");
    }
    if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 65535) {
        throw DataError(path.string() + ": invalid PGM header values");
    }
    GrayImage image(width, height);
    const double denom = static_cast<double>(maxval);
    if (magic == "P2") {
        for (std::size_t i = 0; i < image.size(); ++i) {
            int v = 0;
            if (!(in >> v)) {
                throw DataError(path.string() + ": truncated ASCII PGM data");
            }
            image[i] = static_cast<double>(v) / denom;
        }
        return image;
    }
    const std::size_t bytes_per = maxval > 255 ? 2 : 1;
    std::vector<unsigned char> raw(image.size() * bytes_per);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (in.gcount() != static_cast<std::streamsize>(raw.size())) {
        throw DataError(path.string() + ": truncated PGM data");
    }
    for (std::size_t i = 0; i < image.size(); ++i) {
        const unsigned v = bytes_per == 1
                               ? raw[i]
                               : (static_cast<unsigned>(raw[2 * i]) << 8) | raw[2 * i + 1];
        image[i] = static_cast<double>(v) / denom;
    }
    return image;
}

void write_png(const std::filesystem::path& path, const GrayImage& image) {
    FilePtr fp(std::fopen(path.string().c_str(), "wb"));
    if (!fp) {
        throw DataError("cannot open " + path.string() + " for writing");
    }
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (png == nullptr || info == nullptr) {
        png_destroy_write_struct(&png, &info);
        throw DataError("libpng initialization failed");
    }
    std::vector<unsigned char> row(static_cast<std::size_t>(image.width()));
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw DataError("failed writing PNG " + path.string());
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(image.width()),
                 static_cast<png_uint_32>(image.height()), 8, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < image.height(); ++y) {
        for (int x = 0; x < image.width(); ++x) {
            row[static_cast<std::size_t>(x)] = quantize_u8(image(x, y));
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

GrayImage read_png(const std::filesystem::path& path) {
    FilePtr fp(std::fopen(path.string().c_str(), "rb"));
    if (!fp) {
        throw DataError("cannot open image " + path.string());
    }
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (png == nullptr || info == nullptr) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DataError("libpng initialization failed");
    }
    GrayImage image;
    std::vector<unsigned char> row;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DataError(path.string() + ": invalid PNG data");
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);
    const auto color = png_get_color_type(png, info);
    if (png_get_bit_depth(png, info) == 16) {
        png_set_strip_16(png);
    }
    if (color == PNG_COLOR_TYPE_PALETTE) {
        png_set_palette_to_rgb(png);
    }
    if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8) {
        png_set_expand_gray_1_2_4_to_8(png);
    }
    if (color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGB_ALPHA ||
        color == PNG_COLOR_TYPE_PALETTE) {
        png_set_rgb_to_gray_fixed(png, 1, -1, -1);
    }
    if (color & PNG_COLOR_MASK_ALPHA) {
        png_set_strip_alpha(png);
    }
    png_read_update_info(png, info);
    const int width = static_cast<int>(png_get_image_width(png, info));
    const int height = static_cast<int>(png_get_image_height(png, info));
    const std::size_t rowbytes = png_get_rowbytes(png, info);
    image = GrayImage(width, height);
    row.resize(rowbytes);
    const std::size_t channels = rowbytes / static_cast<std::size_t>(width);
    for (int y = 0; y < height; ++y) {
        png_read_row(png, row.data(), nullptr);
        for (int x = 0; x < width; ++x) {
            image(x, y) = row[static_cast<std::size_t>(x) * channels] / 255.0;
        }
    }
    png_destroy_read_struct(&png, &info, nullptr);
    return image;
}

GrayImage read_image(const std::filesystem::path& path) {
    const std::string ext = lower_extension(path);
    if (ext == ".pgm") {
        return read_pgm(path);
    }
    if (ext == ".png") {
        return read_png(path);
    }
    throw DataError(path.string() + ": unsupported image extension '" + ext + "'");
}

void write_image(const std::filesystem::path& path, const GrayImage& image) {
    const std::string ext = lower_extension(path);
    if (ext == ".png") {
        write_png(path, image);
    } else if (ext == ".pgm") {
        write_pgm(path, image);
    } else {
        throw DataError(path.string() + ": unsupported image extension '" + ext + "'");
    }
}

} // namespace edgegs
