#include "splat6d/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include <png.h>

#include "splat6d/error.hpp"

namespace splat6d {

Image composite_over(const Image& rgba, const Vec3& background) {
    if (rgba.channels != 4) throw Error(ErrorCode::ShapeMismatch, "composite expects an RGBA image");
    Image out(rgba.width, rgba.height, 3);
    for (std::size_t p = 0; p < rgba.pixel_count(); ++p) {
        const double a = rgba.data[4 * p + 3];
        for (int c = 0; c < 3; ++c) out.data[3 * p + c] = rgba.data[4 * p + c] + (1.0 - a) * background[c];
    }
    return out;
}

std::uint8_t to_byte(double x) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(x, 0.0, 1.0) * 255.0));
}

namespace {

// libpng reports errors by longjmp. Each helper below owns its setjmp frame
// and touches only trivially-destructible state after it.

void append_bytes(png_structp png, png_bytep data, png_size_t len) {
    auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
    out->insert(out->end(), data, data + len);
}

struct ReadCursor {
    const std::uint8_t* data = nullptr;
    std::size_t size = 0;
    std::size_t pos = 0;
};

void read_bytes(png_structp png, png_bytep data, png_size_t len) {
    auto* cur = static_cast<ReadCursor*>(png_get_io_ptr(png));
    if (cur->pos + len > cur->size) png_error(png, "truncated PNG");
    std::memcpy(data, cur->data + cur->pos, len);
    cur->pos += len;
}

bool write_rgba(png_structp png, png_infop info, std::vector<std::uint8_t>* out,
                const std::uint8_t* rgba, int w, int h) {
    if (setjmp(png_jmpbuf(png))) return false;
    png_set_write_fn(png, out, append_bytes, nullptr);
    png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8,
                 PNG_COLOR_TYPE_RGBA, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < h; ++y) {
        png_write_row(png, rgba + static_cast<std::size_t>(y) * static_cast<std::size_t>(w) * 4);
    }
    png_write_end(png, nullptr);
    return true;
}

bool read_header(png_structp png, png_infop info, ReadCursor* cursor, int* w, int* h) {
    if (setjmp(png_jmpbuf(png))) return false;
    png_set_read_fn(png, cursor, read_bytes);
    png_read_info(png, info);
    png_set_expand(png);
    png_set_strip_16(png);
    png_set_gray_to_rgb(png);
    png_set_add_alpha(png, 0xFF, PNG_FILLER_AFTER);
    png_read_update_info(png, info);
    *w = static_cast<int>(png_get_image_width(png, info));
    *h = static_cast<int>(png_get_image_height(png, info));
    return true;
}

bool read_rows(png_structp png, png_bytep* rows) {
    if (setjmp(png_jmpbuf(png))) return false;
    png_read_image(png, rows);
    return true;
}

}  // namespace

std::vector<std::uint8_t> encode_png(const Image& img) {
    if (img.channels != 3 && img.channels != 4) {
        throw Error(ErrorCode::ShapeMismatch, "PNG export needs 3 or 4 channels");
    }
    std::vector<std::uint8_t> rgba(img.pixel_count() * 4);
    for (std::size_t p = 0; p < img.pixel_count(); ++p) {
        for (int c = 0; c < 3; ++c) rgba[4 * p + c] = to_byte(img.data[p * img.channels + c]);
        rgba[4 * p + 3] = img.channels == 4 ? to_byte(img.data[p * 4 + 3]) : 255;
    }
    std::vector<std::uint8_t> out;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    const bool ok = write_rgba(png, info, &out, rgba.data(), img.width, img.height);
    png_destroy_write_struct(&png, &info);
    if (!ok) throw Error(ErrorCode::Io, "PNG encoding failed");
    return out;
}

Image decode_png(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) {
        throw Error(ErrorCode::MalformedFile, "not a PNG file");
    }
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    ReadCursor cursor{bytes.data(), bytes.size(), 0};
    int w = 0;
    int h = 0;
    if (!read_header(png, info, &cursor, &w, &h)) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw Error(ErrorCode::MalformedFile, "bad PNG header");
    }
    std::vector<std::uint8_t> rgba(static_cast<std::size_t>(w) * h * 4);
    std::vector<png_bytep> rows(static_cast<std::size_t>(h));
    for (int y = 0; y < h; ++y) rows[static_cast<std::size_t>(y)] = rgba.data() + static_cast<std::size_t>(y) * w * 4;
    const bool ok = read_rows(png, rows.data());
    png_destroy_read_struct(&png, &info, nullptr);
    if (!ok) throw Error(ErrorCode::MalformedFile, "corrupt PNG data");
    Image img(w, h, 3);
    for (std::size_t p = 0; p < img.pixel_count(); ++p)
        for (int c = 0; c < 3; ++c) img.data[3 * p + c] = rgba[4 * p + c] / 255.0;
    return img;
}

void write_png(const Image& img, const std::filesystem::path& path) {
    const auto bytes = encode_png(img);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::Io, "cannot write " + path.string());
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw Error(ErrorCode::Io, "write failed on " + path.string());
}

Image read_png(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::Io, "cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return decode_png(bytes);
}

}  // namespace splat6d
