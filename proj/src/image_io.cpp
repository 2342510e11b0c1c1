#include <png.h>

#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "lesioncam/image.hpp"

namespace lesioncam {

std::size_t BinaryMask::count() const {
    std::size_t n = 0;
    for (auto v : px) n += v ? 1 : 0;
    return n;
}

namespace {

bool has_suffix(const std::string& s, const std::string& suf) {
    return s.size() >= suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
}

// Skips whitespace and '#' comment lines between PNM header tokens.
int next_pnm_int(std::istream& in, const std::string& path) {
    int ch = in.get();
    while (ch != EOF) {
        if (ch == '#') {
            while (ch != EOF && ch != '\n') ch = in.get();
        } else if (!std::isspace(ch)) {
            break;
        }
        ch = in.get();
    }
    if (ch == EOF) throw FormatError("'" + path + "': truncated PNM header");
    int value = 0;
    bool any = false;
    while (ch != EOF && std::isdigit(ch)) {
        value = value * 10 + (ch - '0');
        any = true;
        ch = in.get();
    }
    if (!any) throw FormatError("'" + path + "': malformed PNM header");
    return value;
}

RgbImage load_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open '" + path + "'");
    char m0 = static_cast<char>(in.get()), m1 = static_cast<char>(in.get());
    if (m0 != 'P' || m1 != '6') throw FormatError("'" + path + "': not a P6 PPM file");
    const int w = next_pnm_int(in, path);
    const int h = next_pnm_int(in, path);
    const int maxval = next_pnm_int(in, path);
    if (maxval != 255) throw FormatError("'" + path + "': only maxval 255 supported");
    RgbImage img(w, h);
    in.read(reinterpret_cast<char*>(img.px.data()), static_cast<std::streamsize>(img.px.size()));
    if (in.gcount() != static_cast<std::streamsize>(img.px.size()))
        throw FormatError("'" + path + "': truncated PPM pixel data");
    return img;
}

void save_ppm(const RgbImage& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot open '" + path + "' for writing");
    out << "P6\n" << img.w << " " << img.h << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.px.data()),
              static_cast<std::streamsize>(img.px.size()));
    if (!out) throw FormatError("failed to write '" + path + "'");
}

RgbImage load_png(const std::string& path) {
    FILE* fp = std::fopen(path.c_str(), "rb");
    if (!fp) throw FormatError("cannot open '" + path + "'");
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        if (png) png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        throw FormatError("libpng init failed for '" + path + "'");
    }
    RgbImage img;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        throw FormatError("'" + path + "': corrupt or unsupported PNG");
    }
    png_init_io(png, fp);
    png_read_info(png, info);
    // Normalize everything to 8-bit RGB.
    png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_set_palette_to_rgb(png);
    png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY ||
        png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY_ALPHA)
        png_set_gray_to_rgb(png);
    png_read_update_info(png, info);
    img = RgbImage(static_cast<int>(png_get_image_width(png, info)),
                   static_cast<int>(png_get_image_height(png, info)));
    rows.resize(img.h);
    for (int y = 0; y < img.h; ++y)
        rows[y] = img.px.data() + static_cast<std::size_t>(y) * img.w * 3;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    return img;
}

void save_png(const RgbImage& img, const std::string& path) {
    FILE* fp = std::fopen(path.c_str(), "wb");
    if (!fp) throw FormatError("cannot open '" + path + "' for writing");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        if (png) png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        throw FormatError("libpng init failed for '" + path + "'");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        throw FormatError("failed to write PNG '" + path + "'");
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, img.w, img.h, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < img.h; ++y)
        png_write_row(png, const_cast<png_bytep>(
                               img.px.data() + static_cast<std::size_t>(y) * img.w * 3));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
}

}  // namespace

RgbImage decode_image(const std::string& path) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw FormatError("cannot open '" + path + "'");
    char magic[2] = {0, 0};
    probe.read(magic, 2);
    probe.close();
    if (magic[0] == 'P' && magic[1] == '6') return load_ppm(path);
    if (magic[0] == 'P' && magic[1] == '5') {
        GrayImage g = load_pgm(path);
        RgbImage img(g.w, g.h);
        for (int y = 0; y < g.h; ++y)
            for (int x = 0; x < g.w; ++x)
                img.at(x, y, 0) = img.at(x, y, 1) = img.at(x, y, 2) = g.at(x, y);
        return img;
    }
    if (static_cast<unsigned char>(magic[0]) == 0x89 && magic[1] == 'P') return load_png(path);
    throw FormatError("'" + path + "': unsupported image format (expect PNG, P6 PPM or P5 PGM)");
}

void encode_image(const RgbImage& img, const std::string& path) {
    if (has_suffix(path, ".ppm")) {
        save_ppm(img, path);
    } else if (has_suffix(path, ".png")) {
        save_png(img, path);
    } else if (has_suffix(path, ".pgm")) {
        save_pgm(to_gray(img), path);
    } else {
        throw FormatError("'" + path + "': unknown output extension (use .png, .ppm or .pgm)");
    }
}

GrayImage load_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open '" + path + "'");
    char m0 = static_cast<char>(in.get()), m1 = static_cast<char>(in.get());
    if (m0 != 'P' || m1 != '5') throw FormatError("'" + path + "': not a P5 PGM file");
    const int w = next_pnm_int(in, path);
    const int h = next_pnm_int(in, path);
    const int maxval = next_pnm_int(in, path);
    if (maxval != 255) throw FormatError("'" + path + "': only maxval 255 supported");
    GrayImage img(w, h);
    in.read(reinterpret_cast<char*>(img.px.data()), static_cast<std::streamsize>(img.px.size()));
    if (in.gcount() != static_cast<std::streamsize>(img.px.size()))
        throw FormatError("'" + path + "': truncated PGM pixel data");
    return img;
}

void save_pgm(const GrayImage& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot open '" + path + "' for writing");
    out << "P5\n" << img.w << " " << img.h << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.px.data()),
              static_cast<std::streamsize>(img.px.size()));
    if (!out) throw FormatError("failed to write '" + path + "'");
}

GrayImage to_gray(const RgbImage& img) {
    GrayImage g(img.w, img.h);
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x) {
            const double l = 0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) +
                             0.114 * img.at(x, y, 2);
            g.at(x, y) = static_cast<std::uint8_t>(std::lround(l));
        }
    return g;
}

Tensor4 to_tensor(const RgbImage& img) {
    Tensor4 t(1, 3, img.h, img.w);
    for (int ch = 0; ch < 3; ++ch)
        for (int y = 0; y < img.h; ++y)
            for (int x = 0; x < img.w; ++x)
                t.at(0, ch, y, x) = img.at(x, y, ch) / 255.0f;
    return t;
}

GrayImage rgb_channel(const RgbImage& img, int ch) {
    GrayImage g(img.w, img.h);
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x) g.at(x, y) = img.at(x, y, ch);
    return g;
}

GrayImage mask_to_gray(const BinaryMask& mask) {
    GrayImage g(mask.w, mask.h);
    for (std::size_t i = 0; i < mask.px.size(); ++i) g.px[i] = mask.px[i] ? 255 : 0;
    return g;
}

GrayImage heatmap_to_gray(const FloatGrid& grid) {
    GrayImage g(grid.w, grid.h);
    for (std::size_t i = 0; i < grid.v.size(); ++i)
        g.px[i] = static_cast<std::uint8_t>(std::lround(255.0f * grid.v[i]));
    return g;
}

RgbImage resize_bilinear(const RgbImage& img, int out_w, int out_h) {
    if (out_w < 1 || out_h < 1) throw UsageError("resize_bilinear: target size must be >= 1");
    if (out_w == img.w && out_h == img.h) return img;
    RgbImage out(out_w, out_h);
    const double sx = out_w > 1 ? static_cast<double>(img.w - 1) / (out_w - 1) : 0.0;
    const double sy = out_h > 1 ? static_cast<double>(img.h - 1) / (out_h - 1) : 0.0;
    for (int y = 0; y < out_h; ++y) {
        const double fy = y * sy;
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, img.h - 1);
        const double wy = fy - y0;
        for (int x = 0; x < out_w; ++x) {
            const double fx = x * sx;
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, img.w - 1);
            const double wx = fx - x0;
            for (int ch = 0; ch < 3; ++ch) {
                const double top = (1 - wx) * img.at(x0, y0, ch) + wx * img.at(x1, y0, ch);
                const double bot = (1 - wx) * img.at(x0, y1, ch) + wx * img.at(x1, y1, ch);
                out.at(x, y, ch) =
                    static_cast<std::uint8_t>(std::lround((1 - wy) * top + wy * bot));
            }
        }
    }
    return out;
}

}  // namespace lesioncam
