#include "genhints/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>

namespace genhints {

RasterImage make_image(int height, int width, std::vector<double> pixels) {
    if (height <= 0 || width <= 0) throw Error("image: dimensions must be positive");
    if (pixels.size() != static_cast<size_t>(height) * width)
        throw Error("image: pixel count " + std::to_string(pixels.size()) + " does not match " +
                    std::to_string(height) + "x" + std::to_string(width));
    for (double& p : pixels) {
        if (!std::isfinite(p)) throw Error("image: non-finite pixel");
        p = std::clamp(p, 0.0, 1.0);
    }
    return RasterImage{height, width, std::move(pixels)};
}

RasterImage flip_horizontal(const RasterImage& img) {
    RasterImage out = img;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) out.at(y, x) = img.at(y, img.width - 1 - x);
    return out;
}

RasterImage translate(const RasterImage& img, int dx, int dy) {
    if (std::abs(dx) >= img.width || std::abs(dy) >= img.height)
        throw Error("translate: shift exceeds image size");
    if (dx == 0 && dy == 0) return img;
    RasterImage out{img.height, img.width, std::vector<double>(img.pixels.size(), 0.0)};
    for (int y = 0; y < img.height; ++y) {
        const int sy = y - dy;
        if (sy < 0 || sy >= img.height) continue;
        for (int x = 0; x < img.width; ++x) {
            const int sx = x - dx;
            if (sx < 0 || sx >= img.width) continue;
            out.at(y, x) = img.at(sy, sx);
        }
    }
    return out;
}

RasterImage rotate(const RasterImage& img, double degrees) {
    if (std::abs(degrees) > 90.0) throw Error("rotate: |degrees| must be <= 90");
    if (degrees == 0.0) return img;
    const double theta = degrees * M_PI / 180.0;
    const double c = std::cos(theta), s = std::sin(theta);
    const double cy = (img.height - 1) * 0.5;
    const double cx = (img.width - 1) * 0.5;
    RasterImage out{img.height, img.width, std::vector<double>(img.pixels.size(), 0.0)};
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            // inverse rotation of the output coordinate
            const double rx = x - cx, ry = y - cy;
            const double sx = cx + c * rx + s * ry;
            const double sy = cy - s * rx + c * ry;
            const int x0 = static_cast<int>(std::floor(sx));
            const int y0 = static_cast<int>(std::floor(sy));
            const double fx = sx - x0, fy = sy - y0;
            double acc = 0.0;
            for (int iy = 0; iy < 2; ++iy)
                for (int ix = 0; ix < 2; ++ix) {
                    const int px = x0 + ix, py = y0 + iy;
                    if (px < 0 || px >= img.width || py < 0 || py >= img.height) continue;
                    const double w = (ix ? fx : 1.0 - fx) * (iy ? fy : 1.0 - fy);
                    acc += w * img.at(py, px);
                }
            out.at(y, x) = std::clamp(acc, 0.0, 1.0);
        }
    return out;
}

void HintTransformSpec::validate() const {
    if (flip_probability < 0.0 || flip_probability > 1.0)
        throw ConfigError("hint spec: flip_probability must be in [0,1]");
    if (max_translate_fraction < 0.0 || max_translate_fraction > 0.5)
        throw ConfigError("hint spec: max_translate_fraction must be in [0,0.5]");
    if (max_rotate_degrees < 0.0 || max_rotate_degrees > 90.0)
        throw ConfigError("hint spec: max_rotate_degrees must be in [0,90]");
}

RasterImage apply_hint_transform(const RasterImage& img, const HintTransformSpec& spec, Rng& rng) {
    spec.validate();
    // fixed draw schedule: flip, dx magnitude, dx sign, dy magnitude, dy sign, rotation
    const bool do_flip = rng.uniform() < spec.flip_probability;
    const double mx = rng.uniform(0.0, spec.max_translate_fraction * img.width);
    const bool sx = rng.uniform() < 0.5;
    const double my = rng.uniform(0.0, spec.max_translate_fraction * img.height);
    const bool sy = rng.uniform() < 0.5;
    const double deg = rng.uniform(-spec.max_rotate_degrees, spec.max_rotate_degrees);

    const int dx = static_cast<int>(std::floor(mx + 0.5)) * (sx ? -1 : 1);
    const int dy = static_cast<int>(std::floor(my + 0.5)) * (sy ? -1 : 1);

    RasterImage out = do_flip ? flip_horizontal(img) : img;
    out = translate(out, dx, dy);
    return rotate(out, deg);
}

namespace {

void put_u32_be(std::ostream& out, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t get_u32_be(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw Error("image record: truncated header");
    return (static_cast<uint32_t>(b[0]) << 24) | (static_cast<uint32_t>(b[1]) << 16) |
           (static_cast<uint32_t>(b[2]) << 8) | static_cast<uint32_t>(b[3]);
}

}  // namespace

void write_image_record(std::ostream& out, const RasterImage& img) {
    put_u32_be(out, static_cast<uint32_t>(img.height));
    put_u32_be(out, static_cast<uint32_t>(img.width));
    for (double p : img.pixels) {
        float f = static_cast<float>(p);
        uint32_t bits;
        std::memcpy(&bits, &f, 4);
        put_u32_be(out, bits);
    }
}

RasterImage read_image_record(std::istream& in) {
    const uint32_t h = get_u32_be(in);
    const uint32_t w = get_u32_be(in);
    if (h == 0 || w == 0 || h > 1u << 16 || w > 1u << 16)
        throw Error("image record: implausible dimensions");
    std::vector<double> px(static_cast<size_t>(h) * w);
    for (auto& p : px) {
        const uint32_t bits = get_u32_be(in);
        float f;
        std::memcpy(&f, &bits, 4);
        p = f;
    }
    return make_image(static_cast<int>(h), static_cast<int>(w), std::move(px));
}

}  // namespace genhints
