#pragma once

#include <iosfwd>
#include <vector>

#include "genhints/common.hpp"

namespace genhints {

// H x W single-channel image, pixels in [0,1], row-major.
struct RasterImage {
    int height = 0;
    int width = 0;
    std::vector<double> pixels;

    double at(int y, int x) const { return pixels[static_cast<size_t>(y) * width + x]; }
    double& at(int y, int x) { return pixels[static_cast<size_t>(y) * width + x]; }

    bool operator==(const RasterImage&) const = default;
};

// Validates dimensions/length, rejects non-finite values, clamps to [0,1].
RasterImage make_image(int height, int width, std::vector<double> pixels);

RasterImage flip_horizontal(const RasterImage& img);

// Shifts content by (dx, dy); dx > 0 moves content right, dy > 0 down.
// Vacated pixels are 0, shifted-out content is discarded.
RasterImage translate(const RasterImage& img, int dx, int dy);

// Rotation about the image center with bilinear interpolation; out-of-bounds
// samples read 0. degrees == 0 short-circuits to a bit-exact copy.
RasterImage rotate(const RasterImage& img, double degrees);

// Declarative description of the hint transformation h.
struct HintTransformSpec {
    double flip_probability = 0.0;       // [0,1]
    double max_translate_fraction = 0.0; // [0,0.5], fraction of image side
    double max_rotate_degrees = 0.0;     // [0,90]

    void validate() const;
    bool is_identity() const {
        return flip_probability == 0.0 && max_translate_fraction == 0.0 && max_rotate_degrees == 0.0;
    }
};

// flip (w.p. flip_probability), then translation (per-axis magnitude uniform
// in [0, max_translate_fraction * side] rounded half-up to whole pixels, sign
// uniform), then rotation uniform in [-max_rotate_degrees, +max].
// Consumes a fixed number of rng draws regardless of the spec values.
RasterImage apply_hint_transform(const RasterImage& img, const HintTransformSpec& spec, Rng& rng);

// Binary record: two 32-bit big-endian unsigned dims, then H*W big-endian
// 32-bit floats.
void write_image_record(std::ostream& out, const RasterImage& img);
RasterImage read_image_record(std::istream& in);

}  // namespace genhints
