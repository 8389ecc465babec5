#include "genhints/synthetic_task.hpp"

#include <algorithm>
#include <cmath>

namespace genhints {

void SyntheticTaskSpec::validate() const {
    if (image_side < 8) throw ConfigError("task: image_side must be at least 8");
    if (num_classes != 4) throw ConfigError("task: the class grammar defines exactly 4 classes");
    if (intensity_min < 0.0 || intensity_max > 1.0 || intensity_min > intensity_max)
        throw ConfigError("task: intensity range must satisfy 0 <= min <= max <= 1");
    if (noise_std < 0.0) throw ConfigError("task: noise_std must be nonnegative");
    if (position_jitter_fraction < 0.0 || position_jitter_fraction > 0.4)
        throw ConfigError("task: position_jitter_fraction must be in [0,0.4]");
}

namespace {

struct DrawParams {
    double cx, cy, intensity;
};

DrawParams sample_params(const SyntheticTaskSpec& spec, Rng& rng) {
    const double s = spec.image_side;
    const double jitter = spec.position_jitter_fraction * s;
    DrawParams p;
    p.cx = (s - 1) * 0.5 + rng.uniform(-jitter, jitter);
    p.cy = (s - 1) * 0.5 + rng.uniform(-jitter, jitter);
    p.intensity = rng.uniform(spec.intensity_min, spec.intensity_max);
    return p;
}

void add_blob(RasterImage& img, double cx, double cy, double sigma, double intensity) {
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const double dx = x - cx, dy = y - cy;
            img.at(y, x) += intensity * std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
        }
}

// bar centered at (cx, cy), extending along the axis with half-length len
// and Gaussian cross-section of width thick
void add_bar(RasterImage& img, double cx, double cy, double len, double thick, double intensity,
             bool horizontal) {
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const double along = horizontal ? x - cx : y - cy;
            const double across = horizontal ? y - cy : x - cx;
            const double over = std::max(0.0, std::abs(along) - len);
            const double v = intensity * std::exp(-(across * across) / (2.0 * thick * thick)) *
                             std::exp(-(over * over) / (2.0 * 0.8 * 0.8));
            img.at(y, x) += v;
        }
}

}  // namespace

RasterImage render_class(const SyntheticTaskSpec& spec, int label, Rng& rng) {
    spec.validate();
    if (label < 0 || label >= spec.num_classes) throw Error("render_class: label out of range");
    const double s = spec.image_side;
    const DrawParams p = sample_params(spec, rng);
    RasterImage img{spec.image_side, spec.image_side,
                    std::vector<double>(static_cast<size_t>(spec.image_side) * spec.image_side, 0.0)};
    switch (label) {
        case 0:
            add_blob(img, p.cx, p.cy, 0.14 * s, p.intensity);
            break;
        case 1:
            add_bar(img, p.cx, p.cy, 0.32 * s, 0.08 * s, p.intensity, true);
            break;
        case 2:
            add_bar(img, p.cx, p.cy, 0.32 * s, 0.08 * s, p.intensity, false);
            break;
        case 3: {
            const double sep = 0.25 * s;
            add_blob(img, p.cx - sep, p.cy, 0.10 * s, p.intensity);
            add_blob(img, p.cx + sep, p.cy, 0.10 * s, p.intensity);
            break;
        }
    }
    for (auto& px : img.pixels) px += spec.noise_std * rng.normal();
    return make_image(img.height, img.width, std::move(img.pixels));
}

int true_label(const SyntheticTaskSpec& spec, const RasterImage& img) {
    spec.validate();
    const double threshold = 0.3;
    double mass = 0.0, mx = 0.0, my = 0.0;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            if (img.at(y, x) < threshold) continue;
            const double w = img.at(y, x);
            mass += w;
            mx += w * x;
            my += w * y;
        }
    if (mass <= 0.0) return -1;
    mx /= mass;
    my /= mass;
    double vx = 0.0, vy = 0.0;
    std::vector<double> col_marginal(img.width, 0.0);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            if (img.at(y, x) < threshold) continue;
            const double w = img.at(y, x);
            vx += w * (x - mx) * (x - mx);
            vy += w * (y - my) * (y - my);
            col_marginal[x] += w;
        }
    const double sx = std::sqrt(vx / mass);
    const double sy = std::sqrt(vy / mass);
    const double floor_sigma = 0.3;
    const double ratio = std::max(sx, floor_sigma) / std::max(sy, floor_sigma);

    if (ratio > 1.8) {
        // elongated along x: contiguous bar vs two separated blobs
        const double peak = *std::max_element(col_marginal.begin(), col_marginal.end());
        int left = 0, right = img.width - 1;
        while (left < img.width && col_marginal[left] < 0.5 * peak) ++left;
        while (right >= 0 && col_marginal[right] < 0.5 * peak) --right;
        double dip = peak;
        for (int x = left; x <= right; ++x) dip = std::min(dip, col_marginal[x]);
        return dip < 0.35 * peak ? 3 : 1;
    }
    if (1.0 / ratio > 1.8) return 2;
    return 0;
}

LabeledSet synth_labeled_set(const SyntheticTaskSpec& spec, int n, Rng& rng) {
    spec.validate();
    if (n < spec.num_classes) throw Error("synth_labeled_set: need at least one example per class");
    LabeledSet set;
    set.images.reserve(n);
    set.labels.reserve(n);
    for (int i = 0; i < n; ++i) {
        const int label = i % spec.num_classes;
        set.labels.push_back(label);
        set.images.push_back(render_class(spec, label, rng));
    }
    return set;
}

}  // namespace genhints
