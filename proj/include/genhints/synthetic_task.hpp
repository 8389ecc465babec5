#pragma once

#include <vector>

#include "genhints/image.hpp"

namespace genhints {

// Parametric class grammar for the desk-scale task. Class 0: centered
// Gaussian blob; class 1: horizontal bar; class 2: vertical bar; class 3:
// horizontally separated two-blob pair. Every renderer's output distribution
// is invariant under horizontal flips, so flipping never changes the class.
struct SyntheticTaskSpec {
    int image_side = 16;
    int num_classes = 4;
    double position_jitter_fraction = 0.2;  // of image side, +/-
    double intensity_min = 0.6;
    double intensity_max = 1.0;
    double noise_std = 0.02;

    void validate() const;
};

RasterImage render_class(const SyntheticTaskSpec& spec, int label, Rng& rng);

// Grammar-based ground-truth labeler: decides which class renderer could have
// produced the image from its mass statistics. Returns -1 if nothing matches.
int true_label(const SyntheticTaskSpec& spec, const RasterImage& img);

struct LabeledSet {
    std::vector<RasterImage> images;
    std::vector<int> labels;

    size_t size() const { return images.size(); }
};

// Class-balanced set of n examples (remainder spread over the low classes).
LabeledSet synth_labeled_set(const SyntheticTaskSpec& spec, int n, Rng& rng);

}  // namespace genhints
