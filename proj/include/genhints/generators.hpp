#pragma once

#include <string>
#include <vector>

#include "genhints/image.hpp"
#include "genhints/synthetic_task.hpp"

namespace genhints {

enum class SamplerKind { TrueDistribution, Kde, Noise };

SamplerKind parse_sampler_kind(const std::string& name);
std::string sampler_kind_name(SamplerKind k);

// Virtual-example source G. Immutable after construction; sample() is a pure
// function of (handle seed, rng state), so concurrent use with distinct rng
// streams is deterministic.
struct Sampler {
    SamplerKind kind = SamplerKind::Noise;
    double bandwidth = 0.0;                // kde: per-pixel Gaussian sigma
    std::vector<RasterImage> corpus;       // kde only
    SyntheticTaskSpec task;                // true_distribution only
    uint64_t seed = 0;
    int height = 0;
    int width = 0;

    std::string description() const;
};

// Draws a uniformly random corpus image and adds iid Gaussian pixel noise of
// std sigma, clamped to [0,1]. sigma == 0 reproduces corpus images exactly.
Sampler fit_kde(const std::vector<RasterImage>& corpus, double bandwidth, uint64_t seed);

Sampler make_noise_sampler(int height, int width, uint64_t seed);

// Samples fresh draws from the synthetic task grammar (unlabeled).
Sampler make_true_sampler(const SyntheticTaskSpec& task, uint64_t seed);

std::vector<RasterImage> sample(const Sampler& handle, int n, Rng& rng);

struct FeatureMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;  // row-major

    double at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }
};

// Frozen random-projection embedding: flatten, project with a seeded Gaussian
// matrix to 32 dims, elementwise tanh. Values are only comparable across the
// same embedder seed.
FeatureMatrix embed_features(const std::vector<RasterImage>& images, uint64_t embedder_seed);

inline constexpr int kEmbeddingDim = 32;

// ||mu1-mu2||^2 + Tr(S1 + S2 - 2 (S1 S2)^{1/2}); covariances use 1/(n-1).
double frechet_distance(const FeatureMatrix& a, const FeatureMatrix& b);

struct QualityReport {
    std::string sampler;
    double fid_analog = 0.0;
    int sample_count = 0;
};

QualityReport quality_report(const Sampler& handle, const std::vector<RasterImage>& real_corpus,
                             int n_samples, uint64_t embedder_seed);

}  // namespace genhints
