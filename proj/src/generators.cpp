#include "genhints/generators.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>

namespace genhints {

SamplerKind parse_sampler_kind(const std::string& name) {
    if (name == "true_distribution") return SamplerKind::TrueDistribution;
    if (name == "kde") return SamplerKind::Kde;
    if (name == "noise") return SamplerKind::Noise;
    throw ConfigError("unknown sampler kind: " + name);
}

std::string sampler_kind_name(SamplerKind k) {
    switch (k) {
        case SamplerKind::TrueDistribution: return "true_distribution";
        case SamplerKind::Kde: return "kde";
        case SamplerKind::Noise: return "noise";
    }
    throw Error("unreachable");
}

std::string Sampler::description() const {
    if (kind == SamplerKind::Kde) {
        std::ostringstream out;
        out << "kde_sigma=" << bandwidth;
        return out.str();
    }
    return sampler_kind_name(kind);
}

Sampler fit_kde(const std::vector<RasterImage>& corpus, double bandwidth, uint64_t seed) {
    if (corpus.empty()) throw Error("fit_kde: empty corpus");
    if (bandwidth < 0.0) throw Error("fit_kde: bandwidth must be nonnegative");
    const int h = corpus[0].height, w = corpus[0].width;
    for (const auto& img : corpus)
        if (img.height != h || img.width != w) throw Error("fit_kde: mixed corpus shapes");
    Sampler s;
    s.kind = SamplerKind::Kde;
    s.bandwidth = bandwidth;
    s.corpus = corpus;
    s.seed = seed;
    s.height = h;
    s.width = w;
    return s;
}

Sampler make_noise_sampler(int height, int width, uint64_t seed) {
    if (height <= 0 || width <= 0) throw Error("noise sampler: invalid shape");
    Sampler s;
    s.kind = SamplerKind::Noise;
    s.seed = seed;
    s.height = height;
    s.width = width;
    return s;
}

Sampler make_true_sampler(const SyntheticTaskSpec& task, uint64_t seed) {
    task.validate();
    Sampler s;
    s.kind = SamplerKind::TrueDistribution;
    s.task = task;
    s.seed = seed;
    s.height = task.image_side;
    s.width = task.image_side;
    return s;
}

std::vector<RasterImage> sample(const Sampler& handle, int n, Rng& rng) {
    if (n <= 0) throw Error("sample: n must be positive");
    // fold the handle seed with the caller stream so distinct handles with the
    // same rng state still draw distinct sequences
    Rng local(mix_seed(handle.seed, rng.next_u64()));
    std::vector<RasterImage> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) {
        switch (handle.kind) {
            case SamplerKind::TrueDistribution: {
                const int label = local.uniform_int(handle.task.num_classes);
                out.push_back(render_class(handle.task, label, local));
                break;
            }
            case SamplerKind::Kde: {
                const auto& base = handle.corpus[local.uniform_int(static_cast<int>(handle.corpus.size()))];
                std::vector<double> px = base.pixels;
                if (handle.bandwidth > 0.0)
                    for (auto& p : px) p += handle.bandwidth * local.normal();
                out.push_back(make_image(base.height, base.width, std::move(px)));
                break;
            }
            case SamplerKind::Noise: {
                std::vector<double> px(static_cast<size_t>(handle.height) * handle.width);
                for (auto& p : px) p = local.uniform();
                out.push_back(make_image(handle.height, handle.width, std::move(px)));
                break;
            }
        }
    }
    return out;
}

FeatureMatrix embed_features(const std::vector<RasterImage>& images, uint64_t embedder_seed) {
    if (images.empty()) throw Error("embed_features: empty image list");
    const int h = images[0].height, w = images[0].width;
    const int dim = h * w;
    for (const auto& img : images)
        if (img.height != h || img.width != w) throw Error("embed_features: mixed image shapes");
    // frozen projection, entries N(0, 1/dim) so pre-tanh activations are O(1)
    Rng rng(mix_seed(embedder_seed, 0x6d62656464657221ULL));
    std::vector<double> proj(static_cast<size_t>(kEmbeddingDim) * dim);
    const double scl = 1.0 / std::sqrt(static_cast<double>(dim));
    for (auto& v : proj) v = rng.normal() * scl;

    FeatureMatrix f;
    f.rows = static_cast<int>(images.size());
    f.cols = kEmbeddingDim;
    f.data.resize(static_cast<size_t>(f.rows) * kEmbeddingDim);
    for (int r = 0; r < f.rows; ++r) {
        const double* px = images[r].pixels.data();
        for (int j = 0; j < kEmbeddingDim; ++j) {
            const double* p = &proj[static_cast<size_t>(j) * dim];
            double acc = 0.0;
            for (int i = 0; i < dim; ++i) acc += p[i] * px[i];
            f.data[static_cast<size_t>(r) * kEmbeddingDim + j] = std::tanh(acc);
        }
    }
    return f;
}

namespace {

void moments(const FeatureMatrix& m, Eigen::VectorXd& mean, Eigen::MatrixXd& cov) {
    const int n = m.rows, d = m.cols;
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> X(
        m.data.data(), n, d);
    mean = X.colwise().mean();
    Eigen::MatrixXd centered = X.rowwise() - mean.transpose();
    cov = centered.transpose() * centered / static_cast<double>(n - 1);
}

// symmetric PSD square root via eigendecomposition; small negative
// eigenvalues are clamped to 0, below -1e-8 is an error
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
    Eigen::VectorXd ev = es.eigenvalues();
    for (int i = 0; i < ev.size(); ++i) {
        if (ev[i] < -1e-8) throw Error("frechet_distance: covariance has significant negative eigenvalue");
        ev[i] = std::sqrt(std::max(0.0, ev[i]));
    }
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

double frechet_distance(const FeatureMatrix& a, const FeatureMatrix& b) {
    if (a.cols != b.cols) throw Error("frechet_distance: feature dimension mismatch");
    if (a.rows < 2 || b.rows < 2) throw Error("frechet_distance: need at least 2 rows per set");
    Eigen::VectorXd mu1, mu2;
    Eigen::MatrixXd s1, s2;
    moments(a, mu1, s1);
    moments(b, mu2, s2);
    const Eigen::MatrixXd s1h = psd_sqrt(s1);
    // Tr((S1 S2)^{1/2}) = Tr((S1^{1/2} S2 S1^{1/2})^{1/2}), the latter is PSD
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
        0.5 * (s1h * s2 * s1h + (s1h * s2 * s1h).transpose()));
    double trace_sqrt = 0.0;
    for (int i = 0; i < es.eigenvalues().size(); ++i) {
        const double ev = es.eigenvalues()[i];
        if (ev < -1e-8) throw Error("frechet_distance: product matrix has significant negative eigenvalue");
        trace_sqrt += std::sqrt(std::max(0.0, ev));
    }
    const double dist =
        (mu1 - mu2).squaredNorm() + s1.trace() + s2.trace() - 2.0 * trace_sqrt;
    return std::max(0.0, dist);
}

QualityReport quality_report(const Sampler& handle, const std::vector<RasterImage>& real_corpus,
                             int n_samples, uint64_t embedder_seed) {
    if (n_samples < 256) throw Error("quality_report: need at least 256 samples");
    Rng rng(mix_seed(handle.seed, 0x7175616c697479ULL));
    const auto generated = sample(handle, n_samples, rng);
    const FeatureMatrix real_feats = embed_features(real_corpus, embedder_seed);
    const FeatureMatrix gen_feats = embed_features(generated, embedder_seed);
    QualityReport report;
    report.sampler = handle.description();
    report.fid_analog = frechet_distance(real_feats, gen_feats);
    report.sample_count = n_samples;
    return report;
}

}  // namespace genhints
