#include "genhints/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace genhints {

double accuracy(const std::vector<int>& predictions, const std::vector<int>& labels) {
    if (predictions.size() != labels.size()) throw Error("accuracy: length mismatch");
    if (predictions.empty()) throw Error("accuracy: empty inputs");
    size_t hits = 0;
    for (size_t i = 0; i < predictions.size(); ++i)
        if (predictions[i] == labels[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

double pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size()) throw Error("pearson: length mismatch");
    const size_t n = xs.size();
    if (n < 3) throw Error("pearson: need at least 3 points");
    double mx = 0.0, my = 0.0;
    for (size_t i = 0; i < n; ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double dx = xs[i] - mx, dy = ys[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw Error("pearson: correlation undefined for constant series");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<CorrelationStudyRow> correlation_study(const std::vector<HintLossSeries>& series,
                                                   const std::vector<double>& fid_analogs) {
    if (series.size() != fid_analogs.size()) throw Error("correlation_study: one fid per series required");
    if (series.empty()) throw Error("correlation_study: no series");
    std::vector<CorrelationStudyRow> rows;
    rows.reserve(series.size());
    for (size_t i = 0; i < series.size(); ++i) {
        CorrelationStudyRow row;
        row.sampler = series[i].sampler;
        row.fid_analog = fid_analogs[i];
        row.pearson_r = pearson(series[i].on_virtual, series[i].on_real);
        rows.push_back(row);
    }
    std::stable_sort(rows.begin(), rows.end(),
                     [](const auto& a, const auto& b) { return a.fid_analog < b.fid_analog; });
    return rows;
}

}  // namespace genhints
