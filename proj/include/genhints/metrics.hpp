#pragma once

#include <string>
#include <vector>

#include "genhints/common.hpp"

namespace genhints {

double accuracy(const std::vector<int>& predictions, const std::vector<int>& labels);

// Sample Pearson correlation; throws on constant series (undefined, never 0).
double pearson(const std::vector<double>& xs, const std::vector<double>& ys);

struct CorrelationStudyRow {
    std::string sampler;
    double fid_analog = 0.0;
    double pearson_r = 0.0;
};

struct HintLossSeries {
    std::string sampler;
    std::vector<double> on_virtual;
    std::vector<double> on_real;
};

// One row per sampler: correlation between the two per-checkpoint hint-loss
// series, paired with the sampler's fid_analog; sorted by fid_analog.
std::vector<CorrelationStudyRow> correlation_study(const std::vector<HintLossSeries>& series,
                                                   const std::vector<double>& fid_analogs);

}  // namespace genhints
