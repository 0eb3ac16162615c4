#pragma once

#include "gocre/glm_family.hpp"

#include <span>
#include <vector>

namespace gocre {

/// Groups up to this size (in the smaller group) get an exact p-value,
/// provided the pooled sample is at most kWilcoxonExactMaxTotal.
inline constexpr int kWilcoxonExactMaxGroup = 10;
inline constexpr int kWilcoxonExactMaxTotal = 200;

/// Mid-ranks (1-based) of the pooled sample; tied values share the mean rank.
std::vector<double> mid_ranks(std::span<const double> values);

// `labels` holds 1 for the first group and 0 for the second throughout.

/// Exact two-sided rank-sum p-value, 2 * min(P(W <= w), P(W >= w)) capped at 1,
/// under the permutation distribution of the observed mid-ranks.
double wilcoxon_exact_p(std::span<const double> values, std::span<const double> labels);

/// Normal approximation with tie-corrected variance and continuity correction.
double wilcoxon_normal_p(std::span<const double> values, std::span<const double> labels);

/// Picks exact or normal according to the group-size thresholds above.
double wilcoxon_rank_sum_p(std::span<const double> values, std::span<const double> labels);

struct FeatureRanking {
    Vector p_values;
    std::vector<Eigen::Index> order;  // ascending p-value, ties by column index
};

/// Two-sided rank-sum test of every column of X between y == 1 and y == 0.
/// `workers` > 1 scores columns in parallel; the result does not depend on it.
FeatureRanking wilcoxon_rank_features(const Matrix& X, const Vector& y, int workers = 1);

}  // namespace gocre
