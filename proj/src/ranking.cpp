#include "gocre/ranking.hpp"

#include "gocre/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>

namespace gocre {

namespace {

struct GroupSizes {
    long first = 0;
    long second = 0;
};

GroupSizes count_groups(std::span<const double> values, std::span<const double> labels) {
    require_same_length(static_cast<long>(values.size()), static_cast<long>(labels.size()),
                        "wilcoxon");
    GroupSizes g;
    for (double l : labels) {
        if (l == 1.0) {
            ++g.first;
        } else if (l == 0.0) {
            ++g.second;
        } else {
            throw std::invalid_argument("wilcoxon: labels must be 0 or 1");
        }
    }
    if (g.first == 0 || g.second == 0) {
        throw std::invalid_argument("wilcoxon: both groups must be non-empty");
    }
    return g;
}

}  // namespace

std::vector<double> mid_ranks(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && values[idx[j + 1]] == values[idx[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
        i = j + 1;
    }
    return ranks;
}

double wilcoxon_exact_p(std::span<const double> values, std::span<const double> labels) {
    const GroupSizes g = count_groups(values, labels);
    const std::vector<double> ranks = mid_ranks(values);

    // Count subsets of the smaller group's size; doubled mid-ranks are integers.
    const bool use_first = g.first <= g.second;
    const double target_label = use_first ? 1.0 : 0.0;
    const long m = use_first ? g.first : g.second;
    const std::size_t n = values.size();

    std::vector<long> doubled(n);
    long observed = 0;
    for (std::size_t i = 0; i < n; ++i) {
        doubled[i] = std::lround(2.0 * ranks[i]);
        if (labels[i] == target_label) observed += doubled[i];
    }
    std::vector<long> sorted = doubled;
    std::sort(sorted.rbegin(), sorted.rend());
    const long max_sum = std::accumulate(sorted.begin(), sorted.begin() + m, 0L);

    // counts[k][s]: number of k-subsets of the elements seen so far with sum s.
    const std::size_t width = static_cast<std::size_t>(max_sum) + 1;
    std::vector<double> counts(static_cast<std::size_t>(m + 1) * width, 0.0);
    auto at = [&](long k, long s) -> double& {
        return counts[static_cast<std::size_t>(k) * width + static_cast<std::size_t>(s)];
    };
    at(0, 0) = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        const long r = doubled[i];
        const long kmax = std::min<long>(m, static_cast<long>(i) + 1);
        for (long k = kmax; k >= 1; --k) {
            for (long s = max_sum - r; s >= 0; --s) {
                const double c = at(k - 1, s);
                if (c != 0.0) at(k, s + r) += c;
            }
        }
    }
    double total = 0, lower = 0, upper = 0;
    for (long s = 0; s <= max_sum; ++s) {
        const double c = at(m, s);
        total += c;
        if (s <= observed) lower += c;
        if (s >= observed) upper += c;
    }
    return std::min(1.0, 2.0 * std::min(lower, upper) / total);
}

double wilcoxon_normal_p(std::span<const double> values, std::span<const double> labels) {
    const GroupSizes g = count_groups(values, labels);
    const std::vector<double> ranks = mid_ranks(values);
    const double n1 = static_cast<double>(g.first);
    const double n2 = static_cast<double>(g.second);
    const double n = n1 + n2;

    double w = 0;
    for (std::size_t i = 0; i < ranks.size(); ++i) {
        if (labels[i] == 1.0) w += ranks[i];
    }
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    double tie_term = 0;
    for (std::size_t i = 0; i < sorted.size();) {
        std::size_t j = i;
        while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
        const double t = static_cast<double>(j - i + 1);
        tie_term += t * t * t - t;
        i = j + 1;
    }
    const double var = n1 * n2 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if (!(var > 0.0)) {
        return 1.0;
    }
    const double dev = std::max(0.0, std::abs(w - n1 * (n + 1.0) / 2.0) - 0.5);
    return std::min(1.0, std::erfc(dev / std::sqrt(var) / std::sqrt(2.0)));
}

double wilcoxon_rank_sum_p(std::span<const double> values, std::span<const double> labels) {
    const GroupSizes g = count_groups(values, labels);
    const long smaller = std::min(g.first, g.second);
    if (smaller <= kWilcoxonExactMaxGroup && g.first + g.second <= kWilcoxonExactMaxTotal) {
        return wilcoxon_exact_p(values, labels);
    }
    return wilcoxon_normal_p(values, labels);
}

FeatureRanking wilcoxon_rank_features(const Matrix& X, const Vector& y, int workers) {
    require_same_length(X.rows(), y.size(), "wilcoxon_rank_features");
    const std::span<const double> labels(y.data(), static_cast<std::size_t>(y.size()));
    count_groups(std::span<const double>(y.data(), static_cast<std::size_t>(y.size())), labels);

    FeatureRanking out;
    out.p_values.resize(X.cols());
    std::atomic<Eigen::Index> next{0};
    auto work = [&] {
        Vector column(X.rows());
        for (Eigen::Index j = next++; j < X.cols(); j = next++) {
            column = X.col(j);
            out.p_values[j] = wilcoxon_rank_sum_p(
                std::span<const double>(column.data(), static_cast<std::size_t>(column.size())),
                labels);
        }
    };
    const int threads = std::max(1, std::min<int>(workers, static_cast<int>(X.cols())));
    if (threads == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(work);
    }

    out.order.resize(static_cast<std::size_t>(X.cols()));
    std::iota(out.order.begin(), out.order.end(), Eigen::Index{0});
    std::stable_sort(out.order.begin(), out.order.end(), [&](Eigen::Index a, Eigen::Index b) {
        return out.p_values[a] < out.p_values[b];
    });
    return out;
}

}  // namespace gocre
