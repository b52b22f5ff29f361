#ifndef KFPLS_RANDOM_HPP
#define KFPLS_RANDOM_HPP

#include "kfpls/types.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <vector>

namespace kfpls {

using Rng = std::mt19937_64;

/// Independent child seed for stream `index` of a root seed (splitmix64 finaliser).
inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index) {
    std::uint64_t z = root + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// `k` distinct indices from [0, n), in sampling order.
inline std::vector<Index> sample_without_replacement(Index n, Index k, Rng& rng) {
    detail::require(k >= 0 && k <= n, ErrorCategory::invalid_argument, "sample size exceeds population");
    std::vector<Index> pool(static_cast<std::size_t>(n));
    std::iota(pool.begin(), pool.end(), Index{0});
    for (Index i = 0; i < k; ++i) {
        std::uniform_int_distribution<Index> pick(i, n - 1);
        std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(pick(rng))]);
    }
    pool.resize(static_cast<std::size_t>(k));
    return pool;
}

/// Proportional stratified sample of size `k`; strata are given by `labels`.
/// Per-stratum quotas use largest remainders, ties to the lower label.
inline std::vector<Index> sample_stratified(const std::vector<int>& labels, Index k, Rng& rng) {
    const auto n = static_cast<Index>(labels.size());
    detail::require(k >= 0 && k <= n, ErrorCategory::invalid_argument, "sample size exceeds population");
    std::map<int, std::vector<Index>> strata;
    for (Index i = 0; i < n; ++i) {
        strata[labels[static_cast<std::size_t>(i)]].push_back(i);
    }
    std::vector<std::pair<double, int>> remainders;
    std::map<int, Index> quota;
    Index assigned = 0;
    for (const auto& [label, members] : strata) {
        const double exact = static_cast<double>(k) * static_cast<double>(members.size()) / static_cast<double>(n);
        quota[label] = static_cast<Index>(exact);
        assigned += quota[label];
        remainders.emplace_back(exact - static_cast<double>(quota[label]), label);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t i = 0; assigned < k; ++i, ++assigned) {
        ++quota[remainders[i % remainders.size()].second];
    }
    std::vector<Index> out;
    for (const auto& [label, members] : strata) {
        const auto picks = sample_without_replacement(static_cast<Index>(members.size()), quota[label], rng);
        for (Index p : picks) {
            out.push_back(members[static_cast<std::size_t>(p)]);
        }
    }
    return out;
}

} // namespace kfpls

#endif // KFPLS_RANDOM_HPP
