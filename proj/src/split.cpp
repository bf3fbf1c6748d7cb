#include "kgaudit/split.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

namespace kgaudit {

void SplitConfig::validate() const {
    if (train_fraction < 0 || valid_fraction < 0 || test_fraction < 0)
        throw UsageError("split fractions must be non-negative");
    if (std::abs(train_fraction + valid_fraction + test_fraction - 1.0) > 1e-9)
        throw UsageError(fmt::format("split fractions must sum to 1, got {}+{}+{}", train_fraction, valid_fraction,
                                     test_fraction));
}

namespace {

// floor() that forgives representation error, so that 0.6 * 5 lands on 3.
std::size_t floor_count(double fraction, std::size_t n) {
    return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 1e-9));
}

}  // namespace

SplitBundle chronological_split(std::span<const Interaction> interactions, const SplitConfig& cfg) {
    cfg.validate();
    std::vector<std::size_t> order(interactions.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto& x = interactions[a];
        const auto& y = interactions[b];
        if (x.user != y.user) return x.user < y.user;
        if (x.timestamp != y.timestamp) return x.timestamp < y.timestamp;
        if (a != b) return a < b;
        return x.product < y.product;
    });

    SplitBundle out;
    for (std::size_t lo = 0; lo < order.size();) {
        auto hi = lo;
        const auto user = interactions[order[lo]].user;
        while (hi < order.size() && interactions[order[hi]].user == user) ++hi;
        const auto n = hi - lo;
        if (n < 3) {
            ++out.dropped_users;
            lo = hi;
            continue;
        }
        auto n_train = std::clamp<std::size_t>(floor_count(cfg.train_fraction, n), 1, n);
        auto n_train_valid = std::clamp(floor_count(cfg.train_fraction + cfg.valid_fraction, n), n_train, n);
        for (auto i = lo; i < hi; ++i) {
            auto pos = i - lo;
            auto& dst = pos < n_train ? out.train : pos < n_train_valid ? out.valid : out.test;
            dst.push_back(interactions[order[i]]);
        }
        out.users.push_back({user, n_train, n_train_valid - n_train, n - n_train_valid});
        lo = hi;
    }
    return out;
}

}  // namespace kgaudit
