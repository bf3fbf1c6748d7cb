#pragma once

#include <span>
#include <vector>

#include "kgaudit/kg_core.hpp"

namespace kgaudit {

struct SplitConfig {
    double train_fraction = 0.6;
    double valid_fraction = 0.2;
    double test_fraction = 0.2;

    /// Throws UsageError unless all fractions are >= 0 and sum to 1.
    void validate() const;
};

struct UserPartition {
    UserId user;
    std::size_t train_count = 0;
    std::size_t valid_count = 0;
    std::size_t test_count = 0;
};

/// Train/valid/test partitions. Each sequence is grouped by ascending user
/// id, chronological within a user.
struct SplitBundle {
    std::vector<Interaction> train;
    std::vector<Interaction> valid;
    std::vector<Interaction> test;
    std::vector<UserPartition> users;
    std::size_t dropped_users = 0;
};

/// Per-user chronological hold-out. Equal timestamps keep input order, then
/// product id. Users with fewer than three interactions are dropped.
SplitBundle chronological_split(std::span<const Interaction> interactions, const SplitConfig& cfg = {});

}  // namespace kgaudit
