#include "kgaudit/fairness_stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/students_t.hpp>

namespace kgaudit {

std::string_view to_string(Dimension d) noexcept { return d == Dimension::gender ? "gender" : "age"; }
std::string_view to_string(Side s) noexcept { return s == Side::consumer ? "consumer" : "provider"; }
std::string_view to_string(TestKind k) noexcept { return k == TestKind::welch_t ? "welch-t" : "kruskal-h"; }

GroupAssignment assign_groups(std::span<const Demographics> attributes, Dimension dimension, Side side) {
    GroupAssignment a;
    a.dimension = dimension;
    a.side = side;
    if (dimension == Dimension::gender)
        a.labels.assign(kGenderLabels.begin(), kGenderLabels.end());
    else
        a.labels.assign(kAgeLabels.begin(), kAgeLabels.end());
    a.group_of.resize(attributes.size());
    for (std::size_t i = 0; i < attributes.size(); ++i) {
        const auto& d = attributes[i];
        if (dimension == Dimension::gender && d.gender) a.group_of[i] = static_cast<std::size_t>(*d.gender);
        if (dimension == Dimension::age && d.age) a.group_of[i] = static_cast<std::size_t>(*d.age);
    }
    return a;
}

double pairwise_delta(std::span<const double> means) {
    if (means.size() < 2) return 0.0;
    double sum = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < means.size(); ++i)
        for (std::size_t j = i + 1; j < means.size(); ++j) {
            sum += std::abs(means[i] - means[j]);
            ++pairs;
        }
    return sum / static_cast<double>(pairs);
}

namespace {

FairnessReport summarize(std::string metric, const GroupAssignment& assignment, std::vector<double> sums,
                         std::vector<std::size_t> counts, std::vector<std::size_t> members) {
    FairnessReport r;
    r.metric = std::move(metric);
    r.dimension = assignment.dimension;
    r.side = assignment.side;
    std::vector<double> means;
    for (std::size_t g = 0; g < assignment.labels.size(); ++g) {
        GroupMean gm{assignment.labels[g], members[g], std::nullopt};
        if (counts[g] > 0) {
            gm.mean = sums[g] / static_cast<double>(counts[g]);
            means.push_back(*gm.mean);
        } else {
            r.empty_groups.push_back(assignment.labels[g]);
        }
        r.groups.push_back(std::move(gm));
    }
    r.delta = pairwise_delta(means);
    return r;
}

}  // namespace

FairnessReport group_delta(std::span<const std::optional<double>> values, std::span<const std::size_t> subjects,
                           const GroupAssignment& assignment, std::string metric) {
    if (values.size() != subjects.size()) throw UsageError("group_delta needs one subject per value");
    const auto groups = assignment.labels.size();
    std::vector<double> sums(groups, 0.0);
    std::vector<std::size_t> counts(groups, 0), members(groups, 0);
    for (std::size_t i = 0; i < values.size(); ++i) {
        auto g = assignment.group(subjects[i]);
        if (!g) throw ValidationError("evaluated subject has no " + std::string(to_string(assignment.dimension)) + " group");
        ++members[*g];
        if (!values[i]) continue;
        sums[*g] += *values[i];
        ++counts[*g];
    }
    return summarize(std::move(metric), assignment, std::move(sums), std::move(counts), std::move(members));
}

std::vector<double> exposure_share(const RecommendedList& list, std::span<const std::optional<ProviderId>> provider_of,
                                   const GroupAssignment& providers, std::size_t k) {
    if (k == 0) throw UsageError("cutoff k must be at least 1");
    const auto unattributed = providers.labels.size();
    std::vector<double> share(unattributed + 1, 0.0);
    const auto n = std::min(k, list.entries.size());
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double w = 1.0 / std::log2(static_cast<double>(i) + 2.0);
        auto p = list.entries[i].product.index();
        std::optional<std::size_t> g;
        if (p < provider_of.size() && provider_of[p]) g = providers.group(provider_of[p]->index());
        share[g.value_or(unattributed)] += w;
        total += w;
    }
    if (total > 0)
        for (auto& s : share) s /= total;
    return share;
}

FairnessReport provider_exposure(std::span<const RecommendedList> lists,
                                 std::span<const std::optional<ProviderId>> provider_of,
                                 const GroupAssignment& providers, std::span<const ProductId> catalog, std::size_t k) {
    const auto groups = providers.labels.size();
    std::vector<double> sums(groups, 0.0);
    std::vector<std::size_t> lists_seen(groups, 0), members(groups, 0);

    std::vector<std::size_t> provider_counted;
    for (auto p : catalog) {
        if (p.index() >= provider_of.size() || !provider_of[p.index()]) continue;
        auto prov = provider_of[p.index()]->index();
        if (std::find(provider_counted.begin(), provider_counted.end(), prov) != provider_counted.end()) continue;
        provider_counted.push_back(prov);
        if (auto g = providers.group(prov)) ++members[*g];
    }

    std::size_t n_lists = 0;
    for (const auto& l : lists) {
        if (l.entries.empty()) continue;
        auto share = exposure_share(l, provider_of, providers, k);
        for (std::size_t g = 0; g < groups; ++g) sums[g] += share[g];
        ++n_lists;
    }
    // A group takes part when it owns at least one catalog provider.
    for (std::size_t g = 0; g < groups; ++g) lists_seen[g] = members[g] > 0 ? n_lists : 0;
    return summarize("EXP", providers, std::move(sums), std::move(lists_seen), std::move(members));
}

TestResult welch_ttest(std::span<const double> a, std::span<const double> b) {
    if (a.size() < 2 || b.size() < 2) throw UsageError("Welch t-test needs at least two values per sample");
    auto moments = [](std::span<const double> x) {
        const auto n = static_cast<double>(x.size());
        const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
        double ss = 0.0;
        for (double v : x) ss += (v - mean) * (v - mean);
        return std::pair{mean, ss / (n - 1.0)};
    };
    auto [ma, va] = moments(a);
    auto [mb, vb] = moments(b);
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    const double sa = va / na, sb = vb / nb;

    TestResult r;
    r.kind = TestKind::welch_t;
    if (sa + sb == 0.0) {
        if (ma == mb) {
            r.dof = na + nb - 2.0;
            return r;
        }
        throw UsageError("Welch t-test is undefined for constant samples with different means");
    }
    r.statistic = (ma - mb) / std::sqrt(sa + sb);
    r.dof = (sa + sb) * (sa + sb) / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    boost::math::students_t_distribution<double> dist(r.dof);
    r.p_value = std::clamp(2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.statistic))), 0.0, 1.0);
    return r;
}

TestResult kruskal_h(std::span<const std::vector<double>> groups) {
    if (groups.size() < 2) throw UsageError("Kruskal-Wallis needs at least two groups");
    std::vector<std::pair<double, std::size_t>> pooled;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        if (groups[g].empty()) throw UsageError("Kruskal-Wallis groups must be non-empty");
        for (double v : groups[g]) pooled.emplace_back(v, g);
    }
    const auto n = pooled.size();
    if (n < 3) throw UsageError("Kruskal-Wallis needs at least three observations");
    std::sort(pooled.begin(), pooled.end());

    std::vector<double> rank_sum(groups.size(), 0.0);
    double tie_term = 0.0;
    for (std::size_t i = 0; i < n;) {
        auto j = i;
        while (j < n && pooled[j].first == pooled[i].first) ++j;
        const double mid = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (auto t = i; t < j; ++t) rank_sum[pooled[t].second] += mid;
        const double ties = static_cast<double>(j - i);
        tie_term += ties * ties * ties - ties;
        i = j;
    }
    const double N = static_cast<double>(n);
    double h = 0.0;
    for (std::size_t g = 0; g < groups.size(); ++g)
        h += rank_sum[g] * rank_sum[g] / static_cast<double>(groups[g].size());
    h = 12.0 / (N * (N + 1.0)) * h - 3.0 * (N + 1.0);
    const double correction = 1.0 - tie_term / (N * N * N - N);

    TestResult r;
    r.kind = TestKind::kruskal_h;
    r.dof = static_cast<double>(groups.size() - 1);
    if (correction <= 0.0) return r;  // every observation tied
    r.statistic = std::max(0.0, h / correction);
    boost::math::chi_squared_distribution<double> dist(r.dof);
    r.p_value = std::clamp(boost::math::cdf(boost::math::complement(dist, r.statistic)), 0.0, 1.0);
    return r;
}

}  // namespace kgaudit
