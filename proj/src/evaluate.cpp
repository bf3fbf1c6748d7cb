#include "kgaudit/evaluate.hpp"

#include <algorithm>
#include <thread>

namespace kgaudit {

namespace {

/// Static block partition of [0, n) over `workers` threads.
template <class Fn>
void parallel_for(std::size_t n, unsigned workers, Fn&& fn) {
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    const auto chunk = (n + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (auto i = w * chunk; i < std::min(n, (w + 1) * chunk); ++i) fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

std::vector<ProductId> sorted_unique(std::vector<ProductId> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

}  // namespace

EvaluationContext::EvaluationContext(const DatasetBundle& bundle, const SplitBundle& split, double beta,
                                     std::size_t baseline_k)
    : bundle_(bundle),
      split_(split),
      train_index_(split.train),
      popularity_(train_mostpop(split.train, bundle.catalog)),
      weights_(precompute_weights(split.train, bundle.kg, beta)),
      baseline_k_(baseline_k),
      user_gender_(assign_groups(bundle.user_attributes, Dimension::gender, Side::consumer)),
      user_age_(assign_groups(bundle.user_attributes, Dimension::age, Side::consumer)),
      provider_gender_(assign_groups(bundle.provider_attributes, Dimension::gender, Side::provider)),
      provider_age_(assign_groups(bundle.provider_attributes, Dimension::age, Side::provider)) {
    const auto n_users = bundle.labels.users.size();
    std::vector<std::vector<ProductId>> test(n_users), seen(n_users);
    for (const auto& x : split.test) test[x.user.index()].push_back(x.product);
    for (const auto& x : split.train) seen[x.user.index()].push_back(x.product);
    for (const auto& x : split.valid) seen[x.user.index()].push_back(x.product);
    for (std::size_t u = 0; u < n_users; ++u) {
        if (test[u].empty()) continue;
        users_.emplace_back(static_cast<std::int32_t>(u));
        test_.push_back(sorted_unique(std::move(test[u])));
        seen_.push_back(sorted_unique(std::move(seen[u])));
    }
    baseline_.reserve(users_.size());
    for (std::size_t i = 0; i < users_.size(); ++i)
        baseline_.push_back(recommend_mostpop(popularity_, users_[i], baseline_k_, seen_[i]));
}

std::vector<RecommendedList> align_lists(const EvaluationContext& ctx, std::span<const RecommendedList> lists) {
    std::vector<RecommendedList> out;
    out.reserve(ctx.users().size());
    std::size_t j = 0;
    std::vector<const RecommendedList*> by_user;
    for (const auto& l : lists) by_user.push_back(&l);
    std::sort(by_user.begin(), by_user.end(), [](auto* a, auto* b) { return a->user < b->user; });
    for (auto u : ctx.users()) {
        while (j < by_user.size() && by_user[j]->user < u) ++j;
        if (j < by_user.size() && by_user[j]->user == u)
            out.push_back(*by_user[j]);
        else
            out.push_back(RecommendedList{u, {}, true});
    }
    return out;
}

const std::vector<std::string>& per_user_metric_names() {
    static const std::vector<std::string> names = {"NDCG", "MRR", "SER", "DIV", "NOV", "FID", "LIR",
                                                   "LID",  "SEP", "SED", "PTD", "PTC", "PPC"};
    return names;
}

std::span<const std::optional<double>> per_user_values(const CutoffEvaluation& c, std::string_view m) {
    const auto& u = c.utility;
    const auto& e = c.explanation;
    if (m == "NDCG") return u.ndcg;
    if (m == "MRR") return u.mrr;
    if (m == "SER") return u.serendipity;
    if (m == "DIV") return u.diversity;
    if (m == "NOV") return u.novelty;
    if (m == "FID") return e.fid;
    if (m == "LIR") return e.lir;
    if (m == "LID") return e.lid;
    if (m == "SEP") return e.sep;
    if (m == "SED") return e.sed;
    if (m == "PTD") return e.ptd;
    if (m == "PTC") return e.ptc;
    if (m == "PPC") return e.ppc;
    throw UsageError("unknown per-user metric " + std::string(m));
}

namespace {

GroupTest test_groups(const std::string& metric, std::span<const std::optional<double>> values,
                      const std::vector<UserId>& users, const GroupAssignment& groups) {
    GroupTest t{metric, groups.dimension, std::nullopt, {}};
    std::vector<std::vector<double>> by_group(groups.labels.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        auto g = groups.group(users[i].index());
        if (values[i] && g) by_group[*g].push_back(*values[i]);
    }
    std::erase_if(by_group, [](const auto& g) { return g.empty(); });
    try {
        if (groups.dimension == Dimension::gender) {
            if (by_group.size() != 2) throw UsageError("needs both gender groups");
            t.result = welch_ttest(by_group[0], by_group[1]);
        } else {
            t.result = kruskal_h(by_group);
        }
    } catch (const UsageError& e) {
        t.note = e.what();
    }
    return t;
}

/// Catalog coverage of each consumer group's lists.
FairnessReport group_coverage(const EvaluationContext& ctx, std::span<const RecommendedList> lists, Dimension dim,
                              std::size_t k) {
    const auto& groups = ctx.consumers(dim);
    FairnessReport f{"COV", dim, Side::consumer, {}, 0.0, {}};
    std::vector<std::vector<RecommendedList>> by_group(groups.labels.size());
    for (std::size_t i = 0; i < lists.size(); ++i)
        if (auto g = groups.group(ctx.users()[i].index())) by_group[*g].push_back(lists[i]);
    std::vector<double> means;
    for (std::size_t g = 0; g < by_group.size(); ++g) {
        GroupMean gm{groups.labels[g], by_group[g].size(), std::nullopt};
        if (by_group[g].empty()) {
            f.empty_groups.push_back(groups.labels[g]);
        } else {
            gm.mean = coverage(by_group[g], ctx.bundle().catalog, k);
            means.push_back(*gm.mean);
        }
        f.groups.push_back(std::move(gm));
    }
    f.delta = pairwise_delta(means);
    return f;
}

}  // namespace

MethodEvaluation evaluate_method(const EvaluationContext& ctx, const MethodOutput& output,
                                 std::span<const std::size_t> cutoffs, std::span<const std::size_t> fidelity_cutoffs,
                                 unsigned workers) {
    MethodEvaluation m;
    m.name = output.name;
    m.log = output.log;
    const auto lists = align_lists(ctx, output.lists);
    const auto n = lists.size();
    const auto& bundle = ctx.bundle();

    for (auto k : cutoffs) {
        if (k > ctx.baseline_k()) throw UsageError("cutoff exceeds the baseline list length");
        CutoffEvaluation c;
        c.k = k;
        auto& u = c.utility;
        auto& e = c.explanation;
        u.k = e.k = k;
        for (auto* v : {&u.ndcg, &u.mrr, &u.serendipity, &u.diversity, &u.novelty, &e.fid, &e.lir, &e.lid, &e.sep,
                        &e.sed, &e.ptd, &e.ptc, &e.ppc})
            v->assign(n, std::nullopt);

        parallel_for(n, workers, [&](std::size_t i) {
            const auto& l = lists[i];
            u.ndcg[i] = ndcg_at_k(l, ctx.test_products(i), k);
            u.mrr[i] = mrr(l, ctx.test_products(i), k);
            u.serendipity[i] = serendipity(l, ctx.baseline(i), k);
            u.diversity[i] = diversity(l, bundle.category_of, k);
            u.novelty[i] = novelty(l, ctx.popularity(), k);
            e.fid[i] = list_fidelity(l, k);
            e.lir[i] = lir(l, ctx.weights(), k);
            e.lid[i] = lid(l, k);
            e.sep[i] = sep(l, ctx.weights(), k);
            e.sed[i] = sed(l, k);
            e.ptd[i] = ptd(l, k);
        });
        // Concentration is normalised by run-wide counts, so it needs a
        // completed first pass.
        e.run_types = run_path_types(lists, k);
        e.run_patterns = run_path_patterns(lists, bundle.kg, k);
        parallel_for(n, workers, [&](std::size_t i) {
            e.ptc[i] = ptc(lists[i], k, e.run_types);
            e.ppc[i] = ppc(lists[i], bundle.kg, k, e.run_patterns);
        });

        u.mean_ndcg = defined_mean(u.ndcg);
        u.mean_mrr = defined_mean(u.mrr);
        u.mean_serendipity = defined_mean(u.serendipity);
        u.mean_diversity = defined_mean(u.diversity);
        u.mean_novelty = defined_mean(u.novelty);
        u.coverage = bundle.catalog.empty() ? 0.0 : coverage(lists, bundle.catalog, k);
        e.mean_fid = defined_mean(e.fid);
        e.mean_lir = defined_mean(e.lir);
        e.mean_lid = defined_mean(e.lid);
        e.mean_sep = defined_mean(e.sep);
        e.mean_sed = defined_mean(e.sed);
        e.mean_ptd = defined_mean(e.ptd);
        e.mean_ptc = defined_mean(e.ptc);
        e.mean_ppc = defined_mean(e.ppc);

        std::vector<std::size_t> subjects;
        for (auto user : ctx.users()) subjects.push_back(user.index());
        for (const auto& metric : per_user_metric_names()) {
            auto values = per_user_values(c, metric);
            for (auto dim : {Dimension::gender, Dimension::age}) {
                c.consumer_fairness.push_back(group_delta(values, subjects, ctx.consumers(dim), metric));
                c.consumer_tests.push_back(test_groups(metric, values, ctx.users(), ctx.consumers(dim)));
            }
        }
        if (!bundle.catalog.empty())
            for (auto dim : {Dimension::gender, Dimension::age})
                c.consumer_fairness.push_back(group_coverage(ctx, lists, dim, k));
        for (auto dim : {Dimension::gender, Dimension::age})
            c.provider_fairness.push_back(
                provider_exposure(lists, bundle.provider_of, ctx.providers(dim), bundle.catalog, k));

        auto put = [&](const char* key, const std::optional<double>& v) {
            if (v) c.summary[key] = *v;
        };
        put("NDCG", u.mean_ndcg);
        put("MRR", u.mean_mrr);
        put("SER", u.mean_serendipity);
        put("DIV", u.mean_diversity);
        put("NOV", u.mean_novelty);
        c.summary["COV"] = u.coverage;
        put("FID", e.mean_fid);
        put("LIR", e.mean_lir);
        put("LID", e.mean_lid);
        put("SEP", e.mean_sep);
        put("SED", e.mean_sed);
        put("PTD", e.mean_ptd);
        put("PTC", e.mean_ptc);
        put("PPC", e.mean_ppc);
        c.summary["PF"] = c.provider_fairness[0].delta;
        c.summary["PF_age"] = c.provider_fairness[1].delta;
        m.cutoffs.push_back(std::move(c));
    }

    for (auto k : fidelity_cutoffs) m.fidelity_sweep.emplace_back(k, fidelity_at_k(lists, k));
    return m;
}

}  // namespace kgaudit
