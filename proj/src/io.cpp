#include "kgaudit/io.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>
#include <json.hpp>

#include "text.hpp"

namespace kgaudit {

namespace fs = std::filesystem;

std::string format_number(double v) { return nlohmann::json(v).dump(); }

std::string format_path(const ReasoningPath& path, const Labels& labels, std::span<const ProductId> catalog) {
    std::string out = "U" + labels.users.label(path.user);
    for (const auto& h : path.hops) {
        out += ' ';
        out += labels.relations.label(h.relation);
        if (h.direction == Direction::inverse) out += kInverseSuffix;
        out += ' ';
        out += std::binary_search(catalog.begin(), catalog.end(), h.entity) ? 'P' : 'E';
        out += labels.entities.label(h.entity);
    }
    return out;
}

ReasoningPath parse_path(std::string_view text, Labels& labels) {
    std::vector<std::string_view> tokens;
    for (std::size_t pos = 0; pos < text.size();) {
        auto end = text.find(' ', pos);
        if (end == std::string_view::npos) end = text.size();
        if (end > pos) tokens.push_back(text.substr(pos, end - pos));
        pos = end + 1;
    }
    if (tokens.size() % 2 == 0) throw ValidationError("path string has an even number of tokens");
    if (tokens.size() < 5) throw ValidationError("path string needs at least two hops");
    if (tokens.front().size() < 2 || tokens.front().front() != 'U')
        throw ValidationError("path string must start with a U<user> token");
    if (tokens.back().size() < 2 || tokens.back().front() != 'P')
        throw ValidationError("path string must end with a P<product> token");

    ReasoningPath path;
    auto user = labels.users.find(tokens.front().substr(1));
    if (!user) throw ValidationError("path references unknown user " + std::string(tokens.front().substr(1)));
    path.user = *user;
    for (std::size_t i = 1; i + 1 < tokens.size(); i += 2) {
        auto rel = tokens[i];
        auto dir = Direction::forward;
        if (rel.size() > kInverseSuffix.size() && rel.ends_with(kInverseSuffix)) {
            rel.remove_suffix(kInverseSuffix.size());
            dir = Direction::inverse;
        }
        auto ent = tokens[i + 1];
        if (ent.size() < 2 || (ent.front() != 'E' && ent.front() != 'P'))
            throw ValidationError("path entity token '" + std::string(ent) + "' lacks an E or P prefix");
        auto e = labels.entities.find(ent.substr(1));
        if (!e) throw ValidationError("path references unknown entity " + std::string(ent.substr(1)));
        path.hops.push_back({labels.relations.intern(rel), dir, *e});
    }
    return path;
}

PathPolicy parse_path_policy(std::string_view s) {
    if (s == "first") return PathPolicy::first;
    if (s == "max-LIR" || s == "max-lir") return PathPolicy::max_lir;
    if (s == "max-SEP" || s == "max-sep") return PathPolicy::max_sep;
    throw UsageError("unknown path policy '" + std::string(s) + "' (first | max-LIR | max-SEP)");
}

std::string_view to_string(PathPolicy p) noexcept {
    switch (p) {
    case PathPolicy::first: return "first";
    case PathPolicy::max_lir: return "max-LIR";
    case PathPolicy::max_sep: return "max-SEP";
    }
    return "first";
}

namespace {

struct PathRow {
    UserId user;
    ProductId product;
    ReasoningPath path;
};

double policy_score(const ReasoningPath& p, const PathValidationContext& ctx) {
    if (ctx.weights == nullptr) throw UsageError("path policy needs explanation weights");
    if (ctx.policy == PathPolicy::max_lir) return ctx.weights->recency(p.user, p.linking_product()).value_or(0.0);
    return ctx.weights->popularity(shared_entity_of(p));
}

}  // namespace

MethodOutput load_method_output(std::string name, const fs::path& recs, const fs::path& paths, Labels& labels,
                                const PathValidationContext& ctx) {
    MethodOutput out;
    out.name = std::move(name);

    struct Row {
        std::size_t rank;
        ProductId product;
        double score;
        std::size_t line;
    };
    std::map<UserId, std::vector<Row>> rows_by_user;
    {
        auto in = text::open_input(recs);
        text::RowReader rows(in, '\t', recs.filename().string());
        while (rows.next()) {
            rows.expect_arity(4);
            const auto& f = rows.fields();
            auto user = labels.users.find(f[0]);
            if (!user) rows.fail("unknown user '" + std::string(f[0]) + "'");
            auto rank = rows.to_int(1);
            if (rank < 1) rows.fail("rank must be >= 1");
            auto product = labels.entities.find(f[2]);
            if (!product) rows.fail("unknown product '" + std::string(f[2]) + "'");
            rows_by_user[*user].push_back({static_cast<std::size_t>(rank), *product, rows.to_double(3), rows.line()});
        }
    }

    // (user, product) -> candidate paths in file order.
    std::map<std::pair<UserId, ProductId>, std::vector<ReasoningPath>> candidates;
    if (!paths.empty()) {
        auto in = text::open_input(paths);
        text::RowReader rows(in, '\t', paths.filename().string());
        while (rows.next()) {
            rows.expect_arity(3);
            const auto& f = rows.fields();
            auto user = labels.users.find(f[0]);
            if (!user) rows.fail("unknown user '" + std::string(f[0]) + "'");
            auto product = labels.entities.find(f[1]);
            if (!product) rows.fail("unknown product '" + std::string(f[1]) + "'");
            ++out.log.paths_read;
            try {
                candidates[{*user, *product}].push_back(parse_path(f[2], labels));
            } catch (const ValidationError&) {
                ++out.log.invalid_paths["malformed"];
            }
        }
    }

    std::size_t matched = 0;
    for (auto& [user, rows] : rows_by_user) {
        std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.rank < b.rank; });
        RecommendedList list{user, {}, false};
        for (const auto& r : rows) {
            RecEntry e{r.rank, r.product, r.score, std::nullopt};
            if (auto it = candidates.find({user, r.product}); it != candidates.end()) {
                ++matched;
                const ReasoningPath* chosen = nullptr;
                double best = 0.0;
                for (const auto& p : it->second) {
                    auto check = validate_path(p, user, r.product, ctx.kg, ctx.train);
                    if (check != PathCheck::ok) {
                        ++out.log.invalid_paths[std::string(to_string(check))];
                        continue;
                    }
                    if (ctx.policy == PathPolicy::first) {
                        if (chosen == nullptr) chosen = &p;
                        continue;
                    }
                    double s = policy_score(p, ctx);
                    if (chosen == nullptr || s > best) {
                        chosen = &p;
                        best = s;
                    }
                }
                if (chosen != nullptr) {
                    e.path = *chosen;
                    ++out.log.paths_attached;
                }
            }
            list.entries.push_back(std::move(e));
        }
        try {
            check_list(list);
        } catch (const ValidationError& err) {
            throw ValidationError(fmt::format("{}: user {} (line {}): {}", recs.filename().string(),
                                              labels.users.label(user), rows.front().line, err.what()));
        }
        out.log.entries += list.entries.size();
        out.lists.push_back(std::move(list));
    }
    out.log.paths_without_entry = candidates.size() - matched;
    return out;
}

void write_recommendations(std::ostream& out, std::span<const RecommendedList> lists, const Labels& labels) {
    for (const auto& l : lists)
        for (const auto& e : l.entries)
            fmt::print(out, "{}\t{}\t{}\t{}\n", labels.users.label(l.user), e.rank, labels.entities.label(e.product),
                       format_number(e.score));
}

void write_paths(std::ostream& out, std::span<const RecommendedList> lists, const Labels& labels,
                 std::span<const ProductId> catalog) {
    for (const auto& l : lists)
        for (const auto& e : l.entries)
            if (e.path)
                fmt::print(out, "{}\t{}\t{}\n", labels.users.label(l.user), labels.entities.label(e.product),
                           format_path(*e.path, labels, catalog));
}

void write_interactions(std::ostream& out, std::span<const Interaction> xs, const Labels& labels) {
    for (const auto& x : xs)
        fmt::print(out, "{}\t{}\t{}\t{}\n", labels.users.label(x.user), labels.entities.label(x.product),
                   x.rating, x.timestamp);
}

void save_split(const SplitBundle& split, const Labels& labels, const fs::path& dir) {
    fs::create_directories(dir);
    auto write = [&](const char* name, const std::vector<Interaction>& xs) {
        auto out = text::open_output(dir / name);
        write_interactions(out, xs, labels);
    };
    write("train.tsv", split.train);
    write("valid.tsv", split.valid);
    write("test.tsv", split.test);
}

SplitBundle load_split(const fs::path& dir, const Labels& labels) {
    if (!fs::exists(dir / "train.tsv")) throw UsageError("no split found in " + dir.string());
    SplitBundle split;
    auto read = [&](const char* name) {
        auto in = text::open_input(dir / name);
        Labels scratch = labels;
        auto xs = parse_interactions(in, scratch, {}, name);
        if (scratch.users.size() != labels.users.size() || scratch.entities.size() != labels.entities.size())
            throw ValidationError(std::string(name) + " references labels outside the preprocessed bundle");
        return xs;
    };
    split.train = read("train.tsv");
    split.valid = read("valid.tsv");
    split.test = read("test.tsv");
    std::map<UserId, UserPartition> parts;
    for (const auto& x : split.train) ++parts.try_emplace(x.user, UserPartition{x.user}).first->second.train_count;
    for (const auto& x : split.valid) ++parts.try_emplace(x.user, UserPartition{x.user}).first->second.valid_count;
    for (const auto& x : split.test) ++parts.try_emplace(x.user, UserPartition{x.user}).first->second.test_count;
    for (const auto& [_, p] : parts) split.users.push_back(p);
    return split;
}

}  // namespace kgaudit
