#include "kgaudit/commands.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "kgaudit/error.hpp"
#include "kgaudit/evaluate.hpp"
#include "text.hpp"

namespace kgaudit {

namespace fs = std::filesystem;

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_list(std::string_view s, char sep = ',') {
    std::vector<std::string_view> out;
    for (std::size_t pos = 0; pos <= s.size();) {
        auto end = s.find(sep, pos);
        if (end == std::string_view::npos) end = s.size();
        if (auto item = trim(s.substr(pos, end - pos)); !item.empty()) out.push_back(item);
        pos = end + 1;
    }
    return out;
}

template <class T>
T parse_number(std::string_view s, std::string_view key) {
    T v{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw UsageError(fmt::format("{}: '{}' is not a valid number", key, s));
    return v;
}

bool parse_bool(std::string_view s, std::string_view key) {
    if (s == "true" || s == "yes" || s == "1" || s == "on") return true;
    if (s == "false" || s == "no" || s == "0" || s == "off") return false;
    throw UsageError(fmt::format("{}: expected true or false, got '{}'", key, s));
}

char parse_delimiter(std::string_view s) {
    if (s == "tab" || s == "\\t") return '\t';
    if (s == "comma") return ',';
    if (s == "space") return ' ';
    if (s.size() == 1) return s.front();
    throw UsageError(fmt::format("delimiter: unsupported value '{}'", s));
}

PathSelection parse_selection(std::string_view s) {
    if (s == "recent") return PathSelection::recent_first;
    if (s == "oldest") return PathSelection::oldest_first;
    throw UsageError(fmt::format("path_selection: expected recent or oldest, got '{}'", s));
}

std::string_view to_string(PathSelection s) { return s == PathSelection::recent_first ? "recent" : "oldest"; }

fs::path resolve(const fs::path& base, std::string_view v) {
    fs::path p{std::string(v)};
    return p.is_relative() && !base.empty() ? base / p : p;
}

void write_file(const fs::path& p, std::string_view content) {
    auto out = text::open_output(p);
    out << content;
}

Json read_json(const fs::path& p) {
    auto in = text::open_input(p);
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(p.filename().string(), 0, e.what());
    }
}

/// Inputs of a directory keyed "<prefix>/<file>", sorted by file name.
void checksum_dir(Provenance& prov, const fs::path& dir, std::string_view prefix) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file()) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files)
        prov.inputs.emplace_back(fmt::format("{}/{}", prefix, f.filename().string()), sha256_file(f));
}

Provenance provenance_of(const RunConfig& cfg) { return Provenance{cfg.hash(), cfg.seed, {}}; }

std::vector<ProductId> sorted_unique(std::vector<ProductId> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

}  // namespace

MethodSpec parse_method_spec(std::string_view s) {
    auto eq = s.find('=');
    if (eq == std::string_view::npos || eq == 0) throw UsageError(fmt::format("method '{}': expected name=recs[,paths]", s));
    MethodSpec m;
    m.name = std::string(trim(s.substr(0, eq)));
    auto files = split_list(s.substr(eq + 1));
    if (files.empty() || files.size() > 2) throw UsageError(fmt::format("method '{}': expected name=recs[,paths]", s));
    m.recs = std::string(files[0]);
    if (files.size() == 2) m.paths = std::string(files[1]);
    return m;
}

std::vector<std::size_t> parse_cutoffs(std::string_view s) {
    std::vector<std::size_t> out;
    for (auto item : split_list(s)) {
        auto k = parse_number<std::size_t>(item, "cutoffs");
        if (k == 0) throw UsageError("cutoffs must be positive");
        out.push_back(k);
    }
    if (out.empty()) throw UsageError("cutoffs: empty list");
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::set<std::string> parse_formats(std::string_view s) {
    std::set<std::string> out;
    for (auto item : split_list(s)) {
        if (item != "json" && item != "csv" && item != "svg")
            throw UsageError(fmt::format("format: unknown output format '{}' (json, csv, svg)", item));
        out.emplace(item);
    }
    if (out.empty()) throw UsageError("format: empty list");
    return out;
}

std::size_t RunConfig::list_length() const {
    return baseline_k ? baseline_k : *std::max_element(cutoffs.begin(), cutoffs.end());
}

void RunConfig::validate() const {
    preprocess.validate();
    split.validate();
    if (cutoffs.empty()) throw UsageError("at least one cutoff is required");
    if (!(beta > 0.0 && beta <= 1.0)) throw UsageError("beta must lie in (0, 1]");
    if (workers == 0) throw UsageError("workers must be at least 1");
    if (max_hops < 2) throw UsageError("max_hops must be at least 2");
    if (list_length() < *std::max_element(cutoffs.begin(), cutoffs.end()))
        throw UsageError("baseline_k is smaller than the largest cutoff");
}

std::string RunConfig::canonical() const {
    std::string out;
    auto put = [&](std::string_view k, const auto& v) { out += fmt::format("{} = {}\n", k, v); };
    auto name = [](const fs::path& p) { return p.filename().string(); };
    auto list = [](const auto& xs) { return fmt::format("{}", fmt::join(xs, ",")); };
    put("dataset", dataset);
    put("interactions", name(inputs.interactions));
    put("kg_triples", name(inputs.kg_triples));
    put("entity_types", name(inputs.entity_types));
    put("user_attributes", name(inputs.user_attributes));
    put("product_providers", name(inputs.product_providers));
    put("provider_attributes", name(inputs.provider_attributes));
    put("delimiter", static_cast<int>(format.delimiter));
    put("min_user_interactions", preprocess.min_user_interactions);
    put("min_product_interactions", preprocess.min_product_interactions);
    put("min_relation_share", format_number(preprocess.min_relation_share));
    put("category_relation", preprocess.category_relation);
    put("provider_relation", preprocess.provider_relation);
    put("require_attributes", preprocess.require_attributes);
    put("sample_users", preprocess.sample_users);
    put("train_fraction", format_number(split.train_fraction));
    put("valid_fraction", format_number(split.valid_fraction));
    put("test_fraction", format_number(split.test_fraction));
    put("cutoffs", list(cutoffs));
    put("fidelity_cutoffs", list(fidelity_cutoffs));
    put("beta", format_number(beta));
    put("seed", seed);
    put("max_hops", max_hops);
    put("interaction_relation", interaction_relation);
    put("path_selection", to_string(selection));
    put("path_policy", to_string(path_policy));
    put("baseline_k", list_length());
    for (const auto& m : methods) put("method", fmt::format("{}={},{}", m.name, name(m.recs), name(m.paths)));
    for (const auto& [m, c] : grouping) put("group", fmt::format("{}={}", m, c));
    if (compare_cutoff) put("compare_cutoff", *compare_cutoff);
    return out;
}

std::string RunConfig::hash() const { return sha256_hex(canonical()); }

void apply_config(RunConfig& cfg, std::istream& in, const fs::path& base, std::string_view source) {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto s = trim(line);
        if (s.empty() || s.front() == '#') continue;
        auto eq = s.find('=');
        if (eq == std::string_view::npos) throw ParseError(std::string(source), lineno, "expected key = value");
        auto key = trim(s.substr(0, eq));
        auto v = trim(s.substr(eq + 1));
        try {
            if (key == "dataset") cfg.dataset = std::string(v);
            else if (key == "interactions") cfg.inputs.interactions = resolve(base, v);
            else if (key == "kg_triples") cfg.inputs.kg_triples = resolve(base, v);
            else if (key == "entity_types") cfg.inputs.entity_types = resolve(base, v);
            else if (key == "user_attributes") cfg.inputs.user_attributes = resolve(base, v);
            else if (key == "product_providers") cfg.inputs.product_providers = resolve(base, v);
            else if (key == "provider_attributes") cfg.inputs.provider_attributes = resolve(base, v);
            else if (key == "delimiter") cfg.format.delimiter = parse_delimiter(v);
            else if (key == "min_user_interactions") cfg.preprocess.min_user_interactions = parse_number<std::size_t>(v, key);
            else if (key == "min_product_interactions") cfg.preprocess.min_product_interactions = parse_number<std::size_t>(v, key);
            else if (key == "min_relation_share") cfg.preprocess.min_relation_share = parse_number<double>(v, key);
            else if (key == "category_relation") cfg.preprocess.category_relation = std::string(v);
            else if (key == "provider_relation") cfg.preprocess.provider_relation = std::string(v);
            else if (key == "require_attributes") cfg.preprocess.require_attributes = parse_bool(v, key);
            else if (key == "sample_users") cfg.preprocess.sample_users = parse_number<std::size_t>(v, key);
            else if (key == "train_fraction") cfg.split.train_fraction = parse_number<double>(v, key);
            else if (key == "valid_fraction") cfg.split.valid_fraction = parse_number<double>(v, key);
            else if (key == "test_fraction") cfg.split.test_fraction = parse_number<double>(v, key);
            else if (key == "cutoffs") cfg.cutoffs = parse_cutoffs(v);
            else if (key == "fidelity_cutoffs") cfg.fidelity_cutoffs = parse_cutoffs(v);
            else if (key == "beta") cfg.beta = parse_number<double>(v, key);
            else if (key == "seed") cfg.seed = parse_number<std::uint64_t>(v, key);
            else if (key == "out_dir") cfg.out_dir = resolve(base, v);
            else if (key == "format") cfg.formats = parse_formats(v);
            else if (key == "workers") cfg.workers = parse_number<unsigned>(v, key);
            else if (key == "max_hops") cfg.max_hops = parse_number<std::size_t>(v, key);
            else if (key == "interaction_relation") cfg.interaction_relation = std::string(v);
            else if (key == "path_selection") cfg.selection = parse_selection(v);
            else if (key == "path_policy") cfg.path_policy = parse_path_policy(v);
            else if (key == "baseline_k") cfg.baseline_k = parse_number<std::size_t>(v, key);
            else if (key == "method") {
                auto m = parse_method_spec(v);
                m.recs = resolve(base, m.recs.string());
                if (!m.paths.empty()) m.paths = resolve(base, m.paths.string());
                cfg.methods.push_back(std::move(m));
            } else if (key == "report") cfg.reports.push_back(resolve(base, v));
            else if (key == "group") {
                auto g = v.find('=');
                if (g == std::string_view::npos) throw UsageError("group: expected method=class");
                cfg.grouping[std::string(trim(v.substr(0, g)))] = std::string(trim(v.substr(g + 1)));
            } else if (key == "compare_cutoff") cfg.compare_cutoff = parse_number<std::size_t>(v, key);
            else throw UsageError(fmt::format("unknown key '{}'", key));
        } catch (const UsageError& e) {
            throw ParseError(std::string(source), lineno, e.what());
        }
    }
}

RunConfig load_config(const fs::path& file) {
    RunConfig cfg;
    auto in = text::open_input(file);
    apply_config(cfg, in, file.parent_path(), file.filename().string());
    return cfg;
}

PreprocessResult cmd_preprocess(const RunConfig& cfg, std::ostream& log) {
    if (cfg.inputs.interactions.empty() || cfg.inputs.kg_triples.empty() || cfg.inputs.entity_types.empty())
        throw UsageError("preprocess needs interactions, kg_triples and entity_types inputs");
    auto pcfg = cfg.preprocess;
    pcfg.seed = cfg.seed;
    auto result = preprocess(load_raw(cfg.inputs, cfg.format), pcfg);

    Layout layout{cfg.out_dir};
    fs::remove_all(layout.bundle());
    save_bundle(result.bundle, layout.bundle());

    Provenance prov = provenance_of(cfg);
    auto add = [&](std::string_view role, const fs::path& p) {
        if (!p.empty()) prov.inputs.emplace_back(role, sha256_file(p));
    };
    add("interactions", cfg.inputs.interactions);
    add("kg_triples", cfg.inputs.kg_triples);
    add("entity_types", cfg.inputs.entity_types);
    add("user_attributes", cfg.inputs.user_attributes);
    add("product_providers", cfg.inputs.product_providers);
    add("provider_attributes", cfg.inputs.provider_attributes);

    const auto& l = result.log;
    Json j;
    j["provenance"] = to_json(prov);
    j["dataset"] = cfg.dataset;
    j["stats_before_kcore"] = to_json(result.stats_before_kcore);
    j["stats"] = to_json(result.stats);
    j["log"] = {{"users_missing_attributes", l.users_missing_attributes},
                {"triples_before", l.triples_before},
                {"triples_after_head_rule", l.triples_after_head_rule},
                {"pruned_relations", l.pruned_relations},
                {"interactions_unaligned", l.interactions_unaligned},
                {"interactions_kcore_removed", l.interactions_kcore_removed},
                {"duplicate_triples", l.duplicate_triples},
                {"duplicate_interactions", l.duplicate_interactions}};
    write_file(cfg.out_dir / "stats.json", j.dump(2) + "\n");
    fmt::print(log, "preprocess: {} users, {} products, {} interactions, {} triples\n", result.stats.users,
               result.stats.products, result.stats.interactions, result.stats.relations);
    return result;
}

SplitBundle cmd_split(const RunConfig& cfg, std::ostream& log) {
    Layout layout{cfg.out_dir};
    auto bundle = load_bundle(layout.bundle());
    auto split = chronological_split(bundle.interactions, cfg.split);
    fs::remove_all(layout.split());
    save_split(split, bundle.labels, layout.split());
    Json j = {{"provenance", to_json(provenance_of(cfg))},
              {"users", split.users.size()},
              {"dropped_users", split.dropped_users},
              {"train", split.train.size()},
              {"valid", split.valid.size()},
              {"test", split.test.size()}};
    write_file(layout.split() / "split.json", j.dump(2) + "\n");
    fmt::print(log, "split: {} users ({} dropped), {}/{}/{} interactions\n", split.users.size(), split.dropped_users,
               split.train.size(), split.valid.size(), split.test.size());
    return split;
}

void cmd_baseline(const RunConfig& cfg, std::ostream& log) {
    Layout layout{cfg.out_dir};
    auto bundle = load_bundle(layout.bundle());
    auto split = load_split(layout.split(), bundle.labels);
    const auto k = cfg.list_length();

    Labels labels = bundle.labels;
    PathCountOptions opts{cfg.max_hops, labels.relations.intern(cfg.interaction_relation), cfg.selection};
    InteractionIndex train(split.train);
    auto popularity = train_mostpop(split.train, bundle.catalog);

    std::vector<std::vector<ProductId>> seen(labels.users.size());
    for (const auto& x : split.train) seen[x.user.index()].push_back(x.product);
    for (const auto& x : split.valid) seen[x.user.index()].push_back(x.product);

    std::vector<RecommendedList> mostpop, pathcount;
    std::size_t skipped = 0;
    for (const auto& part : split.users) {
        auto s = sorted_unique(std::move(seen[part.user.index()]));
        mostpop.push_back(recommend_mostpop(popularity, part.user, k, s));
        if (train.products_of(part.user).empty()) {
            ++skipped;
            continue;
        }
        pathcount.push_back(recommend_pathcount(bundle.kg, train, part.user, k, bundle.catalog, s, opts));
    }

    auto dir = layout.baselines();
    fs::remove_all(dir);
    {
        auto out = text::open_output(dir / "mostpop" / "recs.tsv");
        write_recommendations(out, mostpop, labels);
    }
    {
        auto out = text::open_output(dir / "pathcount" / "recs.tsv");
        write_recommendations(out, pathcount, labels);
    }
    {
        auto out = text::open_output(dir / "pathcount" / "paths.tsv");
        write_paths(out, pathcount, labels, bundle.catalog);
    }
    fmt::print(log, "baseline: {} lists of length {} per method ({} users without training data)\n", mostpop.size(),
               k, skipped);
}

EvaluationReport cmd_evaluate(const RunConfig& cfg, std::ostream& log) {
    Layout layout{cfg.out_dir};
    auto bundle = load_bundle(layout.bundle());
    auto split = load_split(layout.split(), bundle.labels);
    EvaluationContext ctx(bundle, split, cfg.beta, cfg.list_length());

    auto methods = cfg.methods;
    if (methods.empty()) {
        methods.push_back({"mostpop", layout.baselines() / "mostpop" / "recs.tsv", {}});
        methods.push_back({"pathcount", layout.baselines() / "pathcount" / "recs.tsv",
                           layout.baselines() / "pathcount" / "paths.tsv"});
    }
    {
        std::set<std::string> names;
        for (const auto& m : methods)
            if (!names.insert(m.name).second) throw UsageError("duplicate method name '" + m.name + "'");
    }

    EvaluationReport report;
    report.dataset = cfg.dataset;
    report.stats = compute_stats(bundle);
    report.cutoffs = cfg.cutoffs;
    report.fidelity_cutoffs = cfg.fidelity_cutoffs;
    report.provenance = provenance_of(cfg);
    checksum_dir(report.provenance, layout.bundle(), "bundle");
    for (const char* f : {"train.tsv", "valid.tsv", "test.tsv"})
        report.provenance.inputs.emplace_back(fmt::format("split/{}", f), sha256_file(layout.split() / f));

    Labels labels = bundle.labels;
    PathValidationContext pctx{bundle.kg, ctx.train_index(), &ctx.weights(), cfg.path_policy};
    for (const auto& m : methods) {
        report.provenance.inputs.emplace_back(m.name + ":recs", sha256_file(m.recs));
        if (!m.paths.empty()) report.provenance.inputs.emplace_back(m.name + ":paths", sha256_file(m.paths));
        auto output = load_method_output(m.name, m.recs, m.paths, labels, pctx);
        report.methods.push_back(evaluate_method(ctx, output, cfg.cutoffs, cfg.fidelity_cutoffs, cfg.workers));
        const auto& s = report.methods.back().cutoffs.front().summary;
        fmt::print(log, "evaluate: {} k={} NDCG={} FID={}\n", m.name, cfg.cutoffs.front(),
                   s.contains("NDCG") ? format_number(s.at("NDCG")) : "n/a",
                   s.contains("FID") ? format_number(s.at("FID")) : "n/a");
    }

    auto dir = layout.report();
    fs::remove_all(dir);
    fs::create_directories(dir);
    if (cfg.formats.contains("json")) write_file(dir / "report.json", to_json(report).dump(2) + "\n");
    if (cfg.formats.contains("csv")) {
        write_file(dir / "metrics.csv", metrics_csv(report));
        write_file(dir / "fidelity.csv", fidelity_csv(report));
        write_file(dir / "fairness.csv", fairness_csv(report));
        write_file(dir / "tests.csv", tests_csv(report));
        for (const auto& m : report.methods)
            for (const auto& c : m.cutoffs)
                write_file(dir / "per_user" / fmt::format("{}_k{}.csv", m.name, c.k),
                           per_user_csv(report, m, c, bundle.labels, ctx.users()));
    }
    if (cfg.formats.contains("svg"))
        for (const auto& [stem, svg] : report_figures(report)) write_file(dir / "figures" / (stem + ".svg"), svg);
    return report;
}

CompareTable cmd_compare(const RunConfig& cfg, std::ostream& log) {
    if (cfg.reports.empty()) throw UsageError("compare needs at least one report");
    std::vector<ReportSummary> summaries;
    for (const auto& p : cfg.reports) summaries.push_back(summarize_report(read_json(p)));
    auto table = compare_reports(summaries, cfg.grouping, cfg.compare_cutoff);

    auto dir = Layout{cfg.out_dir}.compare();
    fs::create_directories(dir);
    if (cfg.formats.contains("json")) write_file(dir / "compare.json", to_json(table).dump(2) + "\n");
    if (cfg.formats.contains("csv")) write_file(dir / "compare.csv", compare_csv(table));
    auto md = compare_markdown(table);
    write_file(dir / "compare.md", md);
    log << md;
    return table;
}

Json cmd_stats(const RunConfig& cfg) {
    auto bundle = load_bundle(Layout{cfg.out_dir}.bundle());
    auto stats = compute_stats(bundle);
    return {{"dataset", cfg.dataset}, {"fingerprint", dataset_fingerprint(cfg.dataset, stats)},
            {"stats", to_json(stats)}};
}

}  // namespace kgaudit
