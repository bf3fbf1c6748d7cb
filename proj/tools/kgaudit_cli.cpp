// kgaudit command-line front end.

#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "kgaudit/commands.hpp"
#include "kgaudit/error.hpp"

using namespace kgaudit;

namespace {

struct Flags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    std::string format;
    std::string cutoffs;
    std::optional<bool> require_attributes;

    std::string dataset;
    std::string interactions, kg_triples, entity_types, user_attributes, product_providers, provider_attributes;
    std::vector<std::string> methods;
    std::vector<std::string> reports;
    std::vector<std::string> groups;
    std::optional<std::size_t> compare_cutoff;
    std::optional<unsigned> workers;
    std::optional<double> beta;
    std::string path_policy;
};

RunConfig build_config(const Flags& f) {
    RunConfig cfg = f.config.empty() ? RunConfig{} : load_config(f.config);
    if (f.seed) cfg.seed = *f.seed;
    if (!f.out_dir.empty()) cfg.out_dir = f.out_dir;
    if (!f.format.empty()) cfg.formats = parse_formats(f.format);
    if (!f.cutoffs.empty()) cfg.cutoffs = parse_cutoffs(f.cutoffs);
    if (f.require_attributes) cfg.preprocess.require_attributes = *f.require_attributes;
    if (!f.dataset.empty()) cfg.dataset = f.dataset;
    auto set_path = [](std::filesystem::path& dst, const std::string& v) {
        if (!v.empty()) dst = v;
    };
    set_path(cfg.inputs.interactions, f.interactions);
    set_path(cfg.inputs.kg_triples, f.kg_triples);
    set_path(cfg.inputs.entity_types, f.entity_types);
    set_path(cfg.inputs.user_attributes, f.user_attributes);
    set_path(cfg.inputs.product_providers, f.product_providers);
    set_path(cfg.inputs.provider_attributes, f.provider_attributes);
    if (!f.methods.empty()) {
        cfg.methods.clear();
        for (const auto& m : f.methods) cfg.methods.push_back(parse_method_spec(m));
    }
    for (const auto& r : f.reports) cfg.reports.emplace_back(r);
    for (const auto& g : f.groups) {
        auto eq = g.find('=');
        if (eq == std::string::npos || eq == 0) throw UsageError("--group expects method=class, got '" + g + "'");
        cfg.grouping[g.substr(0, eq)] = g.substr(eq + 1);
    }
    if (f.compare_cutoff) cfg.compare_cutoff = *f.compare_cutoff;
    if (f.workers) cfg.workers = *f.workers;
    if (f.beta) cfg.beta = *f.beta;
    if (!f.path_policy.empty()) cfg.path_policy = parse_path_policy(f.path_policy);
    cfg.validate();
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Audit knowledge-graph recommenders for recommendation quality and fairness"};
    app.set_version_flag("--version", std::string(kToolVersion));
    app.require_subcommand(1);
    Flags f;

    app.add_option("--config", f.config, "key = value configuration file")->check(CLI::ExistingFile);
    app.add_option("--seed", f.seed, "Seed for every random choice");
    app.add_option("--out-dir", f.out_dir, "Output directory");
    app.add_option("--format", f.format, "Report formats: json,csv,svg");
    app.add_option("--cutoffs", f.cutoffs, "Comma-separated list cutoffs k");
    app.add_flag("--require-attributes,!--no-require-attributes", f.require_attributes,
                 "Drop users lacking gender or age");
    app.add_option("--dataset", f.dataset, "Dataset name used in reports");
    app.add_option("--workers", f.workers, "Evaluation threads")->check(CLI::PositiveNumber);

    auto* pre = app.add_subcommand("preprocess", "Filter and align raw data into a bundle");
    pre->add_option("--interactions", f.interactions)->check(CLI::ExistingFile);
    pre->add_option("--kg-triples", f.kg_triples)->check(CLI::ExistingFile);
    pre->add_option("--entity-types", f.entity_types)->check(CLI::ExistingFile);
    pre->add_option("--user-attributes", f.user_attributes)->check(CLI::ExistingFile);
    pre->add_option("--product-providers", f.product_providers)->check(CLI::ExistingFile);
    pre->add_option("--provider-attributes", f.provider_attributes)->check(CLI::ExistingFile);

    auto* split = app.add_subcommand("split", "Chronological train/valid/test split");
    auto* baseline = app.add_subcommand("baseline", "Run the most-popular and path-count baselines");

    auto* evaluate = app.add_subcommand("evaluate", "Evaluate method outputs");
    evaluate->add_option("--method", f.methods, "name=recs.tsv[,paths.tsv]; repeatable");
    evaluate->add_option("--beta", f.beta, "Recency smoothing factor");
    evaluate->add_option("--path-policy", f.path_policy, "first | max-LIR | max-SEP");

    auto* compare = app.add_subcommand("compare", "Significance of differences between method classes");
    compare->add_option("reports", f.reports, "report.json files")->check(CLI::ExistingFile);
    compare->add_option("--group", f.groups, "method=class; repeatable");
    compare->add_option("--cutoff", f.compare_cutoff, "Cutoff to compare");

    auto* stats = app.add_subcommand("stats", "Print statistics of the preprocessed bundle");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        auto cfg = build_config(f);
        auto& log = std::cerr;
        if (pre->parsed()) cmd_preprocess(cfg, log);
        else if (split->parsed()) cmd_split(cfg, log);
        else if (baseline->parsed()) cmd_baseline(cfg, log);
        else if (evaluate->parsed()) cmd_evaluate(cfg, log);
        else if (compare->parsed()) cmd_compare(cfg, std::cout);
        else if (stats->parsed()) std::cout << cmd_stats(cfg).dump(2) << '\n';
        return 0;
    } catch (const Error& e) {
        std::cerr << "kgaudit: " << e.what() << '\n';
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "kgaudit: internal error: " << e.what() << '\n';
        return 4;
    }
}
