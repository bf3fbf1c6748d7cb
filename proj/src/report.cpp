#include "kgaudit/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "kgaudit/error.hpp"
#include "text.hpp"

namespace kgaudit {

namespace fs = std::filesystem;

std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw Error("SHA-256 failed");
    std::string out;
    for (unsigned i = 0; i < len; ++i) out += fmt::format("{:02x}", digest[i]);
    return out;
}

std::string sha256_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw UsageError("cannot open " + p.string());
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
    EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof buf);
        if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf, static_cast<std::size_t>(in.gcount()));
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), digest, &len);
    std::string out;
    for (unsigned i = 0; i < len; ++i) out += fmt::format("{:02x}", digest[i]);
    return out;
}

namespace {

Json opt(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

std::string opt_csv(const std::optional<double>& v) { return v ? format_number(*v) : std::string{}; }

std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

std::string xml_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

Json to_json(const FairnessReport& f) {
    Json groups = Json::array();
    for (const auto& g : f.groups) groups.push_back({{"group", g.label}, {"members", g.members}, {"mean", opt(g.mean)}});
    return {{"metric", f.metric},
            {"dimension", to_string(f.dimension)},
            {"side", to_string(f.side)},
            {"groups", groups},
            {"delta", f.delta},
            {"empty_groups", f.empty_groups}};
}

Json to_json(const std::optional<TestResult>& r, const std::string& note) {
    if (!r) return {{"test", nullptr}, {"note", note}};
    return {{"test", to_string(r->kind)}, {"statistic", r->statistic}, {"dof", r->dof}, {"p_value", r->p_value}};
}

Json to_json(const LoadLog& log) {
    Json invalid = Json::object();
    for (const auto& [reason, n] : log.invalid_paths) invalid[reason] = n;
    return {{"entries", log.entries},
            {"paths_read", log.paths_read},
            {"paths_attached", log.paths_attached},
            {"invalid_paths", invalid},
            {"paths_without_entry", log.paths_without_entry}};
}

Json to_json(const CutoffEvaluation& c) {
    const auto& u = c.utility;
    const auto& e = c.explanation;
    Json j;
    j["k"] = c.k;
    Json summary = Json::object();
    for (const auto& [m, v] : c.summary) summary[m] = v;
    j["summary"] = summary;
    j["utility"] = {{"NDCG", opt(u.mean_ndcg)}, {"MRR", opt(u.mean_mrr)},       {"SER", opt(u.mean_serendipity)},
                    {"DIV", opt(u.mean_diversity)}, {"NOV", opt(u.mean_novelty)}, {"COV", u.coverage}};
    j["explanation"] = {{"FID", opt(e.mean_fid)}, {"LIR", opt(e.mean_lir)}, {"LID", opt(e.mean_lid)},
                        {"SEP", opt(e.mean_sep)}, {"SED", opt(e.mean_sed)}, {"PTD", opt(e.mean_ptd)},
                        {"PTC", opt(e.mean_ptc)}, {"PPC", opt(e.mean_ppc)}, {"run_path_types", e.run_types},
                        {"run_path_patterns", e.run_patterns}};
    Json consumer = Json::array();
    for (const auto& f : c.consumer_fairness) consumer.push_back(to_json(f));
    j["consumer_fairness"] = consumer;
    Json provider = Json::array();
    for (const auto& f : c.provider_fairness) provider.push_back(to_json(f));
    j["provider_fairness"] = provider;
    Json tests = Json::array();
    for (const auto& t : c.consumer_tests) {
        Json row = {{"metric", t.metric}, {"dimension", to_string(t.dimension)}};
        row.update(to_json(t.result, t.note));
        tests.push_back(row);
    }
    j["consumer_tests"] = tests;
    return j;
}

}  // namespace

Json to_json(const DatasetStats& s) {
    return {{"users", s.users},
            {"products", s.products},
            {"interactions", s.interactions},
            {"density", s.density},
            {"entities", s.entities},
            {"entity_types", s.entity_types},
            {"relations", s.relations},
            {"relation_types", s.relation_types},
            {"kg_sparsity", s.kg_sparsity},
            {"avg_degree_overall", s.avg_degree_overall},
            {"avg_degree_products", s.avg_degree_products},
            {"gender_groups", s.gender_groups},
            {"age_groups", s.age_groups}};
}

Json to_json(const Provenance& p) {
    Json inputs = Json::object();
    for (const auto& [role, hash] : p.inputs) inputs[role] = hash;
    return {{"tool", kToolName}, {"version", kToolVersion}, {"config_hash", p.config_hash}, {"seed", p.seed},
            {"inputs", inputs}};
}

std::string dataset_fingerprint(const std::string& name, const DatasetStats& stats) {
    return sha256_hex(name + "\n" + to_json(stats).dump());
}

Json to_json(const EvaluationReport& r) {
    Json j;
    j["provenance"] = to_json(r.provenance);
    j["dataset"] = {{"name", r.dataset}, {"fingerprint", dataset_fingerprint(r.dataset, r.stats)},
                    {"stats", to_json(r.stats)}};
    j["cutoffs"] = r.cutoffs;
    j["fidelity_cutoffs"] = r.fidelity_cutoffs;
    Json methods = Json::array();
    for (const auto& m : r.methods) {
        Json mj;
        mj["name"] = m.name;
        mj["load"] = to_json(m.log);
        Json sweep = Json::array();
        for (const auto& [k, v] : m.fidelity_sweep) sweep.push_back({{"k", k}, {"FID", opt(v)}});
        mj["fidelity_sweep"] = sweep;
        Json cuts = Json::array();
        for (const auto& c : m.cutoffs) cuts.push_back(to_json(c));
        mj["cutoffs"] = cuts;
        methods.push_back(mj);
    }
    j["methods"] = methods;
    return j;
}

std::string metrics_csv(const EvaluationReport& r) {
    std::string out = "method,k,metric,value\n";
    for (const auto& m : r.methods)
        for (const auto& c : m.cutoffs)
            for (const auto& [metric, v] : c.summary)
                out += fmt::format("{},{},{},{}\n", csv_field(m.name), c.k, metric, format_number(v));
    return out;
}

std::string fidelity_csv(const EvaluationReport& r) {
    std::string out = "method,k,FID\n";
    for (const auto& m : r.methods)
        for (const auto& [k, v] : m.fidelity_sweep) out += fmt::format("{},{},{}\n", csv_field(m.name), k, opt_csv(v));
    return out;
}

std::string fairness_csv(const EvaluationReport& r) {
    std::string out = "method,k,side,dimension,metric,group,members,value\n";
    auto emit = [&](const MethodEvaluation& m, std::size_t k, const FairnessReport& f) {
        auto prefix = fmt::format("{},{},{},{},{}", csv_field(m.name), k, to_string(f.side), to_string(f.dimension),
                                  f.metric);
        for (const auto& g : f.groups)
            out += fmt::format("{},{},{},{}\n", prefix, csv_field(g.label), g.members, opt_csv(g.mean));
        out += fmt::format("{},delta,,{}\n", prefix, format_number(f.delta));
    };
    for (const auto& m : r.methods)
        for (const auto& c : m.cutoffs) {
            for (const auto& f : c.consumer_fairness) emit(m, c.k, f);
            for (const auto& f : c.provider_fairness) emit(m, c.k, f);
        }
    return out;
}

std::string tests_csv(const EvaluationReport& r) {
    std::string out = "method,k,metric,dimension,test,statistic,dof,p_value,note\n";
    for (const auto& m : r.methods)
        for (const auto& c : m.cutoffs)
            for (const auto& t : c.consumer_tests) {
                out += fmt::format("{},{},{},{},", csv_field(m.name), c.k, t.metric, to_string(t.dimension));
                if (t.result)
                    out += fmt::format("{},{},{},{},\n", to_string(t.result->kind), format_number(t.result->statistic),
                                       format_number(t.result->dof), format_number(t.result->p_value));
                else
                    out += fmt::format(",,,,{}\n", csv_field(t.note));
            }
    return out;
}

std::string per_user_csv(const EvaluationReport&, const MethodEvaluation&, const CutoffEvaluation& c,
                         const Labels& labels, std::span<const UserId> users) {
    const auto& names = per_user_metric_names();
    std::string out = "user";
    for (const auto& n : names) out += "," + n;
    out += '\n';
    std::vector<std::span<const std::optional<double>>> cols;
    for (const auto& n : names) cols.push_back(per_user_values(c, n));
    for (std::size_t i = 0; i < users.size(); ++i) {
        out += csv_field(labels.users.label(users[i]));
        for (const auto& col : cols) out += "," + opt_csv(col[i]);
        out += '\n';
    }
    return out;
}

std::string radar_svg(const std::string& title, const std::vector<std::string>& axes,
                      const std::vector<RadarSeries>& series) {
    static constexpr std::array<std::string_view, 8> palette = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                                                "#9467bd", "#8c564b", "#e377c2", "#17becf"};
    constexpr double cx = 260, cy = 250, radius = 170;
    const auto n = axes.size();
    auto at = [&](std::size_t i, double r) {
        double a = -std::numbers::pi / 2 + 2 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n);
        return std::pair{cx + r * std::cos(a), cy + r * std::sin(a)};
    };
    auto point = [&](std::size_t i, double v) { return at(i, radius * std::clamp(v, 0.0, 1.0)); };

    std::string out = fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"520\" height=\"{}\" viewBox=\"0 0 520 {}\">\n",
        520 + 18 * series.size(), 520 + 18 * series.size());
    out += fmt::format("<title>{}</title>\n", xml_escape(title));
    out += fmt::format("<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">{}</text>\n", cx,
                       xml_escape(title));
    for (double ring : {0.25, 0.5, 0.75, 1.0}) {
        std::string pts;
        for (std::size_t i = 0; i < n; ++i) {
            auto [x, y] = point(i, ring);
            pts += fmt::format("{}{:.2f},{:.2f}", i ? " " : "", x, y);
        }
        out += fmt::format("<polygon points=\"{}\" fill=\"none\" stroke=\"#ccc\"/>\n", pts);
    }
    for (std::size_t i = 0; i < n; ++i) {
        auto [x, y] = point(i, 1.0);
        auto [lx, ly] = at(i, radius + 20);
        out += fmt::format("<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"#999\"/>\n", cx, cy,
                           x, y);
        out += fmt::format(
            "<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\" font-size=\"12\" class=\"axis\">{}</text>\n", lx,
            ly, xml_escape(axes[i]));
    }
    for (std::size_t s = 0; s < series.size(); ++s) {
        const auto& sr = series[s];
        auto colour = palette[s % palette.size()];
        std::string pts;
        for (std::size_t i = 0; i < n; ++i) {
            auto [x, y] = point(i, i < sr.values.size() ? sr.values[i] : 0.0);
            pts += fmt::format("{}{:.2f},{:.2f}", i ? " " : "", x, y);
        }
        out += fmt::format("<g class=\"series\" data-series=\"{}\">\n", xml_escape(sr.name));
        out += fmt::format("<polygon points=\"{}\" fill=\"{}\" fill-opacity=\"0.15\" stroke=\"{}\"/>\n", pts, colour,
                           colour);
        for (std::size_t i = 0; i < n && i < sr.values.size(); ++i) {
            auto [x, y] = point(i, sr.values[i]);
            out += fmt::format(
                "<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"3\" fill=\"{}\" data-axis=\"{}\" data-value=\"{}\"/>\n", x, y,
                colour, xml_escape(axes[i]), format_number(sr.values[i]));
        }
        out += "</g>\n";
        out += fmt::format("<rect x=\"20\" y=\"{}\" width=\"12\" height=\"12\" fill=\"{}\"/>\n", 500 + 18 * s, colour);
        out += fmt::format("<text x=\"38\" y=\"{}\" font-size=\"12\">{}</text>\n", 510 + 18 * s, xml_escape(sr.name));
    }
    out += "</svg>\n";
    return out;
}

namespace {

/// Axes present in every series; a method lacking a value drops the axis.
std::string chart(const std::string& title, std::vector<std::string> axes,
                  const std::vector<std::pair<std::string, std::map<std::string, double>>>& rows) {
    std::sort(axes.begin(), axes.end());
    std::erase_if(axes, [&](const std::string& a) {
        return std::any_of(rows.begin(), rows.end(), [&](const auto& r) { return !r.second.contains(a); });
    });
    std::vector<RadarSeries> series;
    for (const auto& [name, values] : rows) {
        RadarSeries s{name, {}};
        for (const auto& a : axes) s.values.push_back(values.at(a));
        series.push_back(std::move(s));
    }
    return radar_svg(title, axes, series);
}

}  // namespace

std::map<std::string, std::string> report_figures(const EvaluationReport& r) {
    std::map<std::string, std::string> out;
    if (r.methods.empty() || r.cutoffs.empty()) return out;
    const auto k = r.cutoffs.front();
    auto at_k = [&](const MethodEvaluation& m) -> const CutoffEvaluation& {
        for (const auto& c : m.cutoffs)
            if (c.k == k) return c;
        throw InvariantError("method " + m.name + " lacks cutoff " + std::to_string(k));
    };

    std::vector<std::pair<std::string, std::map<std::string, double>>> summary, gender, age;
    for (const auto& m : r.methods) {
        const auto& c = at_k(m);
        summary.emplace_back(m.name, c.summary);
        std::map<std::string, double> g, a;
        for (const auto& f : c.consumer_fairness) (f.dimension == Dimension::gender ? g : a)[f.metric] = f.delta;
        gender.emplace_back(m.name, g);
        age.emplace_back(m.name, a);
    }
    out["utility"] = chart(fmt::format("Utility and beyond-utility at k={}", k),
                           {"NDCG", "MRR", "SER", "DIV", "NOV", "COV", "PF"}, summary);
    out["explanation"] = chart(fmt::format("Explanation quality at k={}", k),
                               {"FID", "LIR", "LID", "SEP", "SED", "PTD", "PTC", "PPC"}, summary);
    const std::vector<std::string> consumer_axes = {"NDCG", "MRR", "SER", "DIV", "NOV", "COV"};
    out["fairness_gender"] = chart(fmt::format("Consumer gender delta at k={}", k), consumer_axes, gender);
    out["fairness_age"] = chart(fmt::format("Consumer age delta at k={}", k), consumer_axes, age);
    return out;
}

ReportSummary summarize_report(const Json& report) {
    try {
        ReportSummary s;
        s.dataset = report.at("dataset").at("name").get<std::string>();
        s.fingerprint = report.at("dataset").at("fingerprint").get<std::string>();
        s.cutoffs = report.at("cutoffs").get<std::vector<std::size_t>>();
        for (const auto& m : report.at("methods")) {
            std::map<std::size_t, std::map<std::string, double>> by_k;
            for (const auto& c : m.at("cutoffs")) {
                auto& metrics = by_k[c.at("k").get<std::size_t>()];
                for (const auto& [metric, v] : c.at("summary").items()) metrics[metric] = v.get<double>();
            }
            s.methods.emplace_back(m.at("name").get<std::string>(), std::move(by_k));
        }
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed report: ") + e.what());
    }
}

const std::vector<std::string>& headline_order() {
    static const std::vector<std::string> order = {"NDCG", "MRR", "SER", "DIV", "NOV", "PF", "COV"};
    return order;
}

CompareTable compare_reports(std::span<const ReportSummary> reports, const std::map<std::string, std::string>& grouping,
                             std::optional<std::size_t> cutoff) {
    CompareTable table;
    std::set<std::string> classes;
    for (const auto& [_, cls] : grouping) classes.insert(cls);
    if (classes.size() != 2)
        throw UsageError(fmt::format("grouping must name exactly two classes, got {}", classes.size()));
    table.classes.assign(classes.begin(), classes.end());
    if (reports.empty()) throw UsageError("compare needs at least one report");
    const auto k = cutoff.value_or(reports.front().cutoffs.empty() ? 0 : reports.front().cutoffs.front());

    // dataset -> method -> metrics, datasets in order of first appearance.
    std::vector<std::string> datasets;
    std::map<std::string, std::string> fingerprints;
    std::map<std::string, std::map<std::string, const std::map<std::string, double>*>> by_dataset;
    for (const auto& r : reports) {
        auto [it, fresh] = fingerprints.emplace(r.dataset, r.fingerprint);
        if (fresh)
            datasets.push_back(r.dataset);
        else if (it->second != r.fingerprint)
            throw UsageError("reports for dataset '" + r.dataset + "' were computed on different data");
        for (const auto& [name, cuts] : r.methods) {
            if (!grouping.contains(name)) continue;
            auto c = cuts.find(k);
            if (c == cuts.end()) throw UsageError(fmt::format("method '{}' has no results at k={}", name, k));
            if (!by_dataset[r.dataset].emplace(name, &c->second).second)
                throw UsageError("method '" + name + "' appears twice for dataset '" + r.dataset + "'");
        }
    }

    std::set<std::string> all;
    for (const auto& [_, methods] : by_dataset)
        for (const auto& [_, metrics] : methods)
            for (const auto& [m, _] : *metrics) all.insert(m);
    for (const auto& m : headline_order())
        if (all.erase(m)) table.metrics.push_back(m);
    table.metrics.insert(table.metrics.end(), all.begin(), all.end());

    for (const auto& ds : datasets) {
        CompareRow row{ds, k, {}};
        const auto& methods = by_dataset[ds];
        for (const auto& metric : table.metrics) {
            CompareCell cell{metric, std::nullopt, {}};
            std::vector<double> a, b;
            bool absent = methods.empty();
            for (const auto& [name, metrics] : methods) {
                auto v = metrics->find(metric);
                if (v == metrics->end()) {
                    absent = true;
                    break;
                }
                (grouping.at(name) == table.classes[0] ? a : b).push_back(v->second);
            }
            if (absent) {
                cell.note = "absent";
            } else {
                try {
                    cell.result = welch_ttest(a, b);
                } catch (const UsageError& e) {
                    cell.note = e.what();
                }
            }
            row.cells.push_back(std::move(cell));
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

Json to_json(const CompareTable& t) {
    Json rows = Json::array();
    for (const auto& r : t.rows) {
        Json cells = Json::object();
        for (const auto& c : r.cells) cells[c.metric] = to_json(c.result, c.note);
        rows.push_back({{"dataset", r.dataset}, {"k", r.k}, {"metrics", cells}});
    }
    return {{"classes", t.classes}, {"metrics", t.metrics}, {"rows", rows}};
}

std::string compare_csv(const CompareTable& t) {
    std::string out = "dataset,k,metric,statistic,dof,p_value,note\n";
    for (const auto& r : t.rows)
        for (const auto& c : r.cells) {
            out += fmt::format("{},{},{},", csv_field(r.dataset), r.k, c.metric);
            if (c.result)
                out += fmt::format("{},{},{},\n", format_number(c.result->statistic), format_number(c.result->dof),
                                   format_number(c.result->p_value));
            else
                out += fmt::format(",,,{}\n", csv_field(c.note));
        }
    return out;
}

std::string compare_markdown(const CompareTable& t) {
    std::string out = fmt::format("Welch t-test p-values, {} vs {}\n\n| Dataset | k |", t.classes.at(0), t.classes.at(1));
    for (const auto& m : t.metrics) out += " " + m + " |";
    out += "\n|---|---|";
    for (std::size_t i = 0; i < t.metrics.size(); ++i) out += "---|";
    out += '\n';
    for (const auto& r : t.rows) {
        out += fmt::format("| {} | {} |", r.dataset, r.k);
        for (const auto& c : r.cells) {
            if (!c.result)
                out += " n/a |";
            else if (c.result->p_value < 0.05)
                out += fmt::format(" **{:.3f}** |", c.result->p_value);
            else
                out += fmt::format(" {:.3f} |", c.result->p_value);
        }
        out += '\n';
    }
    return out;
}

}  // namespace kgaudit
