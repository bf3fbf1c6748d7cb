#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "kgaudit/commands.hpp"
#include "kgaudit/error.hpp"
#include "kgaudit/fairness_stats.hpp"
#include "kgaudit/metrics_expl.hpp"

namespace py = pybind11;
using namespace kgaudit;

namespace {

struct Overrides {
    std::optional<std::filesystem::path> out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> workers;
};

RunConfig configure(const std::filesystem::path& config, const Overrides& o) {
    auto cfg = load_config(config);
    if (o.out_dir) cfg.out_dir = *o.out_dir;
    if (o.seed) cfg.seed = cfg.preprocess.seed = *o.seed;
    if (o.workers) cfg.workers = *o.workers;
    cfg.validate();
    return cfg;
}

/// Runs `fn` with the GIL released and returns its log text.
template <class Fn>
std::string logged(Fn fn) {
    std::ostringstream log;
    py::gil_scoped_release release;
    fn(log);
    return log.str();
}

py::tuple as_tuple(const TestResult& r) { return py::make_tuple(r.statistic, r.dof, r.p_value); }

}  // namespace

PYBIND11_MODULE(_kgaudit, m) {
    m.doc() = "Knowledge-graph recommender audit toolkit";
    m.attr("__version__") = KGAUDIT_VERSION;

    static py::exception<Error> error(m, "Error");
    static py::exception<UsageError> usage(m, "UsageError", error.ptr());
    static py::exception<ParseError> parse(m, "ParseError", error.ptr());
    static py::exception<ValidationError> validation(m, "ValidationError", error.ptr());
    static py::exception<InvariantError> invariant(m, "InvariantError", error.ptr());
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const UsageError& e) {
            usage(e.what());
        } catch (const ParseError& e) {
            parse(e.what());
        } catch (const ValidationError& e) {
            validation(e.what());
        } catch (const InvariantError& e) {
            invariant(e.what());
        } catch (const Error& e) {
            error(e.what());
        }
    });

    auto with_overrides = [](auto fn) {
        return [fn](const std::filesystem::path& config, std::optional<std::filesystem::path> out_dir,
                    std::optional<std::uint64_t> seed, std::optional<unsigned> workers) {
            return fn(configure(config, {out_dir, seed, workers}));
        };
    };
    auto args = [](const char* doc) {
        return std::make_tuple(py::arg("config"), py::arg("out_dir") = py::none(), py::arg("seed") = py::none(),
                               py::arg("workers") = py::none(), doc);
    };

    auto bind = [&](const char* name, auto fn, const char* doc) {
        std::apply([&](auto... a) { m.def(name, with_overrides(fn), a...); }, args(doc));
    };

    bind("preprocess", [](const RunConfig& cfg) { return logged([&](std::ostream& log) { cmd_preprocess(cfg, log); }); },
         "Filter and align the raw inputs into out_dir/bundle. Returns the log.");
    bind("split", [](const RunConfig& cfg) { return logged([&](std::ostream& log) { cmd_split(cfg, log); }); },
         "Chronological train/valid/test split of the bundle. Returns the log.");
    bind("baseline", [](const RunConfig& cfg) { return logged([&](std::ostream& log) { cmd_baseline(cfg, log); }); },
         "Write the mostpop and pathcount baselines. Returns the log.");
    bind("evaluate_json",
         [](const RunConfig& cfg) {
             std::string out;
             logged([&](std::ostream& log) { out = to_json(cmd_evaluate(cfg, log)).dump(); });
             return out;
         },
         "Evaluate the configured methods; the report as JSON text.");
    bind("stats_json", [](const RunConfig& cfg) { return cmd_stats(cfg).dump(); },
         "Statistics of the preprocessed bundle as JSON text.");

    m.def(
        "compare_json",
        [](std::vector<std::filesystem::path> reports, std::map<std::string, std::string> grouping,
           std::optional<std::size_t> cutoff, std::filesystem::path out_dir) {
            RunConfig cfg;
            cfg.reports = std::move(reports);
            cfg.grouping = std::move(grouping);
            cfg.compare_cutoff = cutoff;
            cfg.out_dir = std::move(out_dir);
            std::string out;
            logged([&](std::ostream& log) { out = to_json(cmd_compare(cfg, log)).dump(); });
            return out;
        },
        py::arg("reports"), py::arg("grouping"), py::arg("cutoff") = py::none(), py::arg("out_dir"),
        "Welch t-tests between two method classes over report files; the table as JSON text.");

    m.def(
        "welch_ttest", [](std::vector<double> a, std::vector<double> b) { return as_tuple(welch_ttest(a, b)); },
        py::arg("a"), py::arg("b"), "Two-sided Welch t-test: (t, dof, p).");
    m.def(
        "kruskal_h", [](std::vector<std::vector<double>> groups) { return as_tuple(kruskal_h(groups)); },
        py::arg("groups"), "Kruskal-Wallis H test with tie correction: (H, dof, p).");
    m.def(
        "normalized_entropy",
        [](std::vector<std::size_t> counts, std::size_t categories) { return normalized_entropy(counts, categories); },
        py::arg("counts"), py::arg("categories"));
}
