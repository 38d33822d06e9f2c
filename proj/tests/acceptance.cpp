// Acceptance battery: runs the default suite, maps its checks onto criteria 1-10 and prints one
// PASS/FAIL line per criterion. Exit status is nonzero when any criterion fails.

#include <liouville/harness.hpp>

#include <algorithm>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

namespace h = liouville::harness;

namespace {

struct Criterion {
    int id;
    std::string title;
    std::vector<std::string> modes;
    std::string prefix;  // only checks whose name starts with this (empty: all)
    double max_seconds;  // runtime budget over the listed modes (0: none)
};

const h::TimedReport* find(const h::SuiteResult& s, const std::string& mode) {
    for (const auto& r : s.runs)
        if (r.report.mode == mode) return &r;
    return nullptr;
}

bool report(int id, const std::string& title, bool ok, const std::string& detail, const std::vector<std::string>& failures) {
    std::printf("CRITERION %2d %s  %s (%s)\n", id, ok ? "PASS" : "FAIL", title.c_str(), detail.c_str());
    for (const auto& f : failures) std::printf("    x %s\n", f.c_str());
    return ok;
}

std::string describe(const h::CheckRecord& c) {
    std::string s = c.name + " measured=" + h::format_number(c.measured);
    if (c.min) s += " min=" + h::format_number(*c.min);
    if (c.max) s += " max=" + h::format_number(*c.max);
    return s;
}

bool evaluate(const h::SuiteResult& s, const Criterion& c) {
    std::size_t n = 0;
    double secs = 0.0;
    std::vector<std::string> failures;
    for (const auto& m : c.modes) {
        const auto* r = find(s, m);
        if (!r) {
            failures.push_back("mode " + m + " missing from the suite");
            continue;
        }
        secs += r->seconds;
        for (const auto& chk : r->report.checks) {
            if (chk.name.rfind(c.prefix, 0) != 0 && chk.name != "run.completed") continue;
            ++n;
            if (!chk.pass) failures.push_back(m + "/" + describe(chk));
        }
        if (!r->report.error.empty()) failures.push_back(m + ": " + r->report.error);
    }
    if (n == 0) failures.push_back("no checks ran");
    if (c.max_seconds > 0.0 && secs >= c.max_seconds)
        failures.push_back("runtime " + h::format_number(secs) + " s exceeds " + h::format_number(c.max_seconds) + " s");
    char detail[96];
    std::snprintf(detail, sizeof detail, "%zu checks, %.3f s", n, secs);
    return report(c.id, c.title, failures.empty(), detail, failures);
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria{
        {1, "Exact charge extraction", {"verify-charges"}, "bulk.", 10.0},
        {2, "Defect charge extraction", {"verify-charges"}, "defect.", 10.0},
        {3, "Poisson algebra identities", {"verify-poisson"}, "", 5.0},
        {4, "Zero curvature and Hamiltonian flow", {"verify-zero-curvature"}, "", 0.0},
        {5, "Conservation under integration", {"lattice-sim", "lattice-defect-sim"}, "", 60.0},
        {6, "Continuum charges and monodromy fit", {"monodromy-check"}, "", 0.0},
        {7, "Sewing condition", {"defect-charges"}, "sewing.", 0.0},
        {8, "Hetero-Backlund transformation", {"hetero-bt"}, "", 0.0},
        {9, "Auto-Backlund evolution", {"bt-evolve"}, "", 0.0},
    };

    const auto first = h::suite();
    bool all = true;
    for (const auto& c : criteria) all = evaluate(first, c) && all;

    const auto second = h::suite();
    std::vector<std::string> failures;
    for (std::size_t k = 0; k < first.runs.size(); ++k) {
        const auto& a = first.runs[k].report;
        const auto& b = second.runs[k].report;
        if (h::report_text(a, a.mode) != h::report_text(b, b.mode)) failures.push_back(a.mode + " report differs between runs");
        for (std::size_t q = 0; q < a.series.size() && q < b.series.size(); ++q)
            if (h::to_csv(a.series[q]) != h::to_csv(b.series[q]))
                failures.push_back(a.mode + " series " + a.series[q].name + " differs between runs");
    }
    if (h::report_text(first.summary, "suite") != h::report_text(second.summary, "suite"))
        failures.push_back("suite report differs between runs");
    if (!first.summary.pass()) failures.push_back("default suite has failing checks");
    const double slowest = std::max(first.seconds, second.seconds);
    if (slowest >= 300.0) failures.push_back("suite runtime " + h::format_number(slowest) + " s exceeds 300 s");
    char detail[96];
    std::snprintf(detail, sizeof detail, "%zu reports compared, suite %.3f s", first.runs.size() + 1, slowest);
    all = report(10, "Harness determinism and suite runtime", failures.empty(), detail, failures) && all;
    return all ? 0 : 1;
}
