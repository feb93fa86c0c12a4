// Command-line front end: distributions, comparisons, coupling queries, rule
// manifests, case studies and the erasability corpus.
//
// Exit codes: 0 every verdict passed, 1 a verdict failed or was inconclusive,
// 2 usage, parse, link or input errors.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pcw/cases.hpp"
#include "pcw/coupling.hpp"
#include "pcw/dist.hpp"
#include "pcw/lang/library.hpp"
#include "pcw/lang/syntax.hpp"
#include "pcw/rules.hpp"
#include "pcw/semantics.hpp"

namespace {

using nlohmann::json;
using pcw::Rational;

constexpr int kPass = 0;
constexpr int kFail = 1;
constexpr int kUsage = 2;
constexpr int kSchemaVersion = 1;

// Raised for bad user input; mapped to exit code 2.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string dual(const Rational& r) { return pcw::to_exact_string(r) + " (" + pcw::to_decimal_string(r, 12) + ")"; }

json dual_json(const Rational& r) {
    json j = pcw::rational_to_json(r);
    j["decimal"] = pcw::to_decimal_string(r, 12);
    return j;
}

json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw InputError("cannot open " + path);
    }
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw InputError(path + ": " + e.what());
    }
}

pcw::lang::Expr load_file(const std::string& path) {
    if (!std::ifstream(path)) {
        throw InputError("cannot open " + path);
    }
    return pcw::lang::Library::standard().load_program_file(path);
}

pcw::sem::ExecOptions exec_options(std::optional<std::uint64_t> budget) {
    auto opts = pcw::sem::ExecOptions::from_env();
    if (budget) {
        opts.max_steps = *budget;
    }
    return opts;
}

json dist_json(const pcw::Dist<pcw::lang::Val>& d) {
    return pcw::dist_to_json(d, [](const pcw::lang::Val& v) { return pcw::lang::print(v); });
}

void print_dist(std::ostream& os, const pcw::Dist<pcw::lang::Val>& d) {
    if (d.empty()) {
        os << "  (empty)\n";
    }
    for (const auto& [v, w] : d) {
        os << "  " << pcw::lang::print(v) << "  " << dual(w) << "\n";
    }
}

// Weighted frontier after each step, one line per configuration.
void print_trace(std::ostream& os, const pcw::sem::Cfg& start, std::uint64_t n_max, std::uint64_t limit,
                 const pcw::sem::ExecOptions& opts) {
    pcw::Dist<pcw::sem::Cfg> frontier = pcw::Dist<pcw::sem::Cfg>::ret(start);
    std::uint64_t lines = 0;
    for (std::uint64_t n = 0; n <= n_max && !frontier.empty(); ++n) {
        pcw::DistBuilder<pcw::sem::Cfg> next;
        for (const auto& [c, w] : frontier) {
            if (lines++ >= limit) {
                os << "trace truncated after " << limit << " lines\n";
                return;
            }
            const bool value = pcw::lang::is_value(c.expr);
            os << "step " << n << "  weight " << pcw::to_exact_string(w) << "  " << (value ? "value " : "")
               << pcw::lang::print(c.expr) << "\n";
            if (value || n == n_max) {
                continue;
            }
            for (const auto& [c2, w2] : pcw::sem::step(c, opts)) {
                next.add(c2, w * w2);
            }
        }
        frontier = std::move(next).build_unchecked();
    }
}

struct Global {
    bool as_json = false;
    std::optional<std::uint64_t> budget;
};

int cmd_dist(const Global& g, const std::string& file, std::uint64_t n_max, bool trace, std::uint64_t trace_limit) {
    const auto opts = exec_options(g.budget);
    const auto e = load_file(file);
    const auto cfg = pcw::sem::initial(e);
    if (trace) {
        print_trace(std::cerr, cfg, n_max, trace_limit, opts);
    }
    const auto r = pcw::sem::exec_approx(cfg, n_max, opts);
    if (g.as_json) {
        json out = {{"version", kSchemaVersion},
                    {"file", file},
                    {"n_max", n_max},
                    {"distribution", dist_json(r.values)},
                    {"termination", dual_json(r.values.mass())},
                    {"residual", dual_json(r.residual)},
                    {"stuck", dual_json(r.stuck)},
                    {"budget_exhausted", r.budget_exhausted},
                    {"steps", r.steps}};
        std::cout << out.dump(2) << "\n";
    } else {
        std::cout << "distribution of " << file << " within " << n_max << " steps:\n";
        print_dist(std::cout, r.values);
        std::cout << "termination " << dual(r.values.mass()) << "\n"
                  << "residual    " << dual(r.residual) << "\n"
                  << "stuck       " << dual(r.stuck) << "\n";
        if (r.budget_exhausted) {
            std::cout << "step budget exhausted after " << r.steps << " steps; unexplored mass is in the residual\n";
        }
    }
    return r.budget_exhausted ? kFail : kPass;
}

int cmd_compare(const Global& g, const std::string& a, const std::string& b, std::uint64_t n_max,
                std::optional<std::string> eps_text) {
    const auto opts = exec_options(g.budget);
    const auto ra = pcw::sem::exec_approx(pcw::sem::initial(load_file(a)), n_max, opts);
    const auto rb = pcw::sem::exec_approx(pcw::sem::initial(load_file(b)), n_max, opts);
    const Rational tv = pcw::tv_distance(ra.values, rb.values);
    std::optional<Rational> eps;
    if (eps_text) {
        try {
            eps = pcw::parse_rational(*eps_text);
        } catch (const std::invalid_argument& e) {
            throw InputError(std::string("--epsilon: ") + e.what());
        }
    }
    // Truncation can hide at most the residual mass on either side.
    const Rational slack = ra.residual + rb.residual;
    const bool within = eps && tv <= *eps + slack;
    if (g.as_json) {
        json out = {{"version", kSchemaVersion},  {"n_max", n_max},
                    {"tv", dual_json(tv)},         {"residual_a", dual_json(ra.residual)},
                    {"residual_b", dual_json(rb.residual)}};
        if (eps) {
            out["epsilon"] = dual_json(*eps);
            out["within"] = within;
        }
        std::cout << out.dump(2) << "\n";
    } else {
        std::cout << "tv          " << dual(tv) << "\n"
                  << "residual a  " << dual(ra.residual) << "\n"
                  << "residual b  " << dual(rb.residual) << "\n";
        if (eps) {
            std::cout << "within(" << pcw::to_exact_string(*eps) << ") " << (within ? "yes" : "no") << "\n";
        }
    }
    return (eps && !within) || ra.budget_exhausted || rb.budget_exhausted ? kFail : kPass;
}

pcw::Dist<json> parse_dist(const json& j, const char* what) {
    if (!j.is_array()) {
        throw InputError(std::string(what) + " must be an array of {outcome, num, den}");
    }
    pcw::Dist<json>::Weights w;
    for (const json& e : j) {
        Rational p = pcw::rational_from_json(e);
        auto [it, inserted] = w.emplace(e.at("outcome"), p);
        if (!inserted) {
            it->second += p;
        }
    }
    return pcw::Dist<json>::from_weights(std::move(w));
}

int cmd_coupling(const Global& g, const std::string& file, const std::string& backend_name) {
    const json q = read_json(file);
    pcw::coupling::CouplingQuery<json> query;
    try {
        query.mu1 = parse_dist(q.at("mu1"), "mu1");
        query.mu2 = parse_dist(q.at("mu2"), "mu2");
        query.epsilon = pcw::rational_from_json(q.at("epsilon"));
        for (const json& pr : q.at("relation")) {
            if (!pr.is_array() || pr.size() != 2) {
                throw InputError("relation entries must be [a, b] pairs");
            }
            query.relation.emplace_back(pr[0], pr[1]);
        }
    } catch (const json::exception& e) {
        throw InputError(file + ": " + e.what());
    }
    std::string name = q.value("backend", backend_name);
    if (backend_name != "auto") {
        name = backend_name;
    }
    pcw::coupling::Backend backend = pcw::coupling::Backend::Auto;
    if (name == "enumeration") {
        backend = pcw::coupling::Backend::Enumeration;
    } else if (name == "maxflow") {
        backend = pcw::coupling::Backend::MaxFlow;
    } else if (name != "auto") {
        throw InputError("unknown backend '" + name + "'");
    }
    const auto v = pcw::coupling::arcoupl_check(query, backend);
    if (g.as_json) {
        json out = {{"version", kSchemaVersion},
                    {"holds", v.holds},
                    {"epsilon", dual_json(v.epsilon)},
                    {"max_violation", dual_json(v.max_violation)},
                    {"witness", v.witness}};
        std::cout << out.dump(2) << "\n";
    } else {
        std::cout << (v.holds ? "holds" : "fails") << "\n"
                  << "epsilon        " << dual(v.epsilon) << "\n"
                  << "max violation  " << dual(v.max_violation) << "\n"
                  << "witness        " << json(v.witness).dump() << "\n";
    }
    return v.holds ? kPass : kFail;
}

void print_rule(std::ostream& os, const pcw::rules::RuleReport& r) {
    const std::string id = r.params.contains("id") ? r.params.at("id").get<std::string>() : r.rule;
    os << (r.as_expected() ? "ok    " : "FAIL  ") << id << " (" << r.rule << "): " << (r.passed() ? "holds" : "fails");
    if (r.expect_holds) {
        os << ", expected " << (*r.expect_holds ? "holds" : "fails");
    }
    os << "\n";
    for (const auto& c : r.checks) {
        os << "        " << (c.ok ? "+ " : "- ") << c.name << (c.detail.empty() ? "" : ": " + c.detail) << "\n";
    }
}

int cmd_rules(const Global& g, std::optional<std::string> manifest, const std::vector<std::string>& only) {
    const std::string path = manifest.value_or((pcw::lang::asset_dir() / "manifest" / "rules.json").string());
    const json m = read_json(path);
    for (const std::string& want : only) {
        const auto& insts = m.at("instances");
        if (std::none_of(insts.begin(), insts.end(), [&](const json& i) { return i.value("id", "") == want; })) {
            throw InputError("unknown rule instance id '" + want + "'");
        }
    }
    json reports = json::array();
    bool all_ok = true;
    for (const json& inst : m.at("instances")) {
        const std::string id = inst.value("id", std::string());
        if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) {
            continue;
        }
        pcw::rules::RuleReport r;
        try {
            r = pcw::rules::run_rule_instance(inst);
        } catch (const std::invalid_argument& e) {
            throw InputError("instance " + id + ": " + e.what());
        }
        all_ok = all_ok && r.as_expected();
        if (g.as_json) {
            reports.push_back(r.to_json());
        } else {
            print_rule(std::cout, r);
        }
    }
    if (g.as_json) {
        std::cout << json{{"version", kSchemaVersion}, {"manifest", path}, {"all_as_expected", all_ok},
                          {"reports", reports}}
                         .dump(2)
                  << "\n";
    } else {
        std::cout << (all_ok ? "all instances as expected\n" : "some instances differ from their expectation\n");
    }
    return all_ok ? kPass : kFail;
}

struct CaseFlags {
    std::optional<std::int64_t> n, m, q, payload;
    std::optional<std::uint64_t> rounds, n_max;
    std::optional<std::string> msgs, variant, spec_file;
};

// Flags override the manifest entry, which overrides built-in defaults.
json case_entry(const std::string& name, const json* manifest_entry, const CaseFlags& f) {
    json e = manifest_entry != nullptr ? *manifest_entry : json{{"case", name}};
    e["case"] = e.value("case", name);
    if (f.n) e["N"] = *f.n;
    if (f.m) e["M"] = *f.m;
    if (f.q) e["Q"] = *f.q;
    if (f.payload) e["payload"] = *f.payload;
    if (f.rounds) e["rounds"] = *f.rounds;
    if (f.n_max) e["n_max"] = *f.n_max;
    if (f.variant) e["variant"] = *f.variant;
    if (f.spec_file) e["spec"] = read_json(*f.spec_file);
    if (f.msgs) {
        std::vector<std::int64_t> msgs;
        std::stringstream ss(*f.msgs);
        std::string item;
        while (std::getline(ss, item, ',')) {
            try {
                msgs.push_back(std::stoll(item));
            } catch (const std::exception&) {
                throw InputError("--msgs expects comma-separated integers");
            }
        }
        e["messages"] = msgs;
    }
    if (e["case"] == "cpa" && f.q && !f.msgs) {
        std::vector<std::int64_t> msgs;
        for (std::int64_t i = 0; i < *f.q; ++i) {
            msgs.push_back(i % (e.value("N", std::int64_t{3}) + 1));
        }
        e["messages"] = msgs;
    }
    return e;
}

int cmd_case(const Global& g, const std::string& name, bool all, std::optional<std::string> manifest,
             const CaseFlags& flags) {
    const std::string path =
        manifest.value_or((pcw::lang::asset_dir() / "manifest" / "cases.json").string());
    std::vector<json> entries;
    if (all) {
        const json m = read_json(path);
        for (const json& e : m.at("cases")) {
            entries.push_back(e);
        }
    } else {
        if (name.empty()) {
            throw InputError("case name required (or --all)");
        }
        const auto names = pcw::cases::case_names();
        const json* found = nullptr;
        json m;
        if (manifest) {
            m = read_json(path);
            for (const json& e : m.at("cases")) {
                if (e.value("id", std::string()) == name) {
                    found = &e;
                    break;
                }
            }
            if (found == nullptr) {
                for (const json& e : m.at("cases")) {
                    if (e.value("case", std::string()) == name) {
                        found = &e;
                        break;
                    }
                }
            }
        }
        const std::string kind = found != nullptr ? found->at("case").get<std::string>() : name;
        if (std::find(names.begin(), names.end(), kind) == names.end()) {
            throw InputError("unknown case '" + name + "'");
        }
        entries.push_back(case_entry(kind, found, flags));
    }
    pcw::cases::Options opts;
    opts.exec = exec_options(g.budget);
    std::vector<pcw::cases::CaseReport> reports;
    for (const json& e : entries) {
        try {
            reports.push_back(pcw::cases::run_case(e, opts));
        } catch (const std::invalid_argument& ex) {
            throw InputError(std::string(e.value("id", e.value("case", std::string()))) + ": " + ex.what());
        } catch (const json::exception& ex) {
            throw InputError(std::string("case parameters: ") + ex.what());
        }
    }
    bool all_pass = true;
    json out = json::array();
    for (const auto& r : reports) {
        all_pass = all_pass && r.verdict() == pcw::cases::Verdict::Pass;
        out.push_back(r.to_json());
    }
    if (g.as_json) {
        std::cout << json{{"version", kSchemaVersion}, {"reports", out}, {"all_pass", all_pass}}.dump(2) << "\n";
    } else {
        std::cout << pcw::cases::summary_table(reports);
        for (const auto& r : reports) {
            for (const auto& c : r.checks) {
                if (!c.ok) {
                    std::cout << r.name << ": failed check " << c.name << (c.detail.empty() ? "" : ": " + c.detail)
                              << "\n";
                }
            }
            if (r.computed) {
                std::cout << r.name << ": " << r.quantity << " " << dual(*r.computed) << ", bound " << dual(r.bound)
                          << "\n";
            }
            if (!r.note.empty()) {
                std::cout << r.name << ": " << r.note << "\n";
            }
        }
    }
    return all_pass ? kPass : kFail;
}

int cmd_corpus(const Global& g, std::int64_t bound, const std::string& presample, std::int64_t count,
               std::int64_t value, std::uint64_t n_max, std::optional<std::string> expect) {
    json inst = {{"rule", "erasability"}, {"N", bound},        {"presample", presample},
                 {"count", count},        {"value", value},    {"n_max", n_max}};
    if (expect) {
        inst["expect"] = *expect;
    }
    pcw::rules::RuleReport r;
    try {
        r = pcw::rules::run_rule_instance(inst);
    } catch (const std::invalid_argument& e) {
        throw InputError(e.what());
    }
    if (g.as_json) {
        std::cout << json{{"version", kSchemaVersion}, {"report", r.to_json()}}.dump(2) << "\n";
    } else {
        print_rule(std::cout, r);
    }
    return r.as_expected() ? kPass : kFail;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Exact-distribution workbench for a probabilistic ML-like language with presampling tapes.\n"
                 "Step budget: --budget, else $PCW_BUDGET, else 200000000. Assets: $PCW_ASSETS.\n"
                 "Case parameters: flags override the manifest entry, which overrides built-in defaults.",
                 "pcw"};
    app.require_subcommand(1);
    Global g;
    app.add_flag("--json", g.as_json, "Machine-readable output");
    app.add_option("--budget", g.budget, "Total reduction steps explored before giving up");

    std::string file_a, file_b;
    std::uint64_t n_max = 100;
    bool trace = false;
    std::uint64_t trace_limit = 1000;
    auto* dist = app.add_subcommand("dist", "Distribution of a program within a step bound");
    dist->add_option("file", file_a, "Program (.rml)")->required();
    dist->add_option("-n,--n-max", n_max, "Step bound");
    dist->add_flag("--trace", trace, "Print the weighted step frontier to stderr");
    dist->add_option("--trace-limit", trace_limit, "Maximum trace lines");

    std::optional<std::string> eps;
    auto* compare = app.add_subcommand("compare", "Total variation distance of two programs");
    compare->add_option("a", file_a)->required();
    compare->add_option("b", file_b)->required();
    compare->add_option("-n,--n-max", n_max, "Step bound");
    compare->add_option("--epsilon", eps, "Report within(eps), counting residual mass as slack");

    std::string query;
    std::string backend = "auto";
    auto* coupling = app.add_subcommand("coupling", "Decide an approximate coupling query (JSON)");
    coupling->add_option("query", query)->required();
    coupling->add_option("--backend", backend, "auto, enumeration or maxflow");

    std::optional<std::string> manifest;
    std::vector<std::string> only;
    bool all = false;
    auto* rules = app.add_subcommand("rules", "Validate rule instances from a manifest");
    rules->add_option("manifest", manifest, "Rule manifest (default: shipped manifest)");
    rules->add_flag("--all", all, "Run the shipped manifest");
    rules->add_option("--only", only, "Instance ids to run");

    std::string case_name;
    bool all_cases = false;
    CaseFlags cf;
    auto* cs = app.add_subcommand("case", "Run a case study");
    cs->add_option("name", case_name, "Case name or manifest id");
    cs->add_flag("--all", all_cases, "Run every case in the manifest");
    cs->add_option("--manifest", manifest, "Case manifest");
    cs->add_option("--N", cf.n, "Domain bound N");
    cs->add_option("--M", cf.m, "Rejection range bound M");
    cs->add_option("--Q", cf.q, "Oracle query bound Q");
    cs->add_option("--rounds", cf.rounds, "Rejection rounds covered by the step bound");
    cs->add_option("--n-max", cf.n_max, "Step bound for the many-to-one programs");
    cs->add_option("--msgs", cf.msgs, "Comma-separated messages");
    cs->add_option("--payload", cf.payload, "Value inserted by bptree-insert");
    cs->add_option("--variant", cf.variant, "bits or trits");
    cs->add_option("--spec", cf.spec_file, "Tree spec JSON file");
    cs->footer("Parameters: command-line flags override the manifest entry, which overrides built-in defaults.\n"
               "Exit codes: 0 pass, 1 fail or inconclusive, 2 usage or input error.");

    std::int64_t bound = 3;
    std::string presample = "state-step";
    std::int64_t count = 1;
    std::int64_t value = 0;
    std::uint64_t corpus_n = 12;
    std::optional<std::string> expect;
    auto* corpus = app.add_subcommand("corpus", "Run the erasability corpus against a presampling distribution");
    corpus->add_option("--bound", bound, "Bound of the target tape");
    corpus->add_option("--presample", presample, "ret, state-step or fixed")
        ->check(CLI::IsMember({"ret", "state-step", "fixed"}));
    corpus->add_option("--count", count, "Samples appended by state-step");
    corpus->add_option("--value", value, "Value written by fixed");
    corpus->add_option("-n,--n-max", corpus_n, "Step bound");
    corpus->add_option("--expect", expect, "holds or fails")->check(CLI::IsMember({"holds", "fails"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kPass : kUsage;
    }

    try {
        if (*dist) {
            return cmd_dist(g, file_a, n_max, trace, trace_limit);
        }
        if (*compare) {
            return cmd_compare(g, file_a, file_b, n_max, eps);
        }
        if (*coupling) {
            return cmd_coupling(g, query, backend);
        }
        if (*rules) {
            return cmd_rules(g, all ? std::nullopt : manifest, only);
        }
        if (*cs) {
            return cmd_case(g, case_name, all_cases, manifest, cf);
        }
        if (*corpus) {
            return cmd_corpus(g, bound, presample, count, value, corpus_n, expect);
        }
    } catch (const pcw::lang::ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kUsage;
    } catch (const pcw::lang::LinkError& e) {
        std::cerr << "link error: " << e.what() << "\n";
        return kUsage;
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const pcw::coupling::SupportTooLarge& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFail;
    }
    return kUsage;
}
