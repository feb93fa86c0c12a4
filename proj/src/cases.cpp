#include "pcw/cases.hpp"

#include <algorithm>
#include <functional>
#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>

#include "pcw/lang/library.hpp"
#include "pcw/lang/syntax.hpp"

namespace pcw::cases {

using lang::Expr;
using lang::State;
using lang::Val;
using nlohmann::json;
using sem::Cfg;

namespace {

// Step bound for programs that terminate on every path.
constexpr std::uint64_t kUnbounded = 1'000'000'000'000ULL;

Expr program(const std::string& source) { return lang::Library::standard().load_program(source, "<case>"); }

std::string num(std::int64_t n) { return n < 0 ? "(" + std::to_string(n) + ")" : std::to_string(n); }

Dist<Val> uniform_vals(const std::vector<std::int64_t>& items) {
    DistBuilder<Val> b;
    const Rational w = make_rational(1, static_cast<long>(items.size()));
    for (std::int64_t x : items) {
        b.add(lang::int_val(x), w);
    }
    return std::move(b).build();
}

Dist<Val> uniform_range(std::int64_t m) {
    std::vector<std::int64_t> items;
    for (std::int64_t v = 0; v <= m; ++v) {
        items.push_back(v);
    }
    return uniform_vals(items);
}

// max_v |a(v) - b(v)|.
Rational max_gap(const Dist<Val>& a, const Dist<Val>& b) {
    Rational best = 0;
    auto visit = [&](const Dist<Val>& x, const Dist<Val>& y) {
        for (const auto& [v, w] : x) {
            Rational d = w - y(v);
            if (d < 0) {
                d = -d;
            }
            if (d > best) {
                best = d;
            }
        }
    };
    visit(a, b);
    visit(b, a);
    return best;
}

std::string show(const Rational& r) { return to_exact_string(r); }

// Runs a program whose every path is deterministic apart from allocation;
// returns the final configuration.
Cfg run_deterministic(const Cfg& cfg, const sem::ExecOptions& opts) {
    const Dist<Cfg> out = sem::pexec_n(cfg, kUnbounded, opts);
    if (out.size() != 1 || out.begin()->second != 1 || !lang::is_value(out.begin()->first.expr)) {
        throw std::runtime_error("expected a deterministic terminating run");
    }
    return out.begin()->first;
}

struct Run {
    sem::ExecResult result;
    bool ok = true;  // budget not exhausted
};

Run run(const Cfg& cfg, std::uint64_t n_max, const sem::ExecOptions& opts) {
    Run r;
    r.result = sem::exec_approx(cfg, n_max, opts);
    r.ok = !r.result.budget_exhausted;
    return r;
}

// Tape-annotated and label-stripped runs agree exactly.
void check_labels(CaseReport& rep, const std::string& what, const Cfg& cfg, std::uint64_t n_max,
                  const sem::ExecOptions& opts) {
    const auto a = sem::exec_approx(cfg, n_max, opts);
    const auto b = sem::exec_approx(Cfg{lang::strip_labels(cfg.expr), cfg.state}, n_max, opts);
    if (a.budget_exhausted || b.budget_exhausted) {
        rep.inconclusive = true;
        rep.add(what + ": labeled equals plain", false, "budget exhausted");
        return;
    }
    const bool same = a.values == b.values && a.residual == b.residual;
    rep.add(what + ": labeled equals plain", same,
            same ? "" : "residuals " + show(a.residual) + " and " + show(b.residual));
}

Rational power(const Rational& base, std::uint64_t e) { return pcw::pow(base, e); }

std::vector<std::vector<std::int64_t>> sequences(std::int64_t alphabet, std::int64_t len) {
    std::vector<std::vector<std::int64_t>> out{{}};
    for (std::int64_t i = 0; i < len; ++i) {
        std::vector<std::vector<std::int64_t>> next;
        for (const auto& s : out) {
            for (std::int64_t x = 0; x < alphabet; ++x) {
                auto t = s;
                t.push_back(x);
                next.push_back(std::move(t));
            }
        }
        out = std::move(next);
    }
    return out;
}

// let o = <oracle> in let y0 = o x0 in ... [y0, ...]
std::string transcript_source(const std::string& oracle, const std::vector<std::int64_t>& queries) {
    std::ostringstream os;
    os << "let o = " << oracle << " in\n";
    for (std::size_t i = 0; i < queries.size(); ++i) {
        os << "let y" << i << " = o " << num(queries[i]) << " in\n";
    }
    os << "[";
    for (std::size_t i = 0; i < queries.size(); ++i) {
        os << (i == 0 ? "" : ", ") << "y" << i;
    }
    os << "]";
    return os.str();
}

json seq_json(const std::vector<std::int64_t>& s) { return json(s); }

}  // namespace

const char* verdict_name(Verdict v) {
    switch (v) {
    case Verdict::Pass: return "pass";
    case Verdict::Fail: return "fail";
    case Verdict::Inconclusive: return "inconclusive";
    }
    return "?";
}

void CaseReport::add(std::string check_name, bool ok, std::string detail) {
    checks.push_back({std::move(check_name), ok, std::move(detail)});
}

Verdict CaseReport::verdict() const {
    if (inconclusive || !computed) {
        return Verdict::Inconclusive;
    }
    if (*computed > bound) {
        return Verdict::Fail;
    }
    for (const Check& c : checks) {
        if (!c.ok) {
            return Verdict::Fail;
        }
    }
    return Verdict::Pass;
}

json CaseReport::to_json() const {
    json cs = json::array();
    for (const Check& c : checks) {
        cs.push_back({{"name", c.name}, {"ok", c.ok}, {"detail", c.detail}});
    }
    json out = {{"case", name},
                {"params", params},
                {"quantity", quantity},
                {"bound", rational_to_json(bound)},
                {"residual", rational_to_json(residual)},
                {"verdict", verdict_name(verdict())},
                {"checks", cs}};
    out["computed"] = computed ? rational_to_json(*computed) : json(nullptr);
    if (!note.empty()) {
        out["note"] = note;
    }
    return out;
}

std::string summary_table(const std::vector<CaseReport>& reports) {
    std::vector<std::array<std::string, 6>> rows{{"case", "params", "bound", "computed", "residual", "verdict"}};
    for (const CaseReport& r : reports) {
        json p = r.params;
        p.erase("tree");
        p.erase("before");
        rows.push_back({r.name, p.dump(), show(r.bound), r.computed ? show(*r.computed) : "-", show(r.residual),
                        verdict_name(r.verdict())});
    }
    std::array<std::size_t, 6> width{};
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            width[i] = std::max(width[i], row[i].size());
        }
    }
    std::ostringstream os;
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            os << std::left << std::setw(static_cast<int>(width[i])) << row[i] << (i + 1 < row.size() ? "  " : "\n");
        }
    }
    return os.str();
}

Calibration calibrate(const Cfg& cfg, const std::vector<std::int64_t>& accept_script,
                      const std::vector<std::int64_t>& reject_prefix, std::uint64_t rounds) {
    auto accept = sem::scripted_length(cfg, accept_script);
    auto script = reject_prefix;
    script.insert(script.end(), accept_script.begin(), accept_script.end());
    auto both = sem::scripted_length(cfg, script);
    if (!accept || !both || *both <= *accept) {
        throw std::runtime_error("calibration scripts do not describe one accepting and one rejecting round");
    }
    Calibration c{*accept, *both - *accept, 0};
    c.n_max = rounds == 0 ? 0 : (rounds - 1) * c.reject + c.accept;
    return c;
}

CaseReport run_many_to_one_prog(std::uint64_t n_max, bool trits, const Options& opts) {
    CaseReport rep;
    rep.name = "many-to-one";
    rep.quantity = "tv";
    rep.params = {{"n_max", n_max}, {"variant", trits ? "trits" : "bits"}};
    const Expr lhs = program(trits ? "m2o_trits ()" : "m2o_bits ()");
    const Expr rhs = program(trits ? "m2o_direct9 ()" : "m2o_direct ()");
    const Run a = run(sem::initial(lhs), n_max, opts.exec);
    const Run b = run(sem::initial(rhs), n_max, opts.exec);
    rep.residual = a.result.residual + b.result.residual;
    rep.bound = 0;
    if (!a.ok || !b.ok || rep.residual != 0) {
        rep.inconclusive = true;
        rep.note = "step bound too small for both programs to terminate";
        return rep;
    }
    rep.computed = tv_distance(a.result.values, b.result.values);
    rep.add("single sample uniform", b.result.values == uniform_range(trits ? 8 : 3));
    return rep;
}

CaseReport run_rejection(std::int64_t n, std::int64_t m, std::uint64_t rounds, const Options& opts) {
    if (m < 0 || m >= n) {
        throw std::invalid_argument("rejection sampling needs 0 <= M < N");
    }
    CaseReport rep;
    rep.name = "rejection";
    rep.quantity = "max gap";
    const Cfg cfg = sem::initial(program("rs " + num(n) + " " + num(m) + " ()"));
    const Calibration cal = calibrate(cfg, {0}, {n}, rounds);
    rep.params = {{"N", n}, {"M", m}, {"rounds", rounds}, {"n_max", cal.n_max}};
    rep.bound = power(make_rational(n - m, n + 1), rounds);
    const Run r = run(cfg, cal.n_max, opts.exec);
    rep.residual = r.result.residual;
    if (!r.ok) {
        rep.inconclusive = true;
        rep.note = "step budget exhausted";
        return rep;
    }
    rep.computed = max_gap(r.result.values, uniform_range(m));
    rep.add("residual equals closed form", rep.residual == rep.bound,
            show(rep.residual) + " vs " + show(rep.bound));
    const Run d = run(sem::initial(program("direct " + num(m) + " ()")), kUnbounded, opts.exec);
    rep.add("direct sampler uniform", d.ok && d.result.residual == 0 && d.result.values == uniform_range(m));
    check_labels(rep, "rs", cfg, cal.n_max, opts.exec);
    return rep;
}

CaseReport run_dice(std::uint64_t rounds, const Options& opts) {
    CaseReport rep;
    rep.name = "dice";
    rep.quantity = "max gap";
    const Cfg drej = sem::initial(program("drej ()"));
    const Cfg dsim = sem::initial(program("dsim ()"));
    const Cfg droll = sem::initial(program("droll ()"));
    const Calibration cr = calibrate(drej, {0}, {7}, rounds);
    const Calibration cs = calibrate(dsim, {0, 0, 0}, {1, 1}, rounds);
    rep.params = {{"rounds", rounds}, {"n_max_drej", cr.n_max}, {"n_max_dsim", cs.n_max}};
    const Run rr = run(drej, cr.n_max, opts.exec);
    const Run rs = run(dsim, cs.n_max, opts.exec);
    const Run ro = run(droll, kUnbounded, opts.exec);
    if (!rr.ok || !rs.ok || !ro.ok) {
        rep.inconclusive = true;
        rep.note = "step budget exhausted";
        return rep;
    }
    const Rational expected = power(make_rational(1, 4), rounds);
    const Dist<Val> six = uniform_range(5);
    rep.residual = rr.result.residual + rs.result.residual;
    rep.bound = rep.residual;
    rep.computed = max_gap(rr.result.values, rs.result.values);
    rep.add("droll exactly uniform", ro.result.residual == 0 && ro.result.values == six);
    rep.add("drej residual", rr.result.residual == expected, show(rr.result.residual) + " vs " + show(expected));
    rep.add("dsim residual", rs.result.residual == expected, show(rs.result.residual) + " vs " + show(expected));
    const Rational g1 = max_gap(rr.result.values, six);
    const Rational g2 = max_gap(rs.result.values, six);
    rep.add("drej vs droll", g1 <= rr.result.residual, "gap " + show(g1));
    rep.add("dsim vs droll", g2 <= rs.result.residual, "gap " + show(g2));
    check_labels(rep, "drej", drej, cr.n_max, opts.exec);
    check_labels(rep, "dsim", dsim, cs.n_max, opts.exec);
    check_labels(rep, "droll", droll, kUnbounded, opts.exec);
    return rep;
}

CaseReport run_switching_weak(std::int64_t n, std::int64_t q, const Options& opts) {
    if (n < 1 || q < 1) {
        throw std::invalid_argument("switching needs N >= 1 and Q >= 1");
    }
    CaseReport rep;
    rep.name = "switching-weak";
    rep.quantity = "tv";
    rep.params = {{"N", n}, {"Q", q}};
    rep.bound = make_rational(q * (q - 1), 2 * n);
    const std::string args = num(n) + " " + num(q);
    const Run rp = run(sem::initial(program("adv_weak " + args + " (erp " + num(n) + ")")), kUnbounded, opts.exec);
    const Run rf = run(sem::initial(program("adv_weak " + args + " (erf " + num(n) + ")")), kUnbounded, opts.exec);
    rep.residual = rp.result.residual + rf.result.residual;
    if (!rp.ok || !rf.ok) {
        rep.inconclusive = true;
        rep.note = "step budget exhausted";
        return rep;
    }
    rep.computed = tv_distance(rp.result.values, rf.result.values);
    rep.add("both terminate", rep.residual == 0 && rp.result.stuck == 0 && rf.result.stuck == 0);
    return rep;
}

CaseReport run_switching_transcript(std::int64_t n, std::int64_t q, const Options& opts) {
    if (n < 1 || q < 1) {
        throw std::invalid_argument("switching needs N >= 1 and Q >= 1");
    }
    CaseReport rep;
    rep.name = "switching-transcript";
    rep.quantity = "max tv";
    rep.bound = make_rational(q * (q - 1), 2 * n);
    rep.params = {{"N", n}, {"Q", q}};
    const std::string rp = "bounded " + num(q) + " (erp " + num(n) + ")";
    const std::string rf = "bounded " + num(q) + " (erf " + num(n) + ")";
    auto tv_for = [&](const std::vector<std::int64_t>& xs) -> std::optional<Rational> {
        const Run a = run(sem::initial(program(transcript_source(rp, xs))), kUnbounded, opts.exec);
        const Run b = run(sem::initial(program(transcript_source(rf, xs))), kUnbounded, opts.exec);
        if (!a.ok || !b.ok || a.result.residual != 0 || b.result.residual != 0) {
            return std::nullopt;
        }
        return tv_distance(a.result.values, b.result.values);
    };
    Rational worst = 0;
    std::vector<std::int64_t> worst_seq;
    bool repeated_zero = true;
    bool extra_unchanged = true;
    std::size_t count = 0;
    for (const auto& xs : sequences(n, q)) {
        const auto tv = tv_for(xs);
        auto longer = xs;
        longer.push_back(xs.front());
        const auto tv_long = tv_for(longer);
        if (!tv || !tv_long) {
            rep.inconclusive = true;
            rep.note = "step budget exhausted";
            return rep;
        }
        count += 2;
        if (*tv > worst || worst_seq.empty()) {
            worst = std::max(worst, *tv);
            worst_seq = xs;
        }
        if (std::all_of(xs.begin(), xs.end(), [&](std::int64_t x) { return x == xs.front(); }) && *tv != 0) {
            repeated_zero = false;
        }
        if (*tv_long != *tv) {
            extra_unchanged = false;
        }
    }
    rep.computed = worst;
    rep.params["sequences"] = count;
    rep.params["worst_sequence"] = seq_json(worst_seq);
    rep.add("repeated queries give tv 0", repeated_zero);
    rep.add("queries past the bound leave tv unchanged", extra_unchanged);
    rep.note = "transcript tv over all deterministic query sequences; a weaker proxy for arbitrary adversaries";
    return rep;
}

CaseReport run_cpa(std::int64_t n, const std::vector<std::int64_t>& messages, const Options& opts) {
    if (n < 1) {
        throw std::invalid_argument("cpa needs N >= 1");
    }
    if (messages.empty()) {
        throw std::invalid_argument("cpa needs at least one message");
    }
    for (std::int64_t msg : messages) {
        if (msg < 0 || msg > n) {
            throw std::invalid_argument("message " + std::to_string(msg) + " outside 0.." + std::to_string(n));
        }
    }
    const auto q = static_cast<std::int64_t>(messages.size());
    CaseReport rep;
    rep.name = "cpa";
    rep.quantity = "tv";
    rep.params = {{"N", n}, {"Q", q}, {"messages", messages}};
    rep.bound = make_rational(q * q, 2 * n);
    const std::string real = "(let key = keygen " + num(n) + " in bounded " + num(q) + " (enc_rf " + num(n) + " key))";
    const std::string ideal = "bounded " + num(q) + " (rand_cipher " + num(n) + ")";
    const Run a = run(sem::initial(program(transcript_source(real, messages))), kUnbounded, opts.exec);
    const Run b = run(sem::initial(program(transcript_source(ideal, messages))), kUnbounded, opts.exec);
    rep.residual = a.result.residual + b.result.residual;
    if (!a.ok || !b.ok) {
        rep.inconclusive = true;
        rep.note = "step budget exhausted";
        return rep;
    }
    rep.computed = tv_distance(a.result.values, b.result.values);
    rep.add("both terminate", rep.residual == 0);
    bool round_trip = true;
    std::string detail;
    for (std::int64_t msg = 0; msg <= n; ++msg) {
        const std::string src = "let key = keygen " + num(n) + " in let prf = prf_rf " + num(n) + " in dec " + num(n) +
                                " prf key (enc " + num(n) + " prf key " + num(msg) + ")";
        const Run r = run(sem::initial(program(src)), kUnbounded, opts.exec);
        if (!r.ok || !(r.result.values == Dist<Val>::ret(lang::int_val(msg)))) {
            round_trip = false;
            detail = "message " + std::to_string(msg);
            break;
        }
    }
    rep.add("decrypt after encrypt returns the message", round_trip, detail);
    return rep;
}

// B+ trees.

std::int64_t TreeNode::leaf_count() const {
    if (is_leaf()) {
        return 1;
    }
    std::int64_t total = 0;
    for (const TreeNode& c : children) {
        total += c.leaf_count();
    }
    return total;
}

std::int64_t TreeNode::depth() const { return is_leaf() || children.empty() ? 0 : 1 + children.front().depth(); }

std::vector<std::int64_t> TreeNode::leaves() const {
    if (is_leaf()) {
        return {*payload};
    }
    std::vector<std::int64_t> out;
    for (const TreeNode& c : children) {
        auto sub = c.leaves();
        out.insert(out.end(), sub.begin(), sub.end());
    }
    return out;
}

json TreeNode::to_json() const {
    if (is_leaf()) {
        return *payload;
    }
    json out = json::array();
    for (const TreeNode& c : children) {
        out.push_back(c.to_json());
    }
    return out;
}

TreeNode TreeNode::from_json(const json& j) {
    TreeNode t;
    if (j.is_number_integer()) {
        t.payload = j.get<std::int64_t>();
    } else if (j.is_array()) {
        for (const json& c : j) {
            t.children.push_back(from_json(c));
        }
    } else {
        throw std::invalid_argument("tree node must be an integer leaf or an array of children");
    }
    return t;
}

void TreeSpec::validate() const {
    if (fanout < 1) {
        throw std::invalid_argument("fanout must be at least 1");
    }
    std::function<void(const TreeNode&, std::int64_t)> walk = [&](const TreeNode& t, std::int64_t level) {
        if (t.is_leaf()) {
            if (level != depth) {
                throw std::invalid_argument("leaf " + std::to_string(*t.payload) + " at depth " +
                                            std::to_string(level) + ", expected " + std::to_string(depth));
            }
            return;
        }
        const auto c = static_cast<std::int64_t>(t.children.size());
        if (c < 1 || c > fanout) {
            throw std::invalid_argument("node at depth " + std::to_string(level) + " has " + std::to_string(c) +
                                        " children, allowed 1.." + std::to_string(fanout));
        }
        for (const TreeNode& ch : t.children) {
            walk(ch, level + 1);
        }
    };
    walk(root, 0);
}

TreeSpec TreeSpec::from_json(const json& j) {
    TreeSpec s;
    s.fanout = j.at("M").get<std::int64_t>();
    s.depth = j.at("depth").get<std::int64_t>();
    s.root = TreeNode::from_json(j.at("tree"));
    s.validate();
    return s;
}

json TreeSpec::to_json() const { return {{"M", fanout}, {"depth", depth}, {"tree", root.to_json()}}; }

Expr tree_builder(const TreeNode& t) {
    if (t.is_leaf()) {
        return lang::alloc(lang::injl(lang::int_lit(*t.payload)));
    }
    Expr list = lang::injl(lang::unit_lit());
    for (auto it = t.children.rbegin(); it != t.children.rend(); ++it) {
        list = lang::injr(lang::pair(tree_builder(*it), list));
    }
    return lang::alloc(lang::injr(list));
}

std::uint64_t build_tree_direct(State& s, const TreeNode& t) {
    if (t.is_leaf()) {
        return s.alloc(lang::injl_val(lang::int_lit(*t.payload)));
    }
    // Right-to-left evaluation builds the last child first.
    std::vector<std::uint64_t> locs(t.children.size());
    for (std::size_t i = t.children.size(); i-- > 0;) {
        locs[i] = build_tree_direct(s, t.children[i]);
    }
    Expr list = lang::injl_val(lang::unit_lit());
    for (std::size_t i = locs.size(); i-- > 0;) {
        list = lang::injr_val(lang::pair_val(lang::loc_lit(locs[i]), list));
    }
    return s.alloc(lang::injr_val(list));
}

namespace {

std::vector<Expr> list_items(Expr list) {
    std::vector<Expr> out;
    while (list->kind == lang::Kind::InjRV) {
        const Expr& cell = list->kids[0];
        if (cell->kind != lang::Kind::PairV) {
            throw std::runtime_error("malformed list cell");
        }
        out.push_back(cell->kids[0]);
        list = cell->kids[1];
    }
    if (list->kind != lang::Kind::InjLV) {
        throw std::runtime_error("malformed list end");
    }
    return out;
}

const Expr& deref(const State& s, const Expr& loc) {
    if (loc->kind != lang::Kind::Loc) {
        throw std::runtime_error("expected a location, got " + lang::print(loc));
    }
    const Expr* v = s.load(loc->index);
    if (v == nullptr) {
        throw std::runtime_error("dangling location");
    }
    return *v;
}

// Ranked tree: inl v | inr [(count, ref sub), ...]; checks every count.
bool ranks_match(const State& s, const Expr& ranked, const TreeNode& spec, std::string& why) {
    if (ranked->kind == lang::Kind::InjLV) {
        if (!spec.is_leaf() || ranked->kids[0]->kind != lang::Kind::Int ||
            ranked->kids[0]->num != lang::Int(*spec.payload)) {
            why = "leaf mismatch";
            return false;
        }
        return true;
    }
    if (ranked->kind != lang::Kind::InjRV || spec.is_leaf()) {
        why = "node shape mismatch";
        return false;
    }
    const auto items = list_items(ranked->kids[0]);
    if (items.size() != spec.children.size()) {
        why = "child count mismatch";
        return false;
    }
    for (std::size_t i = 0; i < items.size(); ++i) {
        const Expr& pr = items[i];
        if (pr->kind != lang::Kind::PairV || pr->kids[0]->kind != lang::Kind::Int) {
            why = "malformed ranked child";
            return false;
        }
        if (pr->kids[0]->num != lang::Int(spec.children[i].leaf_count())) {
            why = "rank " + pr->kids[0]->num.str() + " where the subtree has " +
                  std::to_string(spec.children[i].leaf_count()) + " leaves";
            return false;
        }
        if (!ranks_match(s, deref(s, pr->kids[1]), spec.children[i], why)) {
            return false;
        }
    }
    return true;
}

struct Paths {
    std::vector<std::vector<std::int64_t>> accept;
    std::vector<std::vector<std::int64_t>> reject;
};

// One child index per level, as the optimized sampler draws them.
void level_paths(const TreeNode& t, std::int64_t m, std::vector<std::int64_t>& prefix, Paths& out) {
    if (t.is_leaf()) {
        out.accept.push_back(prefix);
        return;
    }
    for (std::int64_t idx = 0; idx < m; ++idx) {
        prefix.push_back(idx);
        if (idx < static_cast<std::int64_t>(t.children.size())) {
            level_paths(t.children[static_cast<std::size_t>(idx)], m, prefix, out);
        } else {
            out.reject.push_back(prefix);
        }
        prefix.pop_back();
    }
}

// One d-digit base-m number per round, as the intermediate sampler draws it.
Paths number_paths(const TreeNode& root, std::int64_t m, std::int64_t d) {
    Paths p;
    std::int64_t total = 1;
    for (std::int64_t i = 0; i < d; ++i) {
        total *= m;
    }
    for (std::int64_t x = 0; x < total; ++x) {
        const TreeNode* t = &root;
        std::int64_t rest = x;
        std::int64_t place = total / m;
        bool ok = true;
        while (!t->is_leaf()) {
            const std::int64_t idx = rest / place;
            rest -= idx * place;
            place = place == 1 ? 1 : place / m;
            if (idx >= static_cast<std::int64_t>(t->children.size())) {
                ok = false;
                break;
            }
            t = &t->children[static_cast<std::size_t>(idx)];
        }
        (ok ? p.accept : p.reject).push_back({x});
    }
    return p;
}

// n_max = (rounds-1)*Rmax + Amax over every accepting and rejecting round.
std::uint64_t calibrate_paths(const Cfg& cfg, const Paths& p, std::uint64_t rounds) {
    if (rounds == 0) {
        return 0;
    }
    std::uint64_t amax = 0;
    for (const auto& a : p.accept) {
        const auto len = sem::scripted_length(cfg, a);
        if (!len) {
            throw std::runtime_error("accepting path does not terminate as scripted");
        }
        amax = std::max(amax, *len);
    }
    std::uint64_t rmax = 0;
    if (!p.reject.empty()) {
        const auto& a0 = p.accept.front();
        const std::uint64_t base = *sem::scripted_length(cfg, a0);
        for (const auto& r : p.reject) {
            auto script = r;
            script.insert(script.end(), a0.begin(), a0.end());
            const auto len = sem::scripted_length(cfg, script);
            if (!len) {
                throw std::runtime_error("rejecting path does not restart as scripted");
            }
            rmax = std::max(rmax, *len - base);
        }
    }
    return (rounds - 1) * rmax + amax;
}

Dist<Val> leaf_distribution(const TreeNode& root) { return uniform_vals(root.leaves()); }

void sampler_check(CaseReport& rep, const std::string& what, const Cfg& cfg, const Paths& paths,
                   std::uint64_t rounds, const Dist<Val>& target, const Rational& bound, const sem::ExecOptions& opts,
                   Rational& worst_gap) {
    const std::uint64_t n_max = calibrate_paths(cfg, paths, rounds);
    rep.params["n_max_" + what] = n_max;
    const Run r = run(cfg, n_max, opts);
    if (!r.ok) {
        rep.inconclusive = true;
        rep.note = "step budget exhausted";
        return;
    }
    const Rational gap = max_gap(r.result.values, target);
    worst_gap = std::max(worst_gap, gap);
    rep.residual = std::max(rep.residual, r.result.residual);
    rep.add(what + ": residual within bound", r.result.residual <= bound,
            show(r.result.residual) + " vs " + show(bound));
    rep.add(what + ": gaps within residual", gap <= r.result.residual,
            "gap " + show(gap) + ", residual " + show(r.result.residual));
}

}  // namespace

TreeNode read_tree(const State& s, std::uint64_t loc) {
    const Expr* v = s.load(loc);
    if (v == nullptr) {
        throw std::runtime_error("dangling tree location");
    }
    const Expr& e = *v;
    TreeNode t;
    if (e->kind == lang::Kind::InjLV && e->kids[0]->kind == lang::Kind::Int) {
        t.payload = e->kids[0]->num.convert_to<std::int64_t>();
        return t;
    }
    if (e->kind != lang::Kind::InjRV) {
        throw std::runtime_error("malformed tree node " + lang::print(e));
    }
    for (const Expr& c : list_items(e->kids[0])) {
        if (c->kind != lang::Kind::Loc) {
            throw std::runtime_error("tree child is not a location");
        }
        t.children.push_back(read_tree(s, c->index));
    }
    return t;
}

CaseReport run_bptree(const TreeSpec& spec, std::uint64_t rounds, const Options& opts) {
    spec.validate();
    CaseReport rep;
    rep.name = "bptree";
    rep.quantity = "max gap";
    const std::int64_t leaves = spec.root.leaf_count();
    std::int64_t slots = 1;
    for (std::int64_t i = 0; i < spec.depth; ++i) {
        slots *= spec.fanout;
    }
    rep.params = {{"M", spec.fanout}, {"depth", spec.depth}, {"leaves", leaves}, {"rounds", rounds}};
    rep.params["tree"] = spec.root.to_json();
    rep.bound = power(1 - make_rational(leaves, slots), rounds);

    // Both construction paths must produce the same heap.
    const Cfg built = run_deterministic(sem::initial(tree_builder(spec.root)), opts.exec);
    State direct;
    const std::uint64_t root = build_tree_direct(direct, spec.root);
    const bool same_heap = built.expr->kind == lang::Kind::Loc && built.expr->index == root && built.state == direct;
    rep.add("object-language and direct construction agree", same_heap);
    rep.add("heap tree matches spec", read_tree(built.state, root) == spec.root);
    const State& sigma = built.state;
    const std::map<std::string, Expr> env{{"r", lang::loc_lit(root)}};
    auto prog = [&](const std::string& src) { return lang::Library::standard().load_program(src, "<bptree>", env); };

    const Cfg ranked = run_deterministic(Cfg{prog("build_ranked (!r)"), sigma}, opts.exec);
    std::string why;
    rep.add("ranks equal leaf counts", ranks_match(ranked.state, ranked.expr, spec.root, why), why);

    const Dist<Val> target = leaf_distribution(spec.root);
    const Cfg naive{prog("naive_sample (build_ranked (!r))"), sigma};
    const Run nr = run(naive, kUnbounded, opts.exec);
    if (!nr.ok) {
        rep.inconclusive = true;
        rep.note = "step budget exhausted";
        return rep;
    }
    rep.add("naive sampler exactly uniform", nr.result.residual == 0 && nr.result.values == target);
    check_labels(rep, "naive", naive, kUnbounded, opts.exec);

    Rational worst = max_gap(nr.result.values, target);
    const std::string m = num(spec.fanout);
    Paths levels;
    std::vector<std::int64_t> prefix;
    level_paths(spec.root, spec.fanout, prefix, levels);
    sampler_check(rep, "optimized", Cfg{prog("optimized_sample " + m + " (!r)"), sigma}, levels, rounds, target,
                  rep.bound, opts.exec, worst);
    sampler_check(rep, "intermediate", Cfg{prog("intermediate_sample " + m + " (!r)"), sigma},
                  number_paths(spec.root, spec.fanout, spec.depth), rounds, target, rep.bound, opts.exec, worst);
    rep.computed = worst;
    // Gaps are bounded by each sampler's own residual, itself at most the bound.
    return rep;
}

CaseReport insert_and_resample(const TreeSpec& spec, std::int64_t payload, std::uint64_t rounds,
                               const Options& opts) {
    spec.validate();
    const Cfg built = run_deterministic(sem::initial(tree_builder(spec.root)), opts.exec);
    const std::map<std::string, Expr> env{{"r", built.expr}};
    const Expr ins = lang::Library::standard().load_program(
        "insert_tree " + num(spec.fanout) + " r " + num(payload), "<bptree>", env);
    const Cfg after = run_deterministic(Cfg{ins, built.state}, opts.exec);
    const TreeNode grown = read_tree(after.state, built.expr->index);

    TreeSpec next{spec.fanout, grown.depth(), grown};
    std::string structural;
    try {
        next.validate();
    } catch (const std::invalid_argument& e) {
        structural = e.what();
    }
    if (!structural.empty()) {
        CaseReport rep;
        rep.name = "bptree-insert";
        rep.params = {{"M", spec.fanout}, {"payload", payload}, {"tree", grown.to_json()}};
        rep.add("fanout and equal depth after insert", false, structural);
        rep.computed = 0;
        return rep;
    }
    CaseReport rep = run_bptree(next, rounds, opts);
    rep.name = "bptree-insert";
    rep.params["payload"] = payload;
    rep.params["before"] = spec.root.to_json();
    auto expected = spec.root.leaves();
    expected.push_back(payload);
    auto got = grown.leaves();
    std::sort(expected.begin(), expected.end());
    std::sort(got.begin(), got.end());
    rep.add("leaf multiset grows by the payload", got == expected);
    rep.add("fanout and equal depth after insert", true);

    // The packaged interface: build by repeated insertion, then sample naively.
    const auto items = grown.leaves();
    std::ostringstream src;
    src << "unpack (naive_pkg " << num(spec.fanout) << ") as pk in\nlet (init, ins, samp) = pk in\nlet t = init "
        << num(items.front()) << " in\n";
    for (std::size_t i = 1; i < items.size(); ++i) {
        src << "ins t " << num(items[i]) << ";\n";
    }
    src << "samp t";
    const Run pk = run(sem::initial(program(src.str())), kUnbounded, opts.exec);
    rep.add("packaged insert then sample is uniform",
            pk.ok && pk.result.residual == 0 && pk.result.values == leaf_distribution(grown));
    return rep;
}

std::vector<std::string> case_names() {
    return {"many-to-one", "rejection", "dice", "switching-weak", "switching-transcript", "cpa", "bptree",
            "bptree-insert"};
}

CaseReport run_case(const json& entry, const Options& opts) {
    const std::string name = entry.at("case").get<std::string>();
    auto u = [&](const char* key, std::uint64_t dflt) { return entry.value(key, dflt); };
    auto i = [&](const char* key, std::int64_t dflt) { return entry.value(key, dflt); };
    if (name == "many-to-one") {
        return run_many_to_one_prog(u("n_max", 100), entry.value("variant", std::string("bits")) == "trits", opts);
    }
    if (name == "rejection") {
        return run_rejection(i("N", 7), i("M", 5), u("rounds", 5), opts);
    }
    if (name == "dice") {
        return run_dice(u("rounds", 4), opts);
    }
    if (name == "switching-weak") {
        return run_switching_weak(i("N", 4), i("Q", 2), opts);
    }
    if (name == "switching-transcript") {
        return run_switching_transcript(i("N", 4), i("Q", 2), opts);
    }
    if (name == "cpa") {
        return run_cpa(i("N", 3), entry.value("messages", std::vector<std::int64_t>{0, 1}), opts);
    }
    if (name == "bptree" || name == "bptree-insert") {
        const TreeSpec spec = entry.contains("spec")
                                  ? TreeSpec::from_json(entry.at("spec"))
                                  : TreeSpec::from_json(json::parse(R"({"M":3,"depth":2,"tree":[[0,1],[2,3,4],[5]]})"));
        if (name == "bptree") {
            return run_bptree(spec, u("rounds", 6), opts);
        }
        return insert_and_resample(spec, i("payload", 6), u("rounds", 6), opts);
    }
    throw std::invalid_argument("unknown case '" + name + "'");
}

}  // namespace pcw::cases
