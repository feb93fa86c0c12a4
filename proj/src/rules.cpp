#include "pcw/rules.hpp"

#include <set>
#include <sstream>
#include <stdexcept>

#include "pcw/coupling.hpp"
#include "pcw/lang/library.hpp"
#include "pcw/lang/syntax.hpp"

namespace pcw::rules {

using coupling::arcoupl_check;
using coupling::CouplingQuery;
using coupling::Relation;
using nlohmann::json;

bool RuleReport::passed() const {
    for (const Check& c : checks) {
        if (!c.ok) {
            return false;
        }
    }
    return true;
}

bool RuleReport::as_expected() const { return passed() == expect_holds.value_or(true); }

void RuleReport::add(std::string name, bool ok, std::string detail) {
    checks.push_back({std::move(name), ok, std::move(detail)});
}

json RuleReport::to_json() const {
    json cs = json::array();
    for (const Check& c : checks) {
        cs.push_back({{"name", c.name}, {"ok", c.ok}, {"detail", c.detail}});
    }
    json out = {{"rule", rule}, {"params", params}, {"holds", passed()}, {"checks", cs}};
    if (expect_holds) {
        out["expect"] = *expect_holds ? "holds" : "fails";
    }
    out["as_expected"] = as_expected();
    return out;
}

Injection Injection::from_pairs(const std::vector<std::pair<std::int64_t, std::int64_t>>& pairs, std::int64_t dom_max,
                                std::int64_t cod_max) {
    if (dom_max < 0) {
        throw std::invalid_argument("injection domain bound must be non-negative");
    }
    Injection f;
    f.image.assign(static_cast<std::size_t>(dom_max + 1), -1);
    std::set<std::int64_t> used;
    for (const auto& [n, m] : pairs) {
        if (n < 0 || n > dom_max) {
            throw std::invalid_argument("injection input " + std::to_string(n) + " outside 0.." + std::to_string(dom_max));
        }
        if (m < 0 || m > cod_max) {
            throw std::invalid_argument("injection image " + std::to_string(m) + " outside 0.." + std::to_string(cod_max));
        }
        auto& slot = f.image[static_cast<std::size_t>(n)];
        if (slot != -1) {
            throw std::invalid_argument("injection input " + std::to_string(n) + " listed twice");
        }
        if (!used.insert(m).second) {
            throw std::invalid_argument("injection is not injective: image " + std::to_string(m) + " repeated");
        }
        slot = m;
    }
    for (std::size_t n = 0; n < f.image.size(); ++n) {
        if (f.image[n] == -1) {
            throw std::invalid_argument("injection undefined at " + std::to_string(n));
        }
    }
    return f;
}

Injection Injection::identity(std::int64_t dom_max) {
    Injection f;
    for (std::int64_t n = 0; n <= dom_max; ++n) {
        f.image.push_back(n);
    }
    return f;
}

std::vector<std::pair<std::int64_t, std::int64_t>> Injection::pairs() const {
    std::vector<std::pair<std::int64_t, std::int64_t>> out;
    for (std::size_t n = 0; n < image.size(); ++n) {
        out.emplace_back(static_cast<std::int64_t>(n), image[n]);
    }
    return out;
}

namespace {

json pairs_json(const Injection& f) {
    json out = json::array();
    for (const auto& [a, b] : f.pairs()) {
        out.push_back({a, b});
    }
    return out;
}

void require_injection(const Injection& f, std::int64_t dom_max, std::int64_t cod_max) {
    (void)Injection::from_pairs(f.pairs(), dom_max, cod_max);
}

std::string verdict_detail(const Rational& mv, const Rational& eps) {
    return "max violation " + to_exact_string(mv) + " vs eps " + to_exact_string(eps);
}

// Holds at the stated error and fails a millionth below it (or the error is 0).
void add_tightness(RuleReport& r, const Rational& mv, const Rational& err) {
    r.add("holds at stated error", mv <= err, verdict_detail(mv, err));
    r.add("violation equals stated error", mv == err, verdict_detail(mv, err));
    if (err > 0) {
        const Rational below = err - Rational(1, 1000000);
        const Rational eps = below < 0 ? Rational(0) : below;
        r.add("fails one millionth below", mv > eps, verdict_detail(mv, eps));
    }
}

State append_value(const State& sigma, std::uint64_t label, std::int64_t v) {
    const lang::Tape* t = sigma.tape(label);
    if (t == nullptr) {
        throw std::out_of_range("unknown tape label " + std::to_string(label));
    }
    lang::Tape next = *t;
    next.contents.push_back(v);
    State out = sigma;
    out.set_tape(label, std::move(next));
    return out;
}

template <typename A, typename CA, typename B, typename CB>
Rational violation(const Dist<A, CA>& mu1, const Dist<B, CB>& mu2, const Relation<A, B>& rel) {
    return coupling::max_violation(mu1, mu2, rel).value;
}

}  // namespace

std::int64_t decoder(std::int64_t n, const Digits& digits) {
    if (n < 0) {
        throw std::invalid_argument("decoder base bound must be non-negative");
    }
    std::int64_t value = 0;
    for (std::int64_t d : digits) {
        if (d < 0 || d > n) {
            throw std::invalid_argument("decoder digit " + std::to_string(d) + " outside 0.." + std::to_string(n));
        }
        if (__builtin_mul_overflow(value, n + 1, &value) || __builtin_add_overflow(value, d, &value)) {
            throw std::overflow_error("decoder value overflows 64 bits");
        }
    }
    return value;
}

Dist<Digits> uniform_lists(std::int64_t n, std::int64_t p) {
    if (n < 0 || p < 0) {
        throw std::invalid_argument("uniform_lists needs n >= 0 and p >= 0");
    }
    Dist<Digits> acc = Dist<Digits>::ret({});
    const Dist<std::int64_t> digit = uniform(n + 1);
    for (std::int64_t i = 0; i < p; ++i) {
        acc = pcw::bind(acc, [&](const Digits& l) {
            return fmap<Digits>(digit, [&](std::int64_t d) {
                Digits next = l;
                next.push_back(d);
                return next;
            });
        });
    }
    return acc;
}

RuleReport validate_rand_rand_le(std::int64_t n, std::int64_t m, const Injection& f) {
    if (n < 0 || n > m) {
        throw std::invalid_argument("rand-rand-le needs 0 <= N <= M");
    }
    require_injection(f, n, m);
    RuleReport r;
    r.rule = "rand-rand-le";
    r.params = {{"N", n}, {"M", m}, {"f", pairs_json(f)}};
    const Rational err = make_rational(m - n, m + 1);
    r.params["error"] = rational_to_json(err);
    const Rational mv = violation(uniform(n + 1), uniform(m + 1), Relation<std::int64_t, std::int64_t>(f.pairs()));
    add_tightness(r, mv, err);
    return r;
}

RuleReport validate_rand_rand_ge(std::int64_t n, std::int64_t m, const Injection& f) {
    if (m < 0 || m > n) {
        throw std::invalid_argument("rand-rand-ge needs 0 <= M <= N");
    }
    require_injection(f, m, n);
    RuleReport r;
    r.rule = "rand-rand-ge";
    r.params = {{"N", n}, {"M", m}, {"f", pairs_json(f)}};
    const Rational err = make_rational(n - m, n + 1);
    r.params["error"] = rational_to_json(err);
    Relation<std::int64_t, std::int64_t> rel;
    for (const auto& [a, b] : f.pairs()) {
        rel.emplace_back(b, a);
    }
    const Rational mv = violation(uniform(n + 1), uniform(m + 1), rel);
    add_tightness(r, mv, err);
    return r;
}

RuleReport validate_many_to_one(std::int64_t n, std::int64_t p) {
    if (n < 0 || p < 1) {
        throw std::invalid_argument("many-to-one needs N >= 0 and p >= 1");
    }
    RuleReport r;
    r.rule = "many-to-one";
    const Dist<Digits> lists = uniform_lists(n, p);
    std::int64_t size = 1;
    for (std::int64_t i = 0; i < p; ++i) {
        size *= n + 1;
    }
    const std::int64_t m = size - 1;
    r.params = {{"N", n}, {"p", p}, {"M", m}};

    Relation<Digits, std::int64_t> rel;
    std::set<std::int64_t> images;
    for (const auto& [l, _] : lists) {
        const std::int64_t v = decoder(n, l);
        rel.emplace_back(l, v);
        images.insert(v);
    }
    const bool bijective = images.size() == lists.size() && !images.empty() && *images.begin() == 0 &&
                           *images.rbegin() == m;
    r.add("decoder is a bijection onto 0..M", bijective, std::to_string(images.size()) + " distinct values");

    const Rational fwd = violation(lists, uniform(m + 1), rel);
    r.add("lists to single sample at 0", fwd == 0, "max violation " + to_exact_string(fwd));
    Relation<std::int64_t, Digits> back;
    for (const auto& [l, v] : rel) {
        back.emplace_back(v, l);
    }
    const Rational bwd = violation(uniform(m + 1), lists, back);
    r.add("single sample to lists at 0", bwd == 0, "max violation " + to_exact_string(bwd));
    return r;
}

FragmentedAccounting fragmented_accounting(std::int64_t n, std::int64_t m, const Injection& f, const Rational& eps) {
    if (n < 0 || n >= m) {
        throw std::invalid_argument("fragmented coupling needs 0 <= N < M");
    }
    require_injection(f, n, m);
    if (eps < 0) {
        throw std::invalid_argument("epsilon must be non-negative");
    }
    FragmentedAccounting out;
    out.amplified = eps * make_rational(m + 1, m - n);
    out.amplified.canonicalize();
    std::set<std::int64_t> img(f.image.begin(), f.image.end());
    const Rational p = make_rational(1, m + 1);
    for (std::int64_t v = 0; v <= m; ++v) {
        if (img.count(v) == 0) {
            out.expectation += p * out.amplified;
        }
    }
    out.expectation.canonicalize();
    return out;
}

RuleReport validate_fragmented(std::int64_t n, std::int64_t m, const Injection& f, const Rational& eps) {
    coupling::require_epsilon(eps);
    const FragmentedAccounting acc = fragmented_accounting(n, m, f, eps);
    if (acc.amplified > 1) {
        throw std::invalid_argument("amplified error " + to_exact_string(acc.amplified) + " exceeds 1");
    }
    RuleReport r;
    r.rule = "fragmented";
    r.params = {{"N", n}, {"M", m}, {"f", pairs_json(f)}, {"epsilon", rational_to_json(eps)}};
    r.params["amplified"] = rational_to_json(acc.amplified);
    r.add("expected error equals eps", acc.expectation == eps,
          "expectation " + to_exact_string(acc.expectation) + ", off-image error " + to_exact_string(acc.amplified));

    // Left tape has bound N, right tape bound M, both target label 0.
    const State left = standard_state(n);
    const State right = standard_state(m);
    std::vector<std::int64_t> preimage(static_cast<std::size_t>(m + 1), -1);
    for (const auto& [a, b] : f.pairs()) {
        preimage[static_cast<std::size_t>(b)] = a;
    }
    DistBuilder<State> lb;
    Relation<State, State> rel;
    const Rational p = make_rational(1, m + 1);
    for (std::int64_t v = 0; v <= m; ++v) {
        const std::int64_t a = preimage[static_cast<std::size_t>(v)];
        State l = a >= 0 ? append_value(left, 0, a) : left;
        lb.add(l, p);
        rel.emplace_back(std::move(l), append_value(right, 0, v));
    }
    const Dist<State> conditional = std::move(lb).build();
    const Dist<State> single = sem::state_step(right, 0);
    const Rational mv = violation(conditional, single, rel);
    r.add("fragmented relation is a 0-coupling", mv == 0, "max violation " + to_exact_string(mv));
    return r;
}

std::vector<CorpusProgram> load_corpus(std::int64_t tape_bound) {
    const auto dir = lang::asset_dir() / "corpus";
    const json manifest = json::parse(lang::read_file(dir / "corpus.json"));
    const std::map<std::string, lang::Expr> env{{"N", lang::int_lit(tape_bound)}};
    std::vector<CorpusProgram> out;
    for (const json& entry : manifest.at("programs")) {
        CorpusProgram p;
        p.name = entry.at("name").get<std::string>();
        p.file = entry.at("file").get<std::string>();
        p.program = lang::Library::standard().load_program_file(dir / p.file, env);
        out.push_back(std::move(p));
    }
    return out;
}

State standard_state(std::int64_t tape_bound) {
    State s;
    s.alloc(lang::int_lit(5));
    s.alloc_tape(tape_bound);
    s.alloc_tape(1, {0});
    return s;
}

Presample append_samples(std::uint64_t label, std::int64_t count) {
    return [label, count](const State& sigma) {
        Dist<State> acc = Dist<State>::ret(sigma);
        for (std::int64_t i = 0; i < count; ++i) {
            acc = pcw::bind(acc, [&](const State& s) { return sem::state_step(s, label); });
        }
        return acc;
    };
}

Presample append_fixed(std::uint64_t label, std::int64_t value) {
    return [label, value](const State& sigma) { return Dist<State>::ret(append_value(sigma, label, value)); };
}

RuleReport erasability_check(const std::string& kind, const Presample& mu, const State& sigma,
                             const std::vector<CorpusProgram>& corpus, std::uint64_t n_max) {
    RuleReport r;
    r.rule = "erasability";
    r.params = {{"kind", kind}, {"n_max", n_max}, {"programs", corpus.size()}};
    const Dist<State> pre = mu(sigma);
    for (const CorpusProgram& prog : corpus) {
        const auto direct = sem::exec_profile(sem::initial(prog.program, sigma), n_max);
        std::vector<DistBuilder<lang::Val>> mixed(n_max + 1);
        for (const auto& [s, w] : pre) {
            const auto prof = sem::exec_profile(sem::initial(prog.program, s), n_max);
            for (std::uint64_t n = 0; n <= n_max; ++n) {
                for (const auto& [v, wv] : prof[n]) {
                    mixed[n].add(v, w * wv);
                }
            }
        }
        std::string detail;
        for (std::uint64_t n = 0; n <= n_max && detail.empty(); ++n) {
            const Dist<lang::Val> after = std::move(mixed[n]).build_unchecked();
            if (after == direct[n]) {
                continue;
            }
            std::ostringstream os;
            os << "n=" << n << ":";
            for (const auto& [v, w] : direct[n]) {
                if (after(v) != w) {
                    os << " value " << lang::print(v) << " has " << to_exact_string(w) << " without presampling, "
                       << to_exact_string(after(v)) << " with it";
                    break;
                }
            }
            if (os.str().find("value") == std::string::npos) {
                for (const auto& [v, w] : after) {
                    if (direct[n](v) != w) {
                        os << " value " << lang::print(v) << " has " << to_exact_string(direct[n](v))
                           << " without presampling, " << to_exact_string(w) << " with it";
                        break;
                    }
                }
            }
            detail = os.str();
        }
        r.add(prog.name, detail.empty(), detail);
    }
    return r;
}

RuleReport validate_tape_tape_append(std::int64_t n, std::int64_t m, std::int64_t p, std::int64_t q,
                                     const ListRelation& rel, const Rational& eps, std::uint64_t n_max) {
    RuleReport r;
    r.rule = "tape-tape-append";
    json rj = json::array();
    for (const auto& [a, b] : rel) {
        rj.push_back({a, b});
    }
    r.params = {{"N", n}, {"M", m}, {"p", p}, {"q", q}, {"relation", rj}, {"epsilon", rational_to_json(eps)}};
    for (const auto& [a, b] : rel) {
        auto in_range = [](const Digits& l, std::int64_t len, std::int64_t hi) {
            if (static_cast<std::int64_t>(l.size()) != len) {
                return false;
            }
            for (std::int64_t d : l) {
                if (d < 0 || d > hi) {
                    return false;
                }
            }
            return true;
        };
        if (!in_range(a, p, n) || !in_range(b, q, m)) {
            throw std::invalid_argument("relation pair outside List(N,p) x List(M,q)");
        }
    }
    const auto verdict = arcoupl_check(CouplingQuery<Digits, std::less<Digits>, Digits, std::less<Digits>>{
        uniform_lists(n, p), uniform_lists(m, q), eps, rel});
    r.add("coupling premise", verdict.holds, verdict_detail(verdict.max_violation, eps));
    const RuleReport left = erasability_check("append " + std::to_string(p), append_samples(0, p), standard_state(n),
                                              load_corpus(n), n_max);
    const RuleReport right = erasability_check("append " + std::to_string(q), append_samples(0, q),
                                               standard_state(m), load_corpus(m), n_max);
    auto summarize = [](const RuleReport& e) {
        for (const Check& c : e.checks) {
            if (!c.ok) {
                return c.name + ": " + c.detail;
            }
        }
        return std::to_string(e.checks.size()) + " programs";
    };
    r.add("left append erasable", left.passed(), summarize(left));
    r.add("right append erasable", right.passed(), summarize(right));
    return r;
}

std::uint64_t amp_iterations(const Rational& eps, const Rational& k) {
    if (eps <= 0 || eps > 1) {
        throw std::invalid_argument("amplification needs 0 < eps <= 1");
    }
    if (k <= 1) {
        throw std::invalid_argument("amplification factor must exceed 1");
    }
    std::uint64_t i = 0;
    Rational x = eps;
    while (x < 1) {
        x *= k;
        ++i;
    }
    return i;
}

namespace {

std::int64_t get_int(const json& j, const char* key) { return j.at(key).get<std::int64_t>(); }

Injection injection_field(const json& inst, std::int64_t dom_max, std::int64_t cod_max) {
    if (!inst.contains("f")) {
        return Injection::identity(dom_max);
    }
    return Injection::from_pairs(inst.at("f").get<std::vector<std::pair<std::int64_t, std::int64_t>>>(), dom_max,
                                 cod_max);
}

// With an explicit epsilon the verdict is the coupling at that epsilon; without
// one it is the rule's own obligations.
RuleReport rand_rand(const json& inst, bool le) {
    const std::int64_t n = get_int(inst, "N");
    const std::int64_t m = get_int(inst, "M");
    const Injection f = le ? injection_field(inst, n, m) : injection_field(inst, m, n);
    RuleReport r = le ? validate_rand_rand_le(n, m, f) : validate_rand_rand_ge(n, m, f);
    if (inst.contains("epsilon")) {
        const Rational eps = rational_from_json(inst.at("epsilon"));
        coupling::require_epsilon(eps);
        Relation<std::int64_t, std::int64_t> rel;
        for (const auto& [a, b] : f.pairs()) {
            rel.emplace_back(le ? a : b, le ? b : a);
        }
        const Rational mv = violation(uniform(n + 1), uniform(m + 1), rel);
        RuleReport at;
        at.rule = r.rule;
        at.params = r.params;
        at.params["epsilon"] = rational_to_json(eps);
        at.add("coupling at epsilon", mv <= eps, verdict_detail(mv, eps));
        return at;
    }
    return r;
}

}  // namespace

RuleReport run_rule_instance(const json& inst) {
    const std::string rule = inst.at("rule").get<std::string>();
    RuleReport r;
    if (rule == "rand-rand-le" || rule == "rand-rand-ge") {
        r = rand_rand(inst, rule == "rand-rand-le");
    } else if (rule == "many-to-one") {
        r = validate_many_to_one(get_int(inst, "N"), get_int(inst, "p"));
    } else if (rule == "fragmented") {
        const std::int64_t n = get_int(inst, "N");
        const std::int64_t m = get_int(inst, "M");
        r = validate_fragmented(n, m, injection_field(inst, n, m), rational_from_json(inst.at("epsilon")));
    } else if (rule == "tape-tape-append") {
        r = validate_tape_tape_append(get_int(inst, "N"), get_int(inst, "M"), get_int(inst, "p"), get_int(inst, "q"),
                                      inst.at("relation").get<ListRelation>(), rational_from_json(inst.at("epsilon")),
                                      inst.value("n_max", std::uint64_t{12}));
    } else if (rule == "decoder") {
        r.rule = rule;
        const std::int64_t n = get_int(inst, "N");
        const auto digits = inst.at("digits").get<Digits>();
        const std::int64_t v = decoder(n, digits);
        r.params = {{"N", n}, {"digits", digits}, {"value", v}};
        r.add("value", v == get_int(inst, "value"), "decoded " + std::to_string(v));
    } else if (rule == "amp") {
        r.rule = rule;
        const Rational eps = rational_from_json(inst.at("epsilon"));
        const Rational k = rational_from_json(inst.at("k"));
        const std::uint64_t i = amp_iterations(eps, k);
        r.params = {{"epsilon", rational_to_json(eps)}, {"k", rational_to_json(k)}, {"iterations", i}};
        r.add("iterations", i == inst.at("iterations").get<std::uint64_t>(), std::to_string(i) + " iterations");
    } else if (rule == "erasability") {
        const std::int64_t bound = get_int(inst, "N");
        const std::string kind = inst.at("presample").get<std::string>();
        Presample mu;
        if (kind == "ret") {
            mu = [](const State& s) { return Dist<State>::ret(s); };
        } else if (kind == "state-step") {
            mu = append_samples(0, inst.value("count", std::int64_t{1}));
        } else if (kind == "fixed") {
            mu = append_fixed(0, inst.value("value", std::int64_t{0}));
        } else {
            throw std::invalid_argument("unknown presample kind '" + kind + "'");
        }
        r = erasability_check(kind, mu, standard_state(bound), load_corpus(bound),
                              inst.value("n_max", std::uint64_t{12}));
    } else {
        throw std::invalid_argument("unknown rule '" + rule + "'");
    }
    if (inst.contains("id")) {
        r.params["id"] = inst.at("id");
    }
    if (inst.contains("expect")) {
        const std::string expect = inst.at("expect").get<std::string>();
        if (expect != "holds" && expect != "fails") {
            throw std::invalid_argument("expect must be holds or fails");
        }
        r.expect_holds = expect == "holds";
    }
    return r;
}

}  // namespace pcw::rules
