#include "pcw/semantics.hpp"

#include <array>
#include <cstdlib>
#include <limits>
#include <string>

namespace pcw::sem {

using lang::BinOp;
using lang::Int;
using lang::Kind;
using lang::Node;
using lang::UnOp;

ExecOptions ExecOptions::from_env() {
    ExecOptions opts;
    if (const char* env = std::getenv("PCW_BUDGET"); env != nullptr && *env != '\0') {
        opts.max_steps = std::stoull(env);
    }
    return opts;
}

namespace {

// Next child to evaluate under the right-to-left evaluation contexts, or -1
// when `e` itself is the redex.
int eval_child(const Expr& e) {
    const auto& k = e->kids;
    auto pending = [&](int i) { return k[i] && !lang::is_value(k[i]); };
    switch (e->kind) {
    case Kind::Rec:
    case Kind::Var:
        return -1;
    case Kind::App:
    case Kind::BinOp:
    case Kind::Pair:
    case Kind::Store:
    case Kind::Rand:
        if (pending(1)) {
            return 1;
        }
        return pending(0) ? 0 : -1;
    default:
        return pending(0) ? 0 : -1;
    }
}

struct Head {
    enum class Kind { Stuck, Det, Uniform } kind = Kind::Stuck;
    Expr e;
    State s;
    std::int64_t n = 0;  // number of uniform outcomes
};

Head stuck() { return {}; }
Head det(Expr e, State s) { return {Head::Kind::Det, std::move(e), std::move(s), 0}; }

bool fits_i64(const Int& n) {
    return n >= std::numeric_limits<std::int64_t>::min() && n <= std::numeric_limits<std::int64_t>::max();
}

Head uniform_head(const Int& bound, const State& s, const ExecOptions& opts) {
    if (bound < 0) {
        return stuck();
    }
    if (bound >= opts.max_rand_support) {
        throw SupportTooLarge("rand bound " + bound.str() + " exceeds the enumeration limit");
    }
    return {Head::Kind::Uniform, nullptr, s, static_cast<std::int64_t>(bound) + 1};
}

Head binop_head(const Node& n, const State& s) {
    const Expr& a = n.kids[0];
    const Expr& b = n.kids[1];
    const BinOp op = n.binop();
    if (op == BinOp::Eq || op == BinOp::Ne) {
        const bool eq = lang::compare(a, b) == 0;
        return det(lang::bool_lit(op == BinOp::Eq ? eq : !eq), s);
    }
    if (op == BinOp::And || op == BinOp::Or) {
        if (a->kind != Kind::Bool || b->kind != Kind::Bool) {
            return stuck();
        }
        return det(lang::bool_lit(op == BinOp::And ? (a->flag && b->flag) : (a->flag || b->flag)), s);
    }
    if (a->kind != Kind::Int || b->kind != Kind::Int) {
        return stuck();
    }
    const Int& x = a->num;
    const Int& y = b->num;
    switch (op) {
    case BinOp::Add: return det(lang::int_lit(x + y), s);
    case BinOp::Sub: return det(lang::int_lit(x - y), s);
    case BinOp::Mul: return det(lang::int_lit(x * y), s);
    case BinOp::Quot:
        return y == 0 ? stuck() : det(lang::int_lit(x / y), s);
    case BinOp::Rem:
        return y == 0 ? stuck() : det(lang::int_lit(x % y), s);
    case BinOp::Lt: return det(lang::bool_lit(x < y), s);
    case BinOp::Le: return det(lang::bool_lit(x <= y), s);
    case BinOp::Gt: return det(lang::bool_lit(x > y), s);
    case BinOp::Ge: return det(lang::bool_lit(x >= y), s);
    default: return stuck();
    }
}

Head head_step(const Expr& e, const State& s, const ExecOptions& opts) {
    const Node& n = *e;
    const auto& k = n.kids;
    switch (n.kind) {
    case Kind::Rec:
        return det(lang::rec_val(n.b0, n.b1, k[0]), s);
    case Kind::App: {
        const Expr& fn = k[0];
        if (fn->kind != Kind::RecV) {
            return stuck();
        }
        Expr body = fn->kids[0];
        if (!fn->b0.is_wildcard()) {
            body = lang::subst(body, fn->b0, fn);
        }
        if (!fn->b1.is_wildcard()) {
            body = lang::subst(body, fn->b1, k[1]);
        }
        return det(std::move(body), s);
    }
    case Kind::BinOp:
        return binop_head(n, s);
    case Kind::UnOp:
        if (n.unop() == UnOp::Neg && k[0]->kind == Kind::Int) {
            return det(lang::int_lit(-k[0]->num), s);
        }
        if (n.unop() == UnOp::Not && k[0]->kind == Kind::Bool) {
            return det(lang::bool_lit(!k[0]->flag), s);
        }
        return stuck();
    case Kind::If:
        if (k[0]->kind != Kind::Bool) {
            return stuck();
        }
        return det(k[0]->flag ? k[1] : k[2], s);
    case Kind::Let:
        return det(n.b0.is_wildcard() ? k[1] : lang::subst(k[1], n.b0, k[0]), s);
    case Kind::Pair:
        return det(lang::pair_val(k[0], k[1]), s);
    case Kind::Fst:
    case Kind::Snd:
        if (k[0]->kind != Kind::PairV) {
            return stuck();
        }
        return det(k[0]->kids[n.kind == Kind::Fst ? 0 : 1], s);
    case Kind::InjL:
        return det(lang::injl_val(k[0]), s);
    case Kind::InjR:
        return det(lang::injr_val(k[0]), s);
    case Kind::Case: {
        const Expr& v = k[0];
        if (v->kind == Kind::InjLV) {
            return det(n.b0.is_wildcard() ? k[1] : lang::subst(k[1], n.b0, v->kids[0]), s);
        }
        if (v->kind == Kind::InjRV) {
            return det(n.b1.is_wildcard() ? k[2] : lang::subst(k[2], n.b1, v->kids[0]), s);
        }
        return stuck();
    }
    case Kind::Alloc: {
        State s2 = s;
        const auto loc = s2.alloc(k[0]);
        return det(lang::loc_lit(loc), std::move(s2));
    }
    case Kind::Load: {
        if (k[0]->kind != Kind::Loc) {
            return stuck();
        }
        const Expr* v = s.load(k[0]->index);
        return v ? det(*v, s) : stuck();
    }
    case Kind::Store: {
        if (k[0]->kind != Kind::Loc || s.load(k[0]->index) == nullptr) {
            return stuck();
        }
        State s2 = s;
        s2.store(k[0]->index, k[1]);
        return det(lang::unit_lit(), std::move(s2));
    }
    case Kind::Rand: {
        if (k[0]->kind != Kind::Int) {
            return stuck();
        }
        const Int& bound = k[0]->num;
        if (!k[1]) {
            return uniform_head(bound, s, opts);
        }
        if (k[1]->kind != Kind::Label) {
            return stuck();
        }
        const lang::Tape* t = s.tape(k[1]->index);
        if (t == nullptr || bound < 0) {
            return stuck();
        }
        // Bound mismatch and empty tapes both fall back to fresh sampling
        // that leaves the tape untouched.
        if (Int(t->bound) != bound || t->contents.empty()) {
            return uniform_head(bound, s, opts);
        }
        State s2 = s;
        lang::Tape popped = *t;
        const std::int64_t head = popped.contents.front();
        popped.contents.erase(popped.contents.begin());
        s2.set_tape(k[1]->index, std::move(popped));
        return det(lang::int_lit(head), std::move(s2));
    }
    case Kind::AllocTape: {
        if (k[0]->kind != Kind::Int || k[0]->num < 0 || !fits_i64(k[0]->num)) {
            return stuck();
        }
        State s2 = s;
        const auto label = s2.alloc_tape(static_cast<std::int64_t>(k[0]->num));
        return det(lang::label_lit(label), std::move(s2));
    }
    case Kind::Pack:
        return det(k[0], s);
    case Kind::Unpack:
        return det(n.b0.is_wildcard() ? k[1] : lang::subst(k[1], n.b0, k[0]), s);
    default:
        return stuck();
    }
}

struct Frame {
    Expr node;
    int idx;
};

// Splits `e` into evaluation context frames and the redex.
Expr decompose(const Expr& e, std::vector<Frame>& path) {
    path.clear();
    Expr cur = e;
    for (;;) {
        const int i = eval_child(cur);
        if (i < 0) {
            return cur;
        }
        path.push_back({cur, i});
        cur = cur->kids[i];
    }
}

Expr plug(const std::vector<Frame>& path, Expr e) {
    for (auto it = path.rbegin(); it != path.rend(); ++it) {
        const auto& k = it->node->kids;
        std::array<Expr, 3> kids = k;
        kids[it->idx] = std::move(e);
        e = lang::with_kids(it->node, kids[0], kids[1], kids[2]);
    }
    return e;
}

// Reduces to a single head step and plugs back; used by every driver below.
struct Stepper {
    const ExecOptions& opts;
    std::vector<Frame> path;

    Head operator()(const Cfg& cfg) {
        const Expr redex = decompose(cfg.expr, path);
        Head h = head_step(redex, cfg.state, opts);
        if (h.kind == Head::Kind::Det) {
            h.e = plug(path, std::move(h.e));
        }
        return h;
    }

    Cfg outcome(const Head& h, std::int64_t i) const { return Cfg{plug(path, lang::int_lit(i)), h.s}; }
};

// Depth-first enumeration of every execution path up to `n` steps.
template <typename OnValue, typename OnCutoff, typename OnStuck>
bool enumerate(const Cfg& root, std::uint64_t n, const ExecOptions& opts, std::uint64_t& steps, OnValue on_value,
               OnCutoff on_cutoff, OnStuck on_stuck) {
    struct Item {
        Cfg cfg;
        Rational w;
        std::uint64_t used;
    };
    std::vector<Item> stack;
    stack.push_back({root, Rational(1), 0});
    Stepper stepper{opts, {}};
    bool exhausted = false;
    while (!stack.empty()) {
        Item item = std::move(stack.back());
        stack.pop_back();
        for (;;) {
            if (lang::is_value(item.cfg.expr)) {
                on_value(item.cfg, item.w, item.used);
                break;
            }
            if (item.used >= n || exhausted) {
                on_cutoff(item.cfg, item.w);
                break;
            }
            if (steps >= opts.max_steps) {
                exhausted = true;
                on_cutoff(item.cfg, item.w);
                break;
            }
            ++steps;
            Head h = stepper(item.cfg);
            if (h.kind == Head::Kind::Stuck) {
                on_stuck(item.cfg, item.w);
                break;
            }
            ++item.used;
            if (h.kind == Head::Kind::Det) {
                item.cfg = Cfg{std::move(h.e), std::move(h.s)};
                continue;
            }
            const Rational w = item.w / Rational(h.n);
            for (std::int64_t i = h.n - 1; i >= 1; --i) {
                stack.push_back({stepper.outcome(h, i), w, item.used});
            }
            item.cfg = stepper.outcome(h, 0);
            item.w = w;
        }
    }
    return exhausted;
}

}  // namespace

Dist<Cfg> step(const Cfg& cfg, const ExecOptions& opts) {
    if (lang::is_value(cfg.expr)) {
        throw std::invalid_argument("step called on a value");
    }
    Stepper stepper{opts, {}};
    Head h = stepper(cfg);
    switch (h.kind) {
    case Head::Kind::Stuck:
        return {};
    case Head::Kind::Det:
        return Dist<Cfg>::ret(Cfg{std::move(h.e), std::move(h.s)});
    case Head::Kind::Uniform: {
        DistBuilder<Cfg> b;
        const Rational w(1, static_cast<unsigned long>(h.n));
        for (std::int64_t i = 0; i < h.n; ++i) {
            b.add(stepper.outcome(h, i), w);
        }
        return std::move(b).build_unchecked();
    }
    }
    return {};
}

ExecResult exec_approx(const Cfg& cfg, std::uint64_t n_max, const ExecOptions& opts) {
    ExecResult r;
    DistBuilder<Val> values;
    r.budget_exhausted = enumerate(
        cfg, n_max, opts, r.steps, [&](const Cfg& c, const Rational& w, std::uint64_t) { values.add(Val(c.expr), w); },
        [&](const Cfg&, const Rational& w) { r.residual += w; }, [&](const Cfg&, const Rational& w) { r.stuck += w; });
    r.values = std::move(values).build_unchecked();
    return r;
}

Dist<Val> exec_n(const Cfg& cfg, std::uint64_t n, const ExecOptions& opts) {
    ExecResult r = exec_approx(cfg, n, opts);
    if (r.budget_exhausted) {
        throw std::runtime_error("step budget exhausted computing exec_n");
    }
    return std::move(r.values);
}

Dist<Cfg> pexec_n(const Cfg& cfg, std::uint64_t n, const ExecOptions& opts) {
    DistBuilder<Cfg> out;
    std::uint64_t steps = 0;
    const bool exhausted = enumerate(
        cfg, n, opts, steps, [&](const Cfg& c, const Rational& w, std::uint64_t) { out.add(c, w); },
        [&](const Cfg& c, const Rational& w) { out.add(c, w); }, [](const Cfg&, const Rational&) {});
    if (exhausted) {
        throw std::runtime_error("step budget exhausted computing pexec_n");
    }
    return std::move(out).build_unchecked();
}

Rational term_prob_n(const Cfg& cfg, std::uint64_t n, const ExecOptions& opts) { return exec_n(cfg, n, opts).mass(); }

std::vector<Dist<Val>> exec_profile(const Cfg& cfg, std::uint64_t n_max, const ExecOptions& opts) {
    std::vector<DistBuilder<Val>> by_steps(n_max + 1);
    std::uint64_t steps = 0;
    const bool exhausted = enumerate(
        cfg, n_max, opts, steps,
        [&](const Cfg& c, const Rational& w, std::uint64_t used) { by_steps[used].add(Val(c.expr), w); },
        [](const Cfg&, const Rational&) {}, [](const Cfg&, const Rational&) {});
    if (exhausted) {
        throw std::runtime_error("step budget exhausted computing exec profile");
    }
    std::vector<Dist<Val>> out;
    out.reserve(n_max + 1);
    DistBuilder<Val> acc;
    for (auto& b : by_steps) {
        for (const auto& [v, w] : std::move(b).build_unchecked()) {
            acc.add(v, w);
        }
        out.push_back(DistBuilder<Val>(acc).build_unchecked());
    }
    return out;
}

Dist<State> state_step(const State& sigma, std::uint64_t label) {
    const lang::Tape* t = sigma.tape(label);
    if (t == nullptr) {
        throw std::invalid_argument("state_step: unknown tape label " + std::to_string(label));
    }
    DistBuilder<State> b;
    const Rational w(1, static_cast<unsigned long>(t->bound + 1));
    for (std::int64_t i = 0; i <= t->bound; ++i) {
        lang::Tape appended = *t;
        appended.contents.push_back(i);
        State s = sigma;
        s.set_tape(label, std::move(appended));
        b.add(std::move(s), w);
    }
    return std::move(b).build_unchecked();
}

std::optional<std::uint64_t> scripted_length(const Cfg& cfg, const std::vector<std::int64_t>& outcomes,
                                             std::uint64_t max_steps) {
    ExecOptions opts;
    Stepper stepper{opts, {}};
    Cfg cur = cfg;
    std::size_t next = 0;
    for (std::uint64_t used = 0; used < max_steps; ++used) {
        if (lang::is_value(cur.expr)) {
            return used;
        }
        Head h = stepper(cur);
        switch (h.kind) {
        case Head::Kind::Stuck:
            return std::nullopt;
        case Head::Kind::Det:
            cur = Cfg{std::move(h.e), std::move(h.s)};
            break;
        case Head::Kind::Uniform:
            if (next >= outcomes.size() || outcomes[next] < 0 || outcomes[next] >= h.n) {
                return std::nullopt;
            }
            cur = stepper.outcome(h, outcomes[next++]);
            break;
        }
    }
    return std::nullopt;
}

}  // namespace pcw::sem
