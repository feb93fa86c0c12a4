#include "pcw/lang/ast.hpp"

#include <algorithm>
#include <deque>
#include <mutex>
#include <shared_mutex>
#include <stdexcept>
#include <unordered_map>

namespace pcw::lang {

namespace {

struct SymbolTable {
    std::shared_mutex mu;
    std::deque<std::string> names{"_"};
    std::unordered_map<std::string, std::uint32_t> ids{{"_", 0}};
    std::uint64_t fresh_counter = 0;
};

SymbolTable& symbols() {
    static SymbolTable table;
    return table;
}

using Fv = std::vector<Symbol>;

void merge_into(Fv& out, const Fv& in) {
    if (in.empty()) {
        return;
    }
    if (out.empty()) {
        out = in;
        return;
    }
    Fv merged;
    merged.reserve(out.size() + in.size());
    std::set_union(out.begin(), out.end(), in.begin(), in.end(), std::back_inserter(merged));
    out = std::move(merged);
}

Fv minus(const Fv& in, Symbol a, Symbol b = Symbol::wildcard()) {
    Fv out;
    out.reserve(in.size());
    for (Symbol s : in) {
        if (s != a && s != b) {
            out.push_back(s);
        }
    }
    return out;
}

bool mentions(const Fv& fv, Symbol x) { return std::binary_search(fv.begin(), fv.end(), x); }

// Recomputes the free-variable cache from kids and binders.
void compute_fv(Node& n) {
    Fv fv;
    const auto kid_fv = [&](int i) -> const Fv& {
        static const Fv none;
        return n.kids[i] ? n.kids[i]->fv : none;
    };
    switch (n.kind) {
    case Kind::Var:
        fv.push_back(n.b0);
        break;
    case Kind::Rec:
    case Kind::RecV:
        fv = minus(kid_fv(0), n.b0, n.b1);
        break;
    case Kind::Let:
    case Kind::Unpack:
        fv = kid_fv(0);
        merge_into(fv, minus(kid_fv(1), n.b0));
        break;
    case Kind::Case:
        fv = kid_fv(0);
        merge_into(fv, minus(kid_fv(1), n.b0));
        merge_into(fv, minus(kid_fv(2), n.b1));
        break;
    default:
        for (int i = 0; i < 3; ++i) {
            merge_into(fv, kid_fv(i));
        }
    }
    n.fv = std::move(fv);
}

Expr make(Node n) {
    compute_fv(n);
    return std::make_shared<const Node>(std::move(n));
}

Node node(Kind k, Expr k0 = nullptr, Expr k1 = nullptr, Expr k2 = nullptr) {
    Node n;
    n.kind = k;
    n.kids = {std::move(k0), std::move(k1), std::move(k2)};
    return n;
}

Expr require(Expr e) {
    if (!e) {
        throw std::invalid_argument("null subexpression");
    }
    return e;
}

Expr require_value(Expr e) {
    if (!e || !is_value(e)) {
        throw std::invalid_argument("value constructor applied to a non-value");
    }
    return e;
}

}  // namespace

Symbol Symbol::intern(std::string_view name) {
    auto& t = symbols();
    const std::string key(name);
    {
        std::shared_lock lock(t.mu);
        if (auto it = t.ids.find(key); it != t.ids.end()) {
            return Symbol(it->second);
        }
    }
    std::unique_lock lock(t.mu);
    if (auto it = t.ids.find(key); it != t.ids.end()) {
        return Symbol(it->second);
    }
    const auto id = static_cast<std::uint32_t>(t.names.size());
    t.names.push_back(key);
    t.ids.emplace(key, id);
    return Symbol(id);
}

const std::string& Symbol::name() const {
    auto& t = symbols();
    std::shared_lock lock(t.mu);
    return t.names[id_];
}

Symbol fresh_symbol(std::string_view base) {
    auto& t = symbols();
    for (;;) {
        std::string candidate;
        {
            std::unique_lock lock(t.mu);
            candidate = std::string(base) + "'" + std::to_string(++t.fresh_counter);
            if (t.ids.count(candidate) != 0) {
                continue;
            }
        }
        return Symbol::intern(candidate);
    }
}

Expr int_lit(Int n) {
    Node x = node(Kind::Int);
    x.num = std::move(n);
    return make(std::move(x));
}

Expr bool_lit(bool b) {
    static const Expr t = [] {
        Node x = node(Kind::Bool);
        x.flag = true;
        return make(std::move(x));
    }();
    static const Expr f = make(node(Kind::Bool));
    return b ? t : f;
}

Expr unit_lit() {
    static const Expr u = make(node(Kind::Unit));
    return u;
}

Expr loc_lit(std::uint64_t loc) {
    Node x = node(Kind::Loc);
    x.index = loc;
    return make(std::move(x));
}

Expr label_lit(std::uint64_t label) {
    Node x = node(Kind::Label);
    x.index = label;
    return make(std::move(x));
}

Expr rec_val(Symbol f, Symbol x, Expr body) {
    Node n = node(Kind::RecV, require(std::move(body)));
    n.b0 = f;
    n.b1 = x;
    return make(std::move(n));
}

Expr pair_val(Expr a, Expr b) { return make(node(Kind::PairV, require_value(std::move(a)), require_value(std::move(b)))); }
Expr injl_val(Expr v) { return make(node(Kind::InjLV, require_value(std::move(v)))); }
Expr injr_val(Expr v) { return make(node(Kind::InjRV, require_value(std::move(v)))); }

Expr var(Symbol x) {
    if (x.is_wildcard()) {
        throw std::invalid_argument("'_' cannot be used as a variable");
    }
    Node n = node(Kind::Var);
    n.b0 = x;
    return make(std::move(n));
}

Expr var(std::string_view name) { return var(Symbol::intern(name)); }

Expr rec(Symbol f, Symbol x, Expr body) {
    Node n = node(Kind::Rec, require(std::move(body)));
    n.b0 = f;
    n.b1 = x;
    return make(std::move(n));
}

Expr lam(Symbol x, Expr body) { return rec(Symbol::wildcard(), x, std::move(body)); }
Expr app(Expr fn, Expr arg) { return make(node(Kind::App, require(std::move(fn)), require(std::move(arg)))); }

Expr binop(BinOp op, Expr lhs, Expr rhs) {
    Node n = node(Kind::BinOp, require(std::move(lhs)), require(std::move(rhs)));
    n.op = static_cast<std::uint8_t>(op);
    return make(std::move(n));
}

Expr unop(UnOp op, Expr e) {
    Node n = node(Kind::UnOp, require(std::move(e)));
    n.op = static_cast<std::uint8_t>(op);
    return make(std::move(n));
}

Expr if_(Expr c, Expr t, Expr e) {
    return make(node(Kind::If, require(std::move(c)), require(std::move(t)), require(std::move(e))));
}

Expr let_(Symbol x, Expr bound, Expr body) {
    Node n = node(Kind::Let, require(std::move(bound)), require(std::move(body)));
    n.b0 = x;
    return make(std::move(n));
}

Expr seq(Expr first, Expr second) { return let_(Symbol::wildcard(), std::move(first), std::move(second)); }
Expr pair(Expr a, Expr b) { return make(node(Kind::Pair, require(std::move(a)), require(std::move(b)))); }
Expr fst(Expr e) { return make(node(Kind::Fst, require(std::move(e)))); }
Expr snd(Expr e) { return make(node(Kind::Snd, require(std::move(e)))); }
Expr injl(Expr e) { return make(node(Kind::InjL, require(std::move(e)))); }
Expr injr(Expr e) { return make(node(Kind::InjR, require(std::move(e)))); }

Expr case_(Expr scrutinee, Symbol x, Expr left, Symbol y, Expr right) {
    Node n = node(Kind::Case, require(std::move(scrutinee)), require(std::move(left)), require(std::move(right)));
    n.b0 = x;
    n.b1 = y;
    return make(std::move(n));
}

Expr alloc(Expr e) { return make(node(Kind::Alloc, require(std::move(e)))); }
Expr load(Expr e) { return make(node(Kind::Load, require(std::move(e)))); }
Expr store(Expr loc, Expr value) { return make(node(Kind::Store, require(std::move(loc)), require(std::move(value)))); }
Expr rand(Expr bound) { return make(node(Kind::Rand, require(std::move(bound)))); }
Expr rand(Expr bound, Expr label) { return make(node(Kind::Rand, require(std::move(bound)), require(std::move(label)))); }
Expr alloc_tape(Expr bound) { return make(node(Kind::AllocTape, require(std::move(bound)))); }
Expr pack(Expr e) { return make(node(Kind::Pack, require(std::move(e)))); }

Expr unpack(Expr packed, Symbol x, Expr body) {
    Node n = node(Kind::Unpack, require(std::move(packed)), require(std::move(body)));
    n.b0 = x;
    return make(std::move(n));
}

Expr with_kids(const Expr& e, Expr k0, Expr k1, Expr k2) {
    if (k0 == e->kids[0] && k1 == e->kids[1] && k2 == e->kids[2]) {
        return e;
    }
    Node n = *e;
    n.kids = {std::move(k0), std::move(k1), std::move(k2)};
    return make(std::move(n));
}

namespace {

// Substitutes under one binder, renaming it first when it would capture a
// free variable of the replacement.
Expr subst_under(Symbol& binder, const Expr& body, Symbol x, const Expr& r) {
    if (!body || binder == x) {
        return body;
    }
    if (!binder.is_wildcard() && mentions(r->fv, binder) && mentions(body->fv, x)) {
        const Symbol renamed = fresh_symbol(binder.name());
        const Expr moved = subst(body, binder, var(renamed));
        binder = renamed;
        return subst(moved, x, r);
    }
    return subst(body, x, r);
}

}  // namespace

Expr subst(const Expr& e, Symbol x, const Expr& r) {
    if (!e || !mentions(e->fv, x)) {
        return e;
    }
    switch (e->kind) {
    case Kind::Var:
        return r;
    case Kind::Rec:
    case Kind::RecV: {
        if (e->b0 == x || e->b1 == x) {
            return e;
        }
        Node n = *e;
        Symbol f = n.b0;
        Symbol y = n.b1;
        Expr body = n.kids[0];
        // Rename each binder in turn if it would capture.
        for (Symbol* b : {&f, &y}) {
            if (!b->is_wildcard() && mentions(r->fv, *b)) {
                const Symbol renamed = fresh_symbol(b->name());
                body = subst(body, *b, var(renamed));
                *b = renamed;
            }
        }
        n.b0 = f;
        n.b1 = y;
        n.kids[0] = subst(body, x, r);
        return make(std::move(n));
    }
    case Kind::Let:
    case Kind::Unpack: {
        Node n = *e;
        n.kids[0] = subst(e->kids[0], x, r);
        n.kids[1] = subst_under(n.b0, e->kids[1], x, r);
        return make(std::move(n));
    }
    case Kind::Case: {
        Node n = *e;
        n.kids[0] = subst(e->kids[0], x, r);
        n.kids[1] = subst_under(n.b0, e->kids[1], x, r);
        n.kids[2] = subst_under(n.b1, e->kids[2], x, r);
        return make(std::move(n));
    }
    default:
        return with_kids(e, subst(e->kids[0], x, r), subst(e->kids[1], x, r), subst(e->kids[2], x, r));
    }
}

namespace {

int cmp_symbol(Symbol a, Symbol b) {
    if (a == b) {
        return 0;
    }
    return a.name() < b.name() ? -1 : 1;
}

template <typename T>
int cmp3(const T& a, const T& b) {
    return a < b ? -1 : (b < a ? 1 : 0);
}

}  // namespace

int compare(const Expr& a, const Expr& b) {
    if (a == b) {
        return 0;
    }
    if (!a || !b) {
        return a ? 1 : -1;
    }
    if (a->kind != b->kind) {
        return cmp3(a->kind, b->kind);
    }
    switch (a->kind) {
    case Kind::Int:
        return a->num.compare(b->num) < 0 ? -1 : (a->num == b->num ? 0 : 1);
    case Kind::Bool:
        return cmp3(a->flag, b->flag);
    case Kind::Unit:
        return 0;
    case Kind::Loc:
    case Kind::Label:
        return cmp3(a->index, b->index);
    default:
        break;
    }
    if (int c = cmp3(a->op, b->op); c != 0) {
        return c;
    }
    if (int c = cmp_symbol(a->b0, b->b0); c != 0) {
        return c;
    }
    if (int c = cmp_symbol(a->b1, b->b1); c != 0) {
        return c;
    }
    for (int i = 0; i < 3; ++i) {
        if (int c = compare(a->kids[i], b->kids[i]); c != 0) {
            return c;
        }
    }
    return 0;
}

Expr strip_labels(const Expr& e) {
    if (!e) {
        return e;
    }
    if (e->kind == Kind::Rand && e->kids[1]) {
        const Expr& label = e->kids[1];
        // Dropping the label must not change the step count, so only labels
        // that are already values or variables are removed.
        if (label->kind == Kind::Var || is_value(label)) {
            return rand(strip_labels(e->kids[0]));
        }
    }
    return with_kids(e, strip_labels(e->kids[0]), strip_labels(e->kids[1]), strip_labels(e->kids[2]));
}

Val::Val(Expr e) : e_(std::move(e)) {
    if (!e_ || !is_value(e_)) {
        throw std::invalid_argument("Val requires a value expression");
    }
}

Val int_val(long long n) { return Val(int_lit(Int(n))); }

}  // namespace pcw::lang
