#pragma once

// Abstract syntax of the object language: an ML-like core with references,
// uniform sampling `rand`, presampling tapes and erased existential packing.

#include <array>
#include <compare>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace pcw::lang {

using Int = boost::multiprecision::cpp_int;

/// Interned identifier. Id 0 is the wildcard `_`, which never binds.
class Symbol {
public:
    Symbol() = default;

    static Symbol intern(std::string_view name);
    static Symbol wildcard() { return Symbol{}; }

    [[nodiscard]] const std::string& name() const;
    [[nodiscard]] bool is_wildcard() const { return id_ == 0; }
    [[nodiscard]] std::uint32_t id() const { return id_; }

    friend bool operator==(Symbol a, Symbol b) { return a.id_ == b.id_; }
    friend auto operator<=>(Symbol a, Symbol b) { return a.id_ <=> b.id_; }

private:
    explicit Symbol(std::uint32_t id) : id_(id) {}
    std::uint32_t id_ = 0;
};

/// Symbol whose name does not occur in any interned identifier yet.
Symbol fresh_symbol(std::string_view base);

enum class Kind : std::uint8_t {
    // Values.
    Int,
    Bool,
    Unit,
    Loc,
    Label,
    RecV,
    PairV,
    InjLV,
    InjRV,
    // Non-value expressions.
    Var,
    Rec,
    App,
    BinOp,
    UnOp,
    If,
    Let,
    Pair,
    Fst,
    Snd,
    InjL,
    InjR,
    Case,
    Alloc,
    Load,
    Store,
    Rand,
    AllocTape,
    Pack,
    Unpack,
};

enum class BinOp : std::uint8_t { Add, Sub, Mul, Quot, Rem, Eq, Ne, Lt, Le, Gt, Ge, And, Or };
enum class UnOp : std::uint8_t { Neg, Not };

struct Node;
using Expr = std::shared_ptr<const Node>;

/// Immutable AST node. Child slots per kind:
///   Rec/RecV: kids[0]=body, b0=f, b1=x        App: fn, arg
///   Let: bound, body (b0)                      If: cond, then, else
///   Case: scrutinee, inl-body (b0), inr-body (b1)
///   Store: location, value                     Rand: bound, label (may be null)
///   Unpack: packed, body (b0)                  unary forms: kids[0]
/// `fv` is the sorted set of free variables, cached at construction.
struct Node {
    Kind kind{};
    std::uint8_t op = 0;
    bool flag = false;
    std::uint64_t index = 0;
    Int num;
    Symbol b0;
    Symbol b1;
    std::array<Expr, 3> kids;
    std::vector<Symbol> fv;

    [[nodiscard]] bool closed() const { return fv.empty(); }
    [[nodiscard]] BinOp binop() const { return static_cast<BinOp>(op); }
    [[nodiscard]] UnOp unop() const { return static_cast<UnOp>(op); }
};

[[nodiscard]] inline bool is_value_kind(Kind k) { return k <= Kind::InjRV; }
[[nodiscard]] inline bool is_value(const Expr& e) { return is_value_kind(e->kind); }

// Value constructors.
Expr int_lit(Int n);
Expr bool_lit(bool b);
Expr unit_lit();
Expr loc_lit(std::uint64_t loc);
Expr label_lit(std::uint64_t label);
Expr rec_val(Symbol f, Symbol x, Expr body);
Expr pair_val(Expr a, Expr b);
Expr injl_val(Expr v);
Expr injr_val(Expr v);

// Expression constructors.
Expr var(Symbol x);
Expr var(std::string_view name);
Expr rec(Symbol f, Symbol x, Expr body);
Expr lam(Symbol x, Expr body);
Expr app(Expr fn, Expr arg);
Expr binop(BinOp op, Expr lhs, Expr rhs);
Expr unop(UnOp op, Expr e);
Expr if_(Expr cond, Expr then_branch, Expr else_branch);
Expr let_(Symbol x, Expr bound, Expr body);
Expr seq(Expr first, Expr second);
Expr pair(Expr a, Expr b);
Expr fst(Expr e);
Expr snd(Expr e);
Expr injl(Expr e);
Expr injr(Expr e);
Expr case_(Expr scrutinee, Symbol x, Expr left, Symbol y, Expr right);
Expr alloc(Expr e);
Expr load(Expr e);
Expr store(Expr loc, Expr value);
Expr rand(Expr bound);
Expr rand(Expr bound, Expr label);
Expr alloc_tape(Expr bound);
Expr pack(Expr e);
Expr unpack(Expr packed, Symbol x, Expr body);

/// Same node with its children replaced; binders and payload are kept.
Expr with_kids(const Expr& e, Expr k0, Expr k1 = nullptr, Expr k2 = nullptr);

/// Capture-avoiding substitution of `replacement` for free occurrences of `x`.
/// Subterms that do not mention `x` are shared with the input.
Expr subst(const Expr& e, Symbol x, const Expr& replacement);

/// Total structural order (names compared textually); 0 iff structurally equal.
int compare(const Expr& a, const Expr& b);

inline bool structurally_equal(const Expr& a, const Expr& b) { return compare(a, b) == 0; }

/// Replaces every labelled `rand e l` by `rand e` whenever `l` is a variable or value,
/// so the stripped program takes exactly the same number of steps.
Expr strip_labels(const Expr& e);

/// A closed value; the embedding into Expr is the identity on nodes.
class Val {
public:
    explicit Val(Expr e);

    [[nodiscard]] const Expr& expr() const { return e_; }
    [[nodiscard]] const Node* operator->() const { return e_.get(); }

    friend bool operator==(const Val& a, const Val& b) { return compare(a.e_, b.e_) == 0; }
    friend bool operator<(const Val& a, const Val& b) { return compare(a.e_, b.e_) < 0; }

private:
    Expr e_;
};

Val int_val(long long n);

}  // namespace pcw::lang
