#include "pcw/lang/syntax.hpp"

#include <cctype>
#include <functional>
#include <optional>
#include <set>
#include <sstream>
#include <tuple>

namespace pcw::lang {

ParseError::ParseError(std::string file, SourcePos pos, const std::string& message)
    : std::runtime_error(file + ":" + std::to_string(pos.line) + ":" + std::to_string(pos.column) + ": " + message),
      file_(std::move(file)),
      pos_(pos) {}

const char* binop_symbol(BinOp op) {
    switch (op) {
    case BinOp::Add: return "+";
    case BinOp::Sub: return "-";
    case BinOp::Mul: return "*";
    case BinOp::Quot: return "/";
    case BinOp::Rem: return "%";
    case BinOp::Eq: return "==";
    case BinOp::Ne: return "!=";
    case BinOp::Lt: return "<";
    case BinOp::Le: return "<=";
    case BinOp::Gt: return ">";
    case BinOp::Ge: return ">=";
    case BinOp::And: return "&&";
    case BinOp::Or: return "||";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Lexer

namespace {

enum class Tok { Int, Ident, Keyword, Sym, Loc, Label, End };

struct Token {
    Tok kind;
    std::string text;
    SourcePos pos;
};

const std::set<std::string, std::less<>> kKeywords = {
    "let", "rec", "in", "fun", "if", "then", "else", "match", "with", "end", "inl", "inr",
    "fst", "snd", "ref", "rand", "alloctape", "pack", "unpack", "as", "true", "false",
    "not", "for", "to", "do", "done", "def", "Some", "None",
};

class Lexer {
public:
    Lexer(std::string_view src, std::string file) : src_(src), file_(std::move(file)) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        for (;;) {
            skip_space();
            const SourcePos pos = pos_;
            if (i_ >= src_.size()) {
                out.push_back({Tok::End, "", pos});
                return out;
            }
            const char c = src_[i_];
            if (std::isdigit(static_cast<unsigned char>(c))) {
                out.push_back({Tok::Int, take_while([](char d) { return std::isdigit(static_cast<unsigned char>(d)); }), pos});
            } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
                std::string word = take_while(
                    [](char d) { return std::isalnum(static_cast<unsigned char>(d)) || d == '_' || d == '\''; });
                const Tok k = kKeywords.count(word) ? Tok::Keyword : Tok::Ident;
                out.push_back({k, std::move(word), pos});
            } else if (c == '#') {
                advance();
                if (i_ >= src_.size() || (src_[i_] != 'l' && src_[i_] != 't')) {
                    throw ParseError(file_, pos, "expected #l<n> or #t<n>");
                }
                const Tok k = src_[i_] == 'l' ? Tok::Loc : Tok::Label;
                advance();
                std::string digits = take_while([](char d) { return std::isdigit(static_cast<unsigned char>(d)); });
                if (digits.empty()) {
                    throw ParseError(file_, pos, "missing index after '#'");
                }
                out.push_back({k, std::move(digits), pos});
            } else {
                out.push_back({Tok::Sym, symbol(pos), pos});
            }
        }
    }

private:
    void advance() {
        if (src_[i_] == '\n') {
            ++pos_.line;
            pos_.column = 1;
        } else {
            ++pos_.column;
        }
        ++i_;
    }

    bool at(std::string_view s) const { return src_.substr(i_, s.size()) == s; }

    void skip_space() {
        for (;;) {
            while (i_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[i_]))) {
                advance();
            }
            if (!at("(*")) {
                return;
            }
            const SourcePos start = pos_;
            int depth = 0;
            do {
                if (i_ >= src_.size()) {
                    throw ParseError(file_, start, "unterminated comment");
                }
                if (at("(*")) {
                    ++depth;
                    advance();
                    advance();
                } else if (at("*)")) {
                    --depth;
                    advance();
                    advance();
                } else {
                    advance();
                }
            } while (depth > 0);
        }
    }

    template <typename P>
    std::string take_while(P pred) {
        std::string out;
        while (i_ < src_.size() && pred(src_[i_])) {
            out.push_back(src_[i_]);
            advance();
        }
        return out;
    }

    std::string symbol(SourcePos pos) {
        static const char* two[] = {"<-", "->", "=>", "==", "!=", "<=", ">=", "&&", "||"};
        for (const char* s : two) {
            if (at(s)) {
                advance();
                advance();
                return s;
            }
        }
        const char c = src_[i_];
        if (std::string_view("(),;=<>+-*/%!|[]").find(c) == std::string_view::npos) {
            throw ParseError(file_, pos, std::string("unexpected character '") + c + "'");
        }
        advance();
        return std::string(1, c);
    }

    std::string_view src_;
    std::string file_;
    std::size_t i_ = 0;
    SourcePos pos_;
};

// ---------------------------------------------------------------------------
// Parser

class Parser {
public:
    Parser(std::string_view src, std::string file) : file_(file), toks_(Lexer(src, std::move(file)).run()) {}

    Expr whole_expr() {
        Expr e = seq_expr();
        expect_end();
        return e;
    }

    Module module() {
        Module m;
        while (is_kw("def")) {
            m.defs.push_back(definition());
        }
        if (peek().kind != Tok::End) {
            m.main = seq_expr();
        }
        expect_end();
        return m;
    }

private:
    const Token& peek(std::size_t ahead = 0) const { return toks_[std::min(i_ + ahead, toks_.size() - 1)]; }
    Token next() { return toks_[i_ < toks_.size() - 1 ? i_++ : i_]; }

    bool is_kw(std::string_view kw, std::size_t ahead = 0) const {
        return peek(ahead).kind == Tok::Keyword && peek(ahead).text == kw;
    }
    bool is_sym(std::string_view s, std::size_t ahead = 0) const {
        return peek(ahead).kind == Tok::Sym && peek(ahead).text == s;
    }

    [[noreturn]] void fail(const std::string& msg) const {
        const Token& t = peek();
        const std::string found = t.kind == Tok::End ? "end of input" : "'" + t.text + "'";
        throw ParseError(file_, t.pos, msg + ", found " + found);
    }

    void expect_kw(std::string_view kw) {
        if (!is_kw(kw)) {
            fail("expected '" + std::string(kw) + "'");
        }
        next();
    }
    void expect_sym(std::string_view s) {
        if (!is_sym(s)) {
            fail("expected '" + std::string(s) + "'");
        }
        next();
    }
    void expect_end() {
        if (peek().kind != Tok::End) {
            fail("expected end of input");
        }
    }
    bool accept_sym(std::string_view s) {
        if (is_sym(s)) {
            next();
            return true;
        }
        return false;
    }

    Definition definition() {
        const SourcePos pos = peek().pos;
        expect_kw("def");
        const Symbol name = ident();
        std::vector<Symbol> params;
        while (starts_param()) {
            params.push_back(param());
        }
        expect_sym("=");
        Expr body = seq_expr();
        if (!params.empty()) {
            body = rec(name, params.front(), lambdas(params, 1, body));
        }
        return {name, body, file_, pos};
    }

    Symbol ident() {
        if (peek().kind != Tok::Ident || peek().text == "_") {
            fail("expected identifier");
        }
        return Symbol::intern(next().text);
    }

    bool starts_param() const {
        return peek().kind == Tok::Ident || (is_sym("(") && is_sym(")", 1));
    }

    // Binder position: identifier, `_` or `()` (the latter two never bind).
    Symbol param() {
        if (is_sym("(") && is_sym(")", 1)) {
            next();
            next();
            return Symbol::wildcard();
        }
        if (peek().kind != Tok::Ident) {
            fail("expected parameter");
        }
        return Symbol::intern(next().text);
    }

    static Expr lambdas(const std::vector<Symbol>& params, std::size_t from, Expr body) {
        for (std::size_t i = params.size(); i > from; --i) {
            body = lam(params[i - 1], std::move(body));
        }
        return body;
    }

    // let (a, b, c) = e in body, with the tuple right-nested.
    static Expr destructure(const std::vector<Symbol>& names, const Expr& tuple, Expr body) {
        if (names.size() == 1) {
            return let_(names[0], tuple, std::move(body));
        }
        if (names.size() == 2) {
            return let_(names[0], fst(tuple), let_(names[1], snd(tuple), std::move(body)));
        }
        const Symbol rest = fresh_symbol("p");
        std::vector<Symbol> tail(names.begin() + 1, names.end());
        Expr inner = destructure(tail, var(rest), std::move(body));
        return let_(names[0], fst(tuple), let_(rest, snd(tuple), std::move(inner)));
    }

    // Pattern after inl/inr/Some or in a let: binder or tuple of binders.
    std::optional<std::vector<Symbol>> tuple_pattern() {
        if (!is_sym("(") || is_sym(")", 1)) {
            return std::nullopt;
        }
        next();
        std::vector<Symbol> names{param()};
        while (accept_sym(",")) {
            names.push_back(param());
        }
        expect_sym(")");
        return names;
    }

    std::pair<Symbol, std::function<Expr(Expr)>> arm_pattern() {
        if (auto names = tuple_pattern()) {
            const Symbol p = fresh_symbol("p");
            auto ns = *names;
            return {p, [ns, p](Expr body) { return destructure(ns, var(p), std::move(body)); }};
        }
        return {param(), [](Expr body) { return body; }};
    }

    Expr seq_expr() {
        Expr e = stmt();
        if (accept_sym(";")) {
            return seq(std::move(e), seq_expr());
        }
        return e;
    }

    Expr stmt() {
        if (is_kw("let")) {
            return let_form();
        }
        if (is_kw("fun")) {
            next();
            std::vector<Symbol> params{param()};
            while (starts_param()) {
                params.push_back(param());
            }
            expect_sym("->");
            return lambdas(params, 0, seq_expr());
        }
        if (is_kw("rec")) {
            next();
            const Symbol f = param();
            std::vector<Symbol> params{param()};
            while (starts_param()) {
                params.push_back(param());
            }
            expect_sym("=");
            return rec(f, params.front(), lambdas(params, 1, seq_expr()));
        }
        if (is_kw("if")) {
            next();
            Expr c = seq_expr();
            expect_kw("then");
            Expr t = seq_expr();
            expect_kw("else");
            return if_(std::move(c), std::move(t), stmt());
        }
        if (is_kw("match")) {
            return match_form();
        }
        if (is_kw("unpack")) {
            next();
            Expr packed = seq_expr();
            expect_kw("as");
            const Symbol x = param();
            expect_kw("in");
            return unpack(std::move(packed), x, seq_expr());
        }
        if (is_kw("for")) {
            return for_form();
        }
        Expr lhs = or_expr();
        if (accept_sym("<-")) {
            return store(std::move(lhs), stmt());
        }
        return lhs;
    }

    Expr let_form() {
        expect_kw("let");
        if (is_kw("rec")) {
            next();
            const Symbol f = ident();
            std::vector<Symbol> params{param()};
            while (starts_param()) {
                params.push_back(param());
            }
            expect_sym("=");
            Expr fn = rec(f, params.front(), lambdas(params, 1, seq_expr()));
            expect_kw("in");
            return let_(f, std::move(fn), seq_expr());
        }
        if (auto names = tuple_pattern()) {
            expect_sym("=");
            Expr bound = seq_expr();
            expect_kw("in");
            Expr body = seq_expr();
            const Symbol p = fresh_symbol("p");
            return let_(p, std::move(bound), destructure(*names, var(p), std::move(body)));
        }
        const Symbol x = param();
        std::vector<Symbol> params;
        while (starts_param()) {
            params.push_back(param());
        }
        expect_sym("=");
        Expr bound = seq_expr();
        if (!params.empty()) {
            bound = lambdas(params, 0, std::move(bound));
        }
        expect_kw("in");
        return let_(x, std::move(bound), seq_expr());
    }

    Expr match_form() {
        expect_kw("match");
        Expr scrutinee = seq_expr();
        expect_kw("with");
        accept_sym("|");
        std::optional<std::pair<Symbol, Expr>> left;
        std::optional<std::pair<Symbol, Expr>> right;
        for (int arm = 0; arm < 2; ++arm) {
            if (arm == 1) {
                expect_sym("|");
            }
            const SourcePos pos = peek().pos;
            bool is_left = false;
            Symbol binder;
            std::function<Expr(Expr)> wrap = [](Expr b) { return b; };
            if (is_kw("inl") || is_kw("inr") || is_kw("Some")) {
                is_left = is_kw("inl");
                next();
                std::tie(binder, wrap) = arm_pattern();
            } else if (is_kw("None")) {
                next();
                is_left = true;
            } else {
                fail("expected 'inl', 'inr', 'None' or 'Some' pattern");
            }
            expect_sym("=>");
            Expr body = wrap(seq_expr());
            auto& slot = is_left ? left : right;
            if (slot) {
                throw ParseError(file_, pos, "duplicate match arm");
            }
            slot.emplace(binder, std::move(body));
        }
        expect_kw("end");
        return case_(std::move(scrutinee), left->first, left->second, right->first, right->second);
    }

    Expr for_form() {
        expect_kw("for");
        const Symbol i = ident();
        expect_sym("=");
        Expr from = seq_expr();
        expect_kw("to");
        Expr to = seq_expr();
        expect_kw("do");
        Expr body = seq_expr();
        expect_kw("done");
        const Symbol hi = fresh_symbol("hi");
        const Symbol loop = fresh_symbol("loop");
        Expr next_iter = app(var(loop), binop(BinOp::Add, var(i), int_lit(1)));
        Expr fn = rec(loop, i,
                      if_(binop(BinOp::Le, var(i), var(hi)), seq(std::move(body), std::move(next_iter)), unit_lit()));
        return let_(hi, std::move(to), app(std::move(fn), std::move(from)));
    }

    Expr or_expr() {
        Expr e = and_expr();
        while (accept_sym("||")) {
            e = binop(BinOp::Or, std::move(e), and_expr());
        }
        return e;
    }

    Expr and_expr() {
        Expr e = cmp_expr();
        while (accept_sym("&&")) {
            e = binop(BinOp::And, std::move(e), cmp_expr());
        }
        return e;
    }

    Expr cmp_expr() {
        Expr e = add_expr();
        static const std::pair<const char*, BinOp> ops[] = {
            {"==", BinOp::Eq}, {"!=", BinOp::Ne}, {"<", BinOp::Lt},
            {"<=", BinOp::Le}, {">", BinOp::Gt},  {">=", BinOp::Ge},
        };
        for (const auto& [s, op] : ops) {
            if (accept_sym(s)) {
                return binop(op, std::move(e), add_expr());
            }
        }
        return e;
    }

    Expr add_expr() {
        Expr e = mul_expr();
        for (;;) {
            if (accept_sym("+")) {
                e = binop(BinOp::Add, std::move(e), mul_expr());
            } else if (accept_sym("-")) {
                e = binop(BinOp::Sub, std::move(e), mul_expr());
            } else {
                return e;
            }
        }
    }

    Expr mul_expr() {
        Expr e = unary();
        for (;;) {
            if (accept_sym("*")) {
                e = binop(BinOp::Mul, std::move(e), unary());
            } else if (accept_sym("/")) {
                e = binop(BinOp::Quot, std::move(e), unary());
            } else if (accept_sym("%")) {
                e = binop(BinOp::Rem, std::move(e), unary());
            } else {
                return e;
            }
        }
    }

    Expr unary() {
        if (is_sym("-")) {
            next();
            if (peek().kind == Tok::Int) {
                return int_lit(-Int(next().text));
            }
            return unop(UnOp::Neg, unary());
        }
        if (is_kw("not")) {
            next();
            return unop(UnOp::Not, unary());
        }
        return application();
    }

    bool starts_atom() const {
        const Token& t = peek();
        switch (t.kind) {
        case Tok::Int:
        case Tok::Loc:
        case Tok::Label:
            return true;
        case Tok::Ident:
            return t.text != "_";
        case Tok::Keyword:
            return t.text == "true" || t.text == "false" || t.text == "None";
        case Tok::Sym:
            return t.text == "(" || t.text == "[" || t.text == "!";
        case Tok::End:
            return false;
        }
        return false;
    }

    Expr application() {
        if (peek().kind == Tok::Keyword) {
            const std::string kw = peek().text;
            using Ctor = Expr (*)(Expr);
            static const std::pair<const char*, Ctor> prefix[] = {
                {"ref", &alloc}, {"fst", &fst},   {"snd", &snd},   {"inl", &injl},
                {"inr", &injr},  {"Some", &injr}, {"pack", &pack}, {"alloctape", &alloc_tape},
            };
            for (const auto& [name, ctor] : prefix) {
                if (kw == name) {
                    next();
                    return ctor(atom());
                }
            }
            if (kw == "rand") {
                next();
                Expr bound = atom();
                if (starts_atom()) {
                    return rand(std::move(bound), atom());
                }
                return rand(std::move(bound));
            }
        }
        Expr e = atom();
        while (starts_atom()) {
            e = app(std::move(e), atom());
        }
        return e;
    }

    Expr atom() {
        const Token t = peek();
        switch (t.kind) {
        case Tok::Int:
            next();
            return int_lit(Int(t.text));
        case Tok::Loc:
            next();
            return loc_lit(std::stoull(t.text));
        case Tok::Label:
            next();
            return label_lit(std::stoull(t.text));
        case Tok::Ident:
            if (t.text == "_") {
                fail("'_' is not an expression");
            }
            next();
            return var(t.text);
        case Tok::Keyword:
            if (t.text == "true" || t.text == "false") {
                next();
                return bool_lit(t.text == "true");
            }
            if (t.text == "None") {
                next();
                return injl(unit_lit());
            }
            break;
        case Tok::Sym:
            if (t.text == "!") {
                next();
                return load(atom());
            }
            if (t.text == "(") {
                next();
                if (accept_sym(")")) {
                    return unit_lit();
                }
                std::vector<Expr> items{seq_expr()};
                while (accept_sym(",")) {
                    items.push_back(seq_expr());
                }
                expect_sym(")");
                Expr e = items.back();
                for (std::size_t i = items.size() - 1; i > 0; --i) {
                    e = pair(items[i - 1], std::move(e));
                }
                return e;
            }
            if (t.text == "[") {
                next();
                std::vector<Expr> items;
                if (!is_sym("]")) {
                    items.push_back(seq_expr());
                    while (accept_sym(",")) {
                        items.push_back(seq_expr());
                    }
                }
                expect_sym("]");
                Expr e = injl(unit_lit());
                for (auto it = items.rbegin(); it != items.rend(); ++it) {
                    e = injr(pair(*it, std::move(e)));
                }
                return e;
            }
            break;
        case Tok::End:
            break;
        }
        fail("expected an expression");
    }

    std::string file_;
    std::vector<Token> toks_;
    std::size_t i_ = 0;
};

}  // namespace

Expr parse_expr(std::string_view source, std::string_view file) {
    return Parser(source, std::string(file)).whole_expr();
}

Module parse_module(std::string_view source, std::string_view file) {
    return Parser(source, std::string(file)).module();
}

// ---------------------------------------------------------------------------
// Printer

namespace {

std::string binder(Symbol s) { return s.is_wildcard() ? "_" : s.name(); }

bool self_delimited(const Expr& e) {
    switch (e->kind) {
    case Kind::Int:
        return e->num >= 0;
    case Kind::Bool:
    case Kind::Unit:
    case Kind::Loc:
    case Kind::Label:
    case Kind::Var:
    case Kind::Pair:
    case Kind::PairV:
        return true;
    default:
        return false;
    }
}

void emit(std::ostream& os, const Expr& e);

void child(std::ostream& os, const Expr& e) {
    if (self_delimited(e)) {
        emit(os, e);
    } else {
        os << '(';
        emit(os, e);
        os << ')';
    }
}

void emit(std::ostream& os, const Expr& e) {
    const auto& k = e->kids;
    switch (e->kind) {
    case Kind::Int:
        os << e->num;
        return;
    case Kind::Bool:
        os << (e->flag ? "true" : "false");
        return;
    case Kind::Unit:
        os << "()";
        return;
    case Kind::Loc:
        os << "#l" << e->index;
        return;
    case Kind::Label:
        os << "#t" << e->index;
        return;
    case Kind::Var:
        os << e->b0.name();
        return;
    case Kind::Rec:
    case Kind::RecV:
        if (e->b0.is_wildcard()) {
            os << "fun " << binder(e->b1) << " -> ";
        } else {
            os << "rec " << e->b0.name() << ' ' << binder(e->b1) << " = ";
        }
        child(os, k[0]);
        return;
    case Kind::App:
        child(os, k[0]);
        os << ' ';
        child(os, k[1]);
        return;
    case Kind::BinOp:
        child(os, k[0]);
        os << ' ' << binop_symbol(e->binop()) << ' ';
        child(os, k[1]);
        return;
    case Kind::UnOp:
        if (e->unop() == UnOp::Neg) {
            os << "-(";
            emit(os, k[0]);
            os << ')';
        } else {
            os << "not ";
            child(os, k[0]);
        }
        return;
    case Kind::If:
        os << "if ";
        child(os, k[0]);
        os << " then ";
        child(os, k[1]);
        os << " else ";
        child(os, k[2]);
        return;
    case Kind::Let:
        if (e->b0.is_wildcard()) {
            child(os, k[0]);
            os << "; ";
        } else {
            os << "let " << e->b0.name() << " = ";
            child(os, k[0]);
            os << " in ";
        }
        child(os, k[1]);
        return;
    case Kind::Pair:
    case Kind::PairV:
        os << '(';
        child(os, k[0]);
        os << ", ";
        child(os, k[1]);
        os << ')';
        return;
    case Kind::Fst: os << "fst "; child(os, k[0]); return;
    case Kind::Snd: os << "snd "; child(os, k[0]); return;
    case Kind::InjL:
    case Kind::InjLV: os << "inl "; child(os, k[0]); return;
    case Kind::InjR:
    case Kind::InjRV: os << "inr "; child(os, k[0]); return;
    case Kind::Alloc: os << "ref "; child(os, k[0]); return;
    case Kind::Load: os << '!'; child(os, k[0]); return;
    case Kind::AllocTape: os << "alloctape "; child(os, k[0]); return;
    case Kind::Pack: os << "pack "; child(os, k[0]); return;
    case Kind::Case:
        os << "match ";
        child(os, k[0]);
        os << " with inl " << binder(e->b0) << " => ";
        child(os, k[1]);
        os << " | inr " << binder(e->b1) << " => ";
        child(os, k[2]);
        os << " end";
        return;
    case Kind::Store:
        child(os, k[0]);
        os << " <- ";
        child(os, k[1]);
        return;
    case Kind::Rand:
        os << "rand ";
        child(os, k[0]);
        if (k[1]) {
            os << ' ';
            child(os, k[1]);
        }
        return;
    case Kind::Unpack:
        os << "unpack ";
        child(os, k[0]);
        os << " as " << binder(e->b0) << " in ";
        child(os, k[1]);
        return;
    }
}

}  // namespace

std::string print(const Expr& e) {
    std::ostringstream os;
    emit(os, e);
    return os.str();
}

std::string print(const Val& v) { return print(v.expr()); }

}  // namespace pcw::lang
