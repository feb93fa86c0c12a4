#pragma once

// Concrete syntax: parser and printer. The grammar is documented in docs/grammar.md.

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pcw/lang/ast.hpp"

namespace pcw::lang {

struct SourcePos {
    int line = 1;
    int column = 1;
};

class ParseError : public std::runtime_error {
public:
    ParseError(std::string file, SourcePos pos, const std::string& message);

    [[nodiscard]] const std::string& file() const { return file_; }
    [[nodiscard]] SourcePos pos() const { return pos_; }

private:
    std::string file_;
    SourcePos pos_;
};

/// `def name params = body`. Definitions with parameters are recursive in their own name.
struct Definition {
    Symbol name;
    Expr body;
    std::string file;
    SourcePos pos;
};

struct Module {
    std::vector<Definition> defs;
    Expr main;  // null when the file only contains definitions
};

Expr parse_expr(std::string_view source, std::string_view file = "<input>");
Module parse_module(std::string_view source, std::string_view file = "<input>");

/// Fully parenthesized rendering; parse_expr(print(e)) is structurally equal to
/// e for every expression built from source-level constructors.
std::string print(const Expr& e);

std::string print(const Val& v);

const char* binop_symbol(BinOp op);

}  // namespace pcw::lang
