#pragma once

// Named top-level definitions (prelude and case-study sources) and linking of
// open programs against them.

#include <filesystem>
#include <map>
#include <mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pcw/lang/ast.hpp"
#include "pcw/lang/syntax.hpp"

namespace pcw::lang {

/// Root of the shipped assets: $PCW_ASSETS if set, otherwise the source tree.
std::filesystem::path asset_dir();

std::string read_file(const std::filesystem::path& path);

class LinkError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Definitions are linked lazily: a definition's free names are resolved to the
/// values of other definitions, and the closed body must then be a syntactic
/// value (a function, literal, or tuple/injection of those). Linking therefore
/// never takes evaluation steps.
class Library {
public:
    Library() = default;
    Library(const Library& other);
    Library& operator=(const Library& other) = delete;

    /// Prelude plus every case-study source under assets/rml/cases.
    static const Library& standard();

    void add_module(const Module& m);
    void add_source(std::string_view source, std::string_view file);
    void add_file(const std::filesystem::path& path);

    [[nodiscard]] bool contains(std::string_view name) const;
    [[nodiscard]] std::vector<std::string> names() const;

    /// Linked value of a definition.
    [[nodiscard]] Val value(std::string_view name) const;

    /// Closes `e`: names in `env` are substituted first, then library names.
    /// Throws LinkError listing any remaining free variables.
    [[nodiscard]] Expr link(const Expr& e, const std::map<std::string, Expr>& env = {}) const;

    /// Parses `source` as a module, adds its definitions to a copy of this
    /// library and returns its linked main expression.
    [[nodiscard]] Expr load_program(std::string_view source, std::string_view file,
                                    const std::map<std::string, Expr>& env = {}) const;
    [[nodiscard]] Expr load_program_file(const std::filesystem::path& path,
                                         const std::map<std::string, Expr>& env = {}) const;

private:
    Val value_of(Symbol name, std::vector<Symbol>& in_progress) const;

    std::map<Symbol, Definition> defs_;
    mutable std::recursive_mutex mu_;
    mutable std::map<Symbol, Expr> linked_;
};

/// The prelude's definitions, linked and closed.
std::map<std::string, Expr> load_prelude();

}  // namespace pcw::lang
