#include "pcw/lang/library.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#ifndef PCW_ASSET_DIR
#define PCW_ASSET_DIR "assets"
#endif

namespace pcw::lang {

std::filesystem::path asset_dir() {
    if (const char* env = std::getenv("PCW_ASSETS"); env != nullptr && *env != '\0') {
        return env;
    }
    return PCW_ASSET_DIR;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

namespace {

// Turns a closed source-level value form into the runtime value it denotes.
Expr static_value(const Expr& e) {
    switch (e->kind) {
    case Kind::Rec:
        return rec_val(e->b0, e->b1, e->kids[0]);
    case Kind::Pair: {
        Expr a = static_value(e->kids[0]);
        Expr b = static_value(e->kids[1]);
        return a && b ? pair_val(a, b) : nullptr;
    }
    case Kind::InjL:
    case Kind::InjR: {
        Expr v = static_value(e->kids[0]);
        if (!v) {
            return nullptr;
        }
        return e->kind == Kind::InjL ? injl_val(v) : injr_val(v);
    }
    default:
        return is_value(e) ? e : nullptr;
    }
}

std::string join_names(const std::vector<Symbol>& syms) {
    std::string out;
    for (Symbol s : syms) {
        out += (out.empty() ? "" : ", ") + s.name();
    }
    return out;
}

}  // namespace

Library::Library(const Library& other) {
    std::lock_guard lock(other.mu_);
    defs_ = other.defs_;
    linked_ = other.linked_;
}

const Library& Library::standard() {
    static const Library lib = [] {
        Library l;
        const auto root = asset_dir() / "rml";
        l.add_file(root / "prelude.rml");
        std::vector<std::filesystem::path> cases;
        for (const auto& entry : std::filesystem::directory_iterator(root / "cases")) {
            if (entry.path().extension() == ".rml") {
                cases.push_back(entry.path());
            }
        }
        std::sort(cases.begin(), cases.end());
        for (const auto& p : cases) {
            l.add_file(p);
        }
        return l;
    }();
    return lib;
}

void Library::add_module(const Module& m) {
    std::lock_guard lock(mu_);
    for (const auto& d : m.defs) {
        if (auto it = defs_.find(d.name); it != defs_.end()) {
            throw LinkError(d.file + ":" + std::to_string(d.pos.line) + ": '" + d.name.name() +
                            "' already defined in " + it->second.file);
        }
        defs_.emplace(d.name, d);
    }
}

void Library::add_source(std::string_view source, std::string_view file) {
    add_module(parse_module(source, file));
}

void Library::add_file(const std::filesystem::path& path) { add_source(read_file(path), path.string()); }

bool Library::contains(std::string_view name) const {
    std::lock_guard lock(mu_);
    return defs_.count(Symbol::intern(name)) != 0;
}

std::vector<std::string> Library::names() const {
    std::lock_guard lock(mu_);
    std::vector<std::string> out;
    for (const auto& [s, _] : defs_) {
        out.push_back(s.name());
    }
    std::sort(out.begin(), out.end());
    return out;
}

Val Library::value(std::string_view name) const {
    std::vector<Symbol> in_progress;
    return value_of(Symbol::intern(name), in_progress);
}

Val Library::value_of(Symbol name, std::vector<Symbol>& in_progress) const {
    std::lock_guard lock(mu_);
    if (auto it = linked_.find(name); it != linked_.end()) {
        return Val(it->second);
    }
    auto def = defs_.find(name);
    if (def == defs_.end()) {
        throw LinkError("unbound name '" + name.name() + "'");
    }
    if (std::find(in_progress.begin(), in_progress.end(), name) != in_progress.end()) {
        in_progress.push_back(name);
        throw LinkError("cyclic definitions: " + join_names(in_progress));
    }
    in_progress.push_back(name);
    Expr body = def->second.body;
    const std::vector<Symbol> free = body->fv;
    for (Symbol y : free) {
        if (defs_.count(y) == 0) {
            throw LinkError(def->second.file + ":" + std::to_string(def->second.pos.line) + ": '" + name.name() +
                            "' refers to unbound name '" + y.name() + "'");
        }
        body = subst(body, y, value_of(y, in_progress).expr());
    }
    in_progress.pop_back();
    Expr v = static_value(body);
    if (!v) {
        throw LinkError(def->second.file + ":" + std::to_string(def->second.pos.line) + ": definition '" +
                        name.name() + "' is not a function or constant value");
    }
    linked_.emplace(name, v);
    return Val(v);
}

Expr Library::link(const Expr& e, const std::map<std::string, Expr>& env) const {
    Expr out = e;
    for (const auto& [name, value] : env) {
        out = subst(out, Symbol::intern(name), value);
    }
    std::vector<Symbol> unbound;
    const std::vector<Symbol> free = out->fv;
    for (Symbol y : free) {
        if (!contains(y.name())) {
            unbound.push_back(y);
            continue;
        }
        std::vector<Symbol> in_progress;
        out = subst(out, y, value_of(y, in_progress).expr());
    }
    if (!unbound.empty()) {
        throw LinkError("unbound variable(s): " + join_names(unbound));
    }
    return out;
}

Expr Library::load_program(std::string_view source, std::string_view file,
                           const std::map<std::string, Expr>& env) const {
    const Module m = parse_module(source, file);
    if (!m.main) {
        throw LinkError(std::string(file) + ": no main expression");
    }
    if (m.defs.empty()) {
        return link(m.main, env);
    }
    Library local(*this);
    local.add_module(m);
    return local.link(m.main, env);
}

Expr Library::load_program_file(const std::filesystem::path& path, const std::map<std::string, Expr>& env) const {
    return load_program(read_file(path), path.string(), env);
}

std::map<std::string, Expr> load_prelude() {
    Library lib;
    lib.add_file(asset_dir() / "rml" / "prelude.rml");
    std::map<std::string, Expr> out;
    for (const auto& name : lib.names()) {
        out.emplace(name, lib.value(name).expr());
    }
    return out;
}

}  // namespace pcw::lang
