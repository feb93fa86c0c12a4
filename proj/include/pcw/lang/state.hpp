#pragma once

// Heap and presampling tapes. Locations and labels are dense naturals: the
// next fresh one is always the current size, so allocation is deterministic.

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "pcw/lang/ast.hpp"

namespace pcw::lang {

struct Tape {
    std::int64_t bound = 0;
    std::vector<std::int64_t> contents;

    friend bool operator==(const Tape&, const Tape&) = default;
    friend auto operator<=>(const Tape&, const Tape&) = default;
};

/// Copy-on-write state; copies share storage until one side is modified.
class State {
public:
    State();

    [[nodiscard]] std::size_t heap_size() const { return heap_->size(); }
    [[nodiscard]] std::size_t tape_count() const { return tapes_->size(); }
    [[nodiscard]] const std::vector<Expr>& heap() const { return *heap_; }
    [[nodiscard]] const std::vector<Tape>& tapes() const { return *tapes_; }

    /// Null when `loc` is not allocated.
    [[nodiscard]] const Expr* load(std::uint64_t loc) const;
    [[nodiscard]] const Tape* tape(std::uint64_t label) const;

    std::uint64_t alloc(Expr value);
    void store(std::uint64_t loc, Expr value);
    std::uint64_t alloc_tape(std::int64_t bound, std::vector<std::int64_t> contents = {});
    void set_tape(std::uint64_t label, Tape t);

    friend int compare(const State& a, const State& b);
    friend bool operator==(const State& a, const State& b) { return compare(a, b) == 0; }
    friend bool operator<(const State& a, const State& b) { return compare(a, b) < 0; }

private:
    std::shared_ptr<const std::vector<Expr>> heap_;
    std::shared_ptr<const std::vector<Tape>> tapes_;
};

struct Cfg {
    Expr expr;
    State state;

    friend int compare(const Cfg& a, const Cfg& b);
    friend bool operator==(const Cfg& a, const Cfg& b) { return compare(a, b) == 0; }
    friend bool operator<(const Cfg& a, const Cfg& b) { return compare(a, b) < 0; }
};

}  // namespace pcw::lang
