#include "pcw/lang/state.hpp"

#include <stdexcept>

namespace pcw::lang {

namespace {

const std::shared_ptr<const std::vector<Expr>>& empty_heap() {
    static const auto h = std::make_shared<const std::vector<Expr>>();
    return h;
}

const std::shared_ptr<const std::vector<Tape>>& empty_tapes() {
    static const auto t = std::make_shared<const std::vector<Tape>>();
    return t;
}

}  // namespace

State::State() : heap_(empty_heap()), tapes_(empty_tapes()) {}

const Expr* State::load(std::uint64_t loc) const { return loc < heap_->size() ? &(*heap_)[loc] : nullptr; }

const Tape* State::tape(std::uint64_t label) const { return label < tapes_->size() ? &(*tapes_)[label] : nullptr; }

std::uint64_t State::alloc(Expr value) {
    auto h = std::make_shared<std::vector<Expr>>(*heap_);
    h->push_back(std::move(value));
    heap_ = std::move(h);
    return heap_->size() - 1;
}

void State::store(std::uint64_t loc, Expr value) {
    if (loc >= heap_->size()) {
        throw std::out_of_range("store to unallocated location");
    }
    auto h = std::make_shared<std::vector<Expr>>(*heap_);
    (*h)[loc] = std::move(value);
    heap_ = std::move(h);
}

std::uint64_t State::alloc_tape(std::int64_t bound, std::vector<std::int64_t> contents) {
    auto t = std::make_shared<std::vector<Tape>>(*tapes_);
    t->push_back(Tape{bound, std::move(contents)});
    tapes_ = std::move(t);
    return tapes_->size() - 1;
}

void State::set_tape(std::uint64_t label, Tape tape) {
    if (label >= tapes_->size()) {
        throw std::out_of_range("unknown tape label");
    }
    auto t = std::make_shared<std::vector<Tape>>(*tapes_);
    (*t)[label] = std::move(tape);
    tapes_ = std::move(t);
}

int compare(const State& a, const State& b) {
    if (a.heap_ != b.heap_) {
        const auto& ha = *a.heap_;
        const auto& hb = *b.heap_;
        if (ha.size() != hb.size()) {
            return ha.size() < hb.size() ? -1 : 1;
        }
        for (std::size_t i = 0; i < ha.size(); ++i) {
            if (int c = compare(ha[i], hb[i]); c != 0) {
                return c;
            }
        }
    }
    if (a.tapes_ != b.tapes_) {
        const auto c = *a.tapes_ <=> *b.tapes_;
        if (c != 0) {
            return c < 0 ? -1 : 1;
        }
    }
    return 0;
}

int compare(const Cfg& a, const Cfg& b) {
    if (int c = compare(a.expr, b.expr); c != 0) {
        return c;
    }
    return compare(a.state, b.state);
}

}  // namespace pcw::lang
