#pragma once

// Semantic validators for the coupling rules: each rule's coupling premise,
// side conditions, error accounting and erasability obligations, checked
// exactly on concrete instances.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pcw/dist.hpp"
#include "pcw/lang/state.hpp"
#include "pcw/semantics.hpp"

namespace pcw::rules {

using lang::State;

struct Check {
    std::string name;
    bool ok = false;
    std::string detail;
};

struct RuleReport {
    std::string rule;
    nlohmann::json params = nlohmann::json::object();
    std::vector<Check> checks;
    std::optional<bool> expect_holds;  // set by manifest instances

    /// Every check succeeded.
    [[nodiscard]] bool passed() const;
    /// passed() agrees with the expectation, or passed() when none was given.
    [[nodiscard]] bool as_expected() const;
    void add(std::string name, bool ok, std::string detail = {});
    [[nodiscard]] nlohmann::json to_json() const;
};

/// Explicit injection table: image[n] is f(n) for n in 0..size-1.
struct Injection {
    std::vector<std::int64_t> image;

    /// From (n, f(n)) pairs; the domain must be exactly 0..dom_max and every
    /// image in 0..cod_max, with no two inputs sharing an image.
    static Injection from_pairs(const std::vector<std::pair<std::int64_t, std::int64_t>>& pairs, std::int64_t dom_max,
                                std::int64_t cod_max);
    static Injection identity(std::int64_t dom_max);

    [[nodiscard]] std::vector<std::pair<std::int64_t, std::int64_t>> pairs() const;
};

using Digits = std::vector<std::int64_t>;

/// Base-(n+1) value of the digits, most significant first.
std::int64_t decoder(std::int64_t n, const Digits& digits);

/// All digit lists of length p over 0..n, each with weight (1/(n+1))^p.
Dist<Digits> uniform_lists(std::int64_t n, std::int64_t p);

RuleReport validate_rand_rand_le(std::int64_t n, std::int64_t m, const Injection& f);
RuleReport validate_rand_rand_ge(std::int64_t n, std::int64_t m, const Injection& f);
RuleReport validate_many_to_one(std::int64_t n, std::int64_t p);

/// Per-sample error of a fragmented coupling: zero on the image of f and
/// eps * (m+1)/(m-n) off it, with its expectation under uniform(m+1).
struct FragmentedAccounting {
    Rational amplified;
    Rational expectation;
};
FragmentedAccounting fragmented_accounting(std::int64_t n, std::int64_t m, const Injection& f, const Rational& eps);

RuleReport validate_fragmented(std::int64_t n, std::int64_t m, const Injection& f, const Rational& eps);

/// Erasability corpus: closed programs once the free name `N` is bound to the
/// bound of the target tape.
struct CorpusProgram {
    std::string name;
    std::string file;
    lang::Expr program;
};

/// Programs listed in assets/corpus/corpus.json, linked with N = tape_bound.
std::vector<CorpusProgram> load_corpus(std::int64_t tape_bound);

/// Heap #l0 = 5; tape #t0 = (bound, []) is the target; tape #t1 = (1, [0]).
State standard_state(std::int64_t tape_bound);

using Presample = std::function<Dist<State>(const State&)>;

/// Appends `count` uniform samples to tape `label`.
Presample append_samples(std::uint64_t label, std::int64_t count);

/// Appends the fixed `value` to tape `label` with probability one.
Presample append_fixed(std::uint64_t label, std::int64_t value);

/// exec_n(e, sigma) = bind(mu(sigma), exec_n(e, .)) for every corpus program
/// and every n <= n_max; the first counterexample is reported.
RuleReport erasability_check(const std::string& kind, const Presample& mu, const State& sigma,
                             const std::vector<CorpusProgram>& corpus, std::uint64_t n_max);

using ListRelation = std::vector<std::pair<Digits, Digits>>;

RuleReport validate_tape_tape_append(std::int64_t n, std::int64_t m, std::int64_t p, std::int64_t q,
                                     const ListRelation& rel, const Rational& eps, std::uint64_t n_max = 12);

/// Least i with eps * k^i >= 1.
std::uint64_t amp_iterations(const Rational& eps, const Rational& k);

/// Runs one instance of the rule manifest, recording its `expect` field.
RuleReport run_rule_instance(const nlohmann::json& instance);

}  // namespace pcw::rules
