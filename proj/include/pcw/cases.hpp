#pragma once

// Harnesses for the case-study programs: each computes exact distributions by
// enumeration and compares them with the closed-form bound of its case.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pcw/dist.hpp"
#include "pcw/lang/ast.hpp"
#include "pcw/lang/state.hpp"
#include "pcw/rules.hpp"
#include "pcw/semantics.hpp"

namespace pcw::cases {

using rules::Check;

enum class Verdict { Pass, Fail, Inconclusive };

const char* verdict_name(Verdict v);

struct CaseReport {
    std::string name;
    nlohmann::json params = nlohmann::json::object();
    std::string quantity;  // what `computed` measures, e.g. "tv" or "max gap"
    std::optional<Rational> computed;
    Rational bound;
    Rational residual;
    std::vector<Check> checks;
    bool inconclusive = false;
    std::string note;

    void add(std::string name, bool ok, std::string detail = {});
    /// Pass iff computed <= bound and every check holds; Inconclusive when a
    /// budget ran out or the step bound was too small for a verdict.
    [[nodiscard]] Verdict verdict() const;
    [[nodiscard]] nlohmann::json to_json() const;
};

/// Fixed-width table of case, params, bound, computed, residual, verdict.
std::string summary_table(const std::vector<CaseReport>& reports);

/// Step bound covering `rounds` rounds of a rejection loop: (rounds-1)*R + A
/// for reject increment R and accept length A measured on scripted runs.
struct Calibration {
    std::uint64_t accept = 0;
    std::uint64_t reject = 0;
    std::uint64_t n_max = 0;
};
Calibration calibrate(const sem::Cfg& cfg, const std::vector<std::int64_t>& accept_script,
                      const std::vector<std::int64_t>& reject_prefix, std::uint64_t rounds);

struct Options {
    sem::ExecOptions exec = sem::ExecOptions::from_env();
};

/// 2*rand 1 + rand 1 against rand 3 (or the base-3 variant against rand 8).
CaseReport run_many_to_one_prog(std::uint64_t n_max, bool trits = false, const Options& opts = {});

CaseReport run_rejection(std::int64_t n, std::int64_t m, std::uint64_t rounds, const Options& opts = {});

CaseReport run_dice(std::uint64_t rounds, const Options& opts = {});

CaseReport run_switching_weak(std::int64_t n, std::int64_t q, const Options& opts = {});

/// Bounded random permutation against bounded random function over every
/// query sequence in {0..n-1}^q, plus sequences of length q+1 that exceed the
/// bound. A desk-scale stand-in for a universally quantified adversary.
CaseReport run_switching_transcript(std::int64_t n, std::int64_t q, const Options& opts = {});

/// Bounded encryption oracle against bounded random ciphertexts on a fixed
/// message sequence, plus the decryption round trip for every message.
CaseReport run_cpa(std::int64_t n, const std::vector<std::int64_t>& messages, const Options& opts = {});

/// Leaf payload or list of children.
struct TreeNode {
    std::optional<std::int64_t> payload;
    std::vector<TreeNode> children;

    [[nodiscard]] bool is_leaf() const { return payload.has_value(); }
    [[nodiscard]] std::int64_t leaf_count() const;
    [[nodiscard]] std::int64_t depth() const;  // of the leftmost leaf
    [[nodiscard]] std::vector<std::int64_t> leaves() const;
    [[nodiscard]] nlohmann::json to_json() const;
    static TreeNode from_json(const nlohmann::json& j);

    friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct TreeSpec {
    std::int64_t fanout = 0;  // M
    std::int64_t depth = 0;
    TreeNode root;

    /// Every internal node has 1..M children and every leaf sits at `depth`.
    /// Throws std::invalid_argument describing the first violation.
    void validate() const;
    static TreeSpec from_json(const nlohmann::json& j);
    [[nodiscard]] nlohmann::json to_json() const;
};

/// Object-language expression allocating the tree; evaluates to its root location.
lang::Expr tree_builder(const TreeNode& t);

/// Allocates the tree directly in `s` in the order tree_builder's evaluation
/// would; returns the root location.
std::uint64_t build_tree_direct(lang::State& s, const TreeNode& t);

/// Reads back the tree rooted at `loc`; throws on malformed heap contents.
TreeNode read_tree(const lang::State& s, std::uint64_t loc);

CaseReport run_bptree(const TreeSpec& spec, std::uint64_t rounds, const Options& opts = {});

/// Inserts `payload` with the object-language insert_tree and reruns the
/// samplers on the enlarged tree.
CaseReport insert_and_resample(const TreeSpec& spec, std::int64_t payload, std::uint64_t rounds,
                               const Options& opts = {});

/// Runs a case described by a manifest entry {"case": name, ...params}.
CaseReport run_case(const nlohmann::json& entry, const Options& opts = {});

/// Names accepted by run_case.
std::vector<std::string> case_names();

}  // namespace pcw::cases
