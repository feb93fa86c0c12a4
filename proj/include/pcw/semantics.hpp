#pragma once

// Probabilistic small-step semantics and stratified execution.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "pcw/dist.hpp"
#include "pcw/lang/ast.hpp"
#include "pcw/lang/state.hpp"

namespace pcw::sem {

using lang::Cfg;
using lang::Expr;
using lang::State;
using lang::Val;

/// A `rand` whose support exceeds ExecOptions::max_rand_support.
class SupportTooLarge : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ExecOptions {
    /// Total reduction steps explored across all branches before giving up.
    /// Unexplored mass is then reported as residual.
    std::uint64_t max_steps = 200'000'000;
    std::uint64_t max_rand_support = 1U << 20U;

    /// Defaults, with max_steps overridden by $PCW_BUDGET when set.
    static ExecOptions from_env();
};

/// One-step distribution. Stuck configurations yield the empty distribution.
/// Throws std::invalid_argument when `cfg.expr` is already a value.
Dist<Cfg> step(const Cfg& cfg, const ExecOptions& opts = {});

struct ExecResult {
    Dist<Val> values;
    Rational residual = 0;  // mass still running after the step bound
    Rational stuck = 0;     // mass lost to stuck configurations
    bool budget_exhausted = false;
    std::uint64_t steps = 0;  // reduction steps explored
};

/// exec_n together with residual and stuck mass, by depth-first enumeration.
ExecResult exec_approx(const Cfg& cfg, std::uint64_t n_max, const ExecOptions& opts = {});

Dist<Val> exec_n(const Cfg& cfg, std::uint64_t n, const ExecOptions& opts = {});
Dist<Cfg> pexec_n(const Cfg& cfg, std::uint64_t n, const ExecOptions& opts = {});
Rational term_prob_n(const Cfg& cfg, std::uint64_t n, const ExecOptions& opts = {});

/// exec_n for every n in 0..n_max from a single enumeration.
std::vector<Dist<Val>> exec_profile(const Cfg& cfg, std::uint64_t n_max, const ExecOptions& opts = {});

/// Appends a uniform sample to tape `label`. Throws on unknown labels.
Dist<State> state_step(const State& sigma, std::uint64_t label);

/// Runs `cfg` to a value, resolving the i-th `rand` encountered with
/// outcomes[i]. Returns the number of steps taken, or nullopt if the run gets
/// stuck, samples out of range, or needs more outcomes than scripted.
std::optional<std::uint64_t> scripted_length(const Cfg& cfg, const std::vector<std::int64_t>& outcomes,
                                             std::uint64_t max_steps = 100'000'000);

inline Cfg initial(Expr e, State s = {}) { return Cfg{std::move(e), std::move(s)}; }

}  // namespace pcw::sem
