#pragma once

// Exact decision of approximate (eps, R)-couplings between finite
// subdistributions, and executable checks of the coupling composition lemmas.
//
// The coupling condition quantifies over [0,1]-valued X, Y with X(a) <= Y(b)
// whenever a R b. For finite supports the worst case is attained at 0/1
// vertices (the constraints form a bipartite incidence system), so it is
// enough to maximize mu1(S) - mu2(R(S)) over subsets S of supp(mu1).

#include <algorithm>
#include <cstddef>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pcw/dist.hpp"

namespace pcw::coupling {

class SupportTooLarge : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Backend { Auto, Enumeration, MaxFlow };

/// Largest support handled by subset enumeration.
inline constexpr std::size_t kMaxEnumerationSupport = 20;

/// Weights and adjacency by support index.
struct IndexedInstance {
    std::vector<Rational> w1;
    std::vector<Rational> w2;
    std::vector<std::vector<std::size_t>> adj;  // adj[i]: indices j with a_i R b_j
};

/// Maximum of mu1(S) - mu2(R(S)) with the least maximizing S (maximizers are
/// closed under intersection, so it is unique).
struct IndexedViolation {
    Rational value;
    std::vector<std::size_t> witness;
};

IndexedViolation max_violation_indexed(const IndexedInstance& inst, Backend backend = Backend::Auto);

template <typename A, typename B>
using Relation = std::vector<std::pair<A, B>>;

template <typename A>
struct Violation {
    Rational value;
    std::vector<A> witness;
};

template <typename A>
struct CouplingVerdict {
    bool holds = false;
    Rational epsilon;
    Rational max_violation;
    std::vector<A> witness;
};

template <typename A, typename CA = std::less<A>, typename B = A, typename CB = std::less<B>>
struct CouplingQuery {
    Dist<A, CA> mu1;
    Dist<B, CB> mu2;
    Rational epsilon;
    Relation<A, B> relation;
};

/// Pairs of a relation that touch both supports; the rest cannot affect the verdict.
template <typename A, typename CA, typename B, typename CB>
IndexedInstance index_instance(const Dist<A, CA>& mu1, const Dist<B, CB>& mu2, const Relation<A, B>& rel,
                               std::vector<A>* support1 = nullptr) {
    IndexedInstance inst;
    std::map<A, std::size_t, CA> idx1(mu1.weights().key_comp());
    std::map<B, std::size_t, CB> idx2(mu2.weights().key_comp());
    for (const auto& [a, w] : mu1) {
        idx1.emplace(a, inst.w1.size());
        inst.w1.push_back(w);
        if (support1 != nullptr) {
            support1->push_back(a);
        }
    }
    for (const auto& [b, w] : mu2) {
        idx2.emplace(b, inst.w2.size());
        inst.w2.push_back(w);
    }
    inst.adj.resize(inst.w1.size());
    for (const auto& [a, b] : rel) {
        auto i = idx1.find(a);
        auto j = idx2.find(b);
        if (i != idx1.end() && j != idx2.end()) {
            inst.adj[i->second].push_back(j->second);
        }
    }
    for (auto& row : inst.adj) {
        std::sort(row.begin(), row.end());
        row.erase(std::unique(row.begin(), row.end()), row.end());
    }
    return inst;
}

template <typename A, typename CA, typename B, typename CB>
Violation<A> max_violation(const Dist<A, CA>& mu1, const Dist<B, CB>& mu2, const Relation<A, B>& rel,
                           Backend backend = Backend::Auto) {
    std::vector<A> support;
    const IndexedViolation v = max_violation_indexed(index_instance(mu1, mu2, rel, &support), backend);
    Violation<A> out{v.value, {}};
    for (std::size_t i : v.witness) {
        out.witness.push_back(support[i]);
    }
    return out;
}

void require_epsilon(const Rational& eps);

template <typename A, typename CA, typename B, typename CB>
CouplingVerdict<A> arcoupl_check(const CouplingQuery<A, CA, B, CB>& q, Backend backend = Backend::Auto) {
    require_epsilon(q.epsilon);
    Violation<A> v = max_violation(q.mu1, q.mu2, q.relation, backend);
    return {v.value <= q.epsilon, q.epsilon, v.value, std::move(v.witness)};
}

template <typename A, typename CA, typename B, typename CB>
bool arcoupl(const Dist<A, CA>& mu1, const Dist<B, CB>& mu2, const Rational& eps, const Relation<A, B>& rel) {
    // Errors at or above 1 hold trivially since mu1(S) <= 1.
    return max_violation(mu1, mu2, rel).value <= eps;
}

// Relation builders.

template <typename A, typename CA>
Relation<A, A> equality_relation(const Dist<A, CA>& mu1, const Dist<A, CA>& mu2) {
    Relation<A, A> r;
    for (const auto& [a, _] : mu1) {
        if (mu2(a) > 0) {
            r.emplace_back(a, a);
        }
    }
    return r;
}

template <typename A, typename CA, typename B, typename CB, typename P>
Relation<A, B> relation_from_predicate(const Dist<A, CA>& mu1, const Dist<B, CB>& mu2, P&& pred) {
    Relation<A, B> r;
    for (const auto& [a, _] : mu1) {
        for (const auto& [b, _w] : mu2) {
            if (pred(a, b)) {
                r.emplace_back(a, b);
            }
        }
    }
    return r;
}

enum class Outcome { Holds, Fails, InvalidInstance };

const char* outcome_name(Outcome o);

struct LemmaCheck {
    Outcome outcome = Outcome::Holds;
    std::string detail;
};

/// Pointwise and TV consequences of an equality coupling.
template <typename A, typename CA>
LemmaCheck check_eq_elim(const Dist<A, CA>& mu1, const Dist<A, CA>& mu2, const Rational& eps) {
    if (!arcoupl(mu1, mu2, eps, equality_relation(mu1, mu2))) {
        return {Outcome::InvalidInstance, "premise: no (eps, =)-coupling"};
    }
    for (const auto& [a, w] : mu1) {
        if (w > mu2(a) + eps) {
            return {Outcome::Fails, "pointwise bound violated"};
        }
    }
    if (arcoupl(mu2, mu1, eps, equality_relation(mu2, mu1)) && tv_distance(mu1, mu2) > eps) {
        return {Outcome::Fails, "tv distance exceeds eps despite symmetric coupling"};
    }
    return {Outcome::Holds, ""};
}

/// Composition along bind. The continuation premise is required for every
/// related pair of support points.
template <typename A, typename CA, typename B, typename CB, typename C, typename CC, typename D, typename CD>
struct BindInstance {
    Dist<A, CA> mu1;
    Dist<B, CB> mu2;
    Relation<A, B> rel;
    Rational eps;
    std::function<Dist<C, CC>(const A&)> f;
    std::function<Dist<D, CD>(const B&)> g;
    Relation<C, D> rel2;
    Rational eps2;
};

namespace detail {

template <typename Inst, typename ErrFor>
LemmaCheck check_composition(const Inst& in, ErrFor err_for, const Rational& total_eps) {
    if (!arcoupl(in.mu1, in.mu2, in.eps, in.rel)) {
        return {Outcome::InvalidInstance, "premise: outer coupling fails"};
    }
    for (const auto& [a, b] : in.rel) {
        if (in.mu1(a) == 0 || in.mu2(b) == 0) {
            continue;
        }
        if (!arcoupl(in.f(a), in.g(b), err_for(a, b), in.rel2)) {
            return {Outcome::InvalidInstance, "premise: continuation coupling fails"};
        }
    }
    const auto left = pcw::bind(in.mu1, in.f);
    const auto right = pcw::bind(in.mu2, in.g);
    const Rational mv = max_violation(left, right, in.rel2).value;
    if (mv > total_eps) {
        return {Outcome::Fails, "composed violation " + to_exact_string(mv) + " > " + to_exact_string(total_eps)};
    }
    return {Outcome::Holds, ""};
}

}  // namespace detail

template <typename... T>
LemmaCheck check_bind_composition(const BindInstance<T...>& in) {
    return detail::check_composition(in, [&](const auto&, const auto&) { return in.eps2; }, in.eps + in.eps2);
}

/// Composition with a per-outcome error function (values in [0,1]) whose
/// expectation is added to the outer error: indexed by left outcomes and
/// averaged under mu1, or indexed by right outcomes and averaged under mu2.
template <typename A, typename CA, typename B, typename CB, typename C, typename CC, typename D, typename CD>
LemmaCheck check_exp_composition_left(const BindInstance<A, CA, B, CB, C, CC, D, CD>& in,
                                      const std::function<Rational(const A&)>& err) {
    return detail::check_composition(in, [&](const A& a, const B&) { return err(a); }, in.eps + expect(in.mu1, err));
}

template <typename A, typename CA, typename B, typename CB, typename C, typename CC, typename D, typename CD>
LemmaCheck check_exp_composition_right(const BindInstance<A, CA, B, CB, C, CC, D, CD>& in,
                                       const std::function<Rational(const B&)>& err) {
    return detail::check_composition(in, [&](const A&, const B& b) { return err(b); }, in.eps + expect(in.mu2, err));
}

/// Holding at every point strictly above eps must imply holding at eps; the
/// grid supplies the points checked explicitly.
template <typename A, typename CA, typename B, typename CB>
LemmaCheck check_limit(const Dist<A, CA>& mu1, const Dist<B, CB>& mu2, const Rational& eps, const Relation<A, B>& rel,
                       const std::vector<Rational>& grid) {
    const Rational mv = max_violation(mu1, mu2, rel).value;
    for (const Rational& g : grid) {
        if (g <= eps) {
            return {Outcome::InvalidInstance, "grid point " + to_exact_string(g) + " is not above eps"};
        }
        if (mv > g) {
            return {Outcome::InvalidInstance, "premise fails at grid point " + to_exact_string(g)};
        }
    }
    // With an exact rational violation, failure at eps is always witnessed
    // strictly above eps, so the universal premise cannot hold.
    if (mv > eps) {
        const Rational mid = (eps + mv) / 2;
        return {Outcome::InvalidInstance, "premise fails at " + to_exact_string(mid) + ", between eps and the grid"};
    }
    return {Outcome::Holds, ""};
}

}  // namespace pcw::coupling
