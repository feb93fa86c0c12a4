#include "pcw/coupling.hpp"

#include <cstdint>
#include <deque>
#include <limits>

namespace pcw::coupling {

void require_epsilon(const Rational& eps) {
    if (!is_probability(eps)) {
        throw std::invalid_argument("epsilon must lie in [0,1], got " + to_exact_string(eps));
    }
}

const char* outcome_name(Outcome o) {
    switch (o) {
    case Outcome::Holds: return "holds";
    case Outcome::Fails: return "fails";
    case Outcome::InvalidInstance: return "invalid-instance";
    }
    return "?";
}

namespace {

// Weights rescaled to integers over a common denominator.
struct Scaled {
    mpz_class den = 1;
    std::vector<mpz_class> w1;
    std::vector<mpz_class> w2;
};

Scaled scale(const IndexedInstance& inst) {
    Scaled s;
    for (const auto* ws : {&inst.w1, &inst.w2}) {
        for (const Rational& w : *ws) {
            mpz_lcm(s.den.get_mpz_t(), s.den.get_mpz_t(), w.get_den().get_mpz_t());
        }
    }
    auto conv = [&](const std::vector<Rational>& ws, std::vector<mpz_class>& out) {
        for (const Rational& w : ws) {
            out.push_back(w.get_num() * (s.den / w.get_den()));
        }
    };
    conv(inst.w1, s.w1);
    conv(inst.w2, s.w2);
    return s;
}

template <typename Num>
IndexedViolation enumerate_subsets(const IndexedInstance& inst, const std::vector<Num>& w1, const std::vector<Num>& w2,
                                   const mpz_class& den) {
    const std::size_t n = w1.size();
    std::vector<std::uint32_t> cover(w2.size(), 0);
    Num s1 = 0;
    Num s2 = 0;
    Num best = 0;
    std::uint32_t mask = 0;
    std::uint32_t meet = 0;  // intersection of all maximizers seen so far; the empty set starts at 0
    const std::uint64_t total = std::uint64_t{1} << n;
    for (std::uint64_t k = 1; k < total; ++k) {
        const auto bit = static_cast<std::size_t>(__builtin_ctzll(k));
        const std::uint32_t flag = std::uint32_t{1} << bit;
        mask ^= flag;
        if (mask & flag) {
            s1 += w1[bit];
            for (std::size_t j : inst.adj[bit]) {
                if (cover[j]++ == 0) {
                    s2 += w2[j];
                }
            }
        } else {
            s1 -= w1[bit];
            for (std::size_t j : inst.adj[bit]) {
                if (--cover[j] == 0) {
                    s2 -= w2[j];
                }
            }
        }
        const Num value = s1 - s2;
        if (value > best) {
            best = value;
            meet = mask;
        } else if (value == best) {
            meet &= mask;
        }
    }
    IndexedViolation out;
    if constexpr (std::is_same_v<Num, std::int64_t>) {
        out.value = Rational(mpz_class(static_cast<long>(best)), den);
    } else {
        out.value = Rational(best, den);
    }
    out.value.canonicalize();
    for (std::size_t i = 0; i < n; ++i) {
        if (meet & (std::uint32_t{1} << i)) {
            out.witness.push_back(i);
        }
    }
    return out;
}

IndexedViolation by_enumeration(const IndexedInstance& inst) {
    if (inst.w1.size() > kMaxEnumerationSupport) {
        throw SupportTooLarge("subset enumeration supports at most " + std::to_string(kMaxEnumerationSupport) +
                              " outcomes, got " + std::to_string(inst.w1.size()));
    }
    const Scaled s = scale(inst);
    mpz_class total = 0;
    for (const auto* ws : {&s.w1, &s.w2}) {
        for (const auto& w : *ws) {
            total += w;
        }
    }
    if (total < mpz_class(std::numeric_limits<std::int64_t>::max() / 4)) {
        std::vector<std::int64_t> w1;
        std::vector<std::int64_t> w2;
        for (const auto& w : s.w1) {
            w1.push_back(w.get_si());
        }
        for (const auto& w : s.w2) {
            w2.push_back(w.get_si());
        }
        return enumerate_subsets(inst, w1, w2, s.den);
    }
    return enumerate_subsets(inst, s.w1, s.w2, s.den);
}

// Source -> a (cap w1), a -> b (unbounded) for a R b, b -> sink (cap w2).
// A minimum cut with source side X costs mu1(A \ X) + mu2(B ∩ X), so the
// maximum flow equals mass(mu1) minus the maximum violation. The residual
// reachable set is the least minimum cut, whose A part is the least maximizer.
IndexedViolation by_max_flow(const IndexedInstance& inst) {
    const Scaled s = scale(inst);
    const std::size_t n = s.w1.size();
    const std::size_t m = s.w2.size();
    const std::size_t source = 0;
    const std::size_t sink = n + m + 1;
    struct Edge {
        std::size_t to;
        mpz_class cap;
        std::size_t rev;
    };
    std::vector<std::vector<Edge>> g(n + m + 2);
    auto add_edge = [&](std::size_t u, std::size_t v, const mpz_class& cap) {
        g[u].push_back({v, cap, g[v].size()});
        g[v].push_back({u, 0, g[u].size() - 1});
    };
    mpz_class mass1 = 0;
    for (const auto& w : s.w1) {
        mass1 += w;
    }
    const mpz_class unbounded = mass1 + 1;
    for (std::size_t i = 0; i < n; ++i) {
        add_edge(source, 1 + i, s.w1[i]);
        for (std::size_t j : inst.adj[i]) {
            add_edge(1 + i, 1 + n + j, unbounded);
        }
    }
    for (std::size_t j = 0; j < m; ++j) {
        add_edge(1 + n + j, sink, s.w2[j]);
    }

    mpz_class flow = 0;
    std::vector<std::pair<std::size_t, std::size_t>> parent(g.size());
    std::vector<bool> seen(g.size());
    auto bfs = [&] {
        std::fill(seen.begin(), seen.end(), false);
        std::deque<std::size_t> queue{source};
        seen[source] = true;
        while (!queue.empty()) {
            const std::size_t u = queue.front();
            queue.pop_front();
            for (std::size_t k = 0; k < g[u].size(); ++k) {
                const Edge& e = g[u][k];
                if (e.cap > 0 && !seen[e.to]) {
                    seen[e.to] = true;
                    parent[e.to] = {u, k};
                    queue.push_back(e.to);
                }
            }
        }
        return static_cast<bool>(seen[sink]);
    };
    while (bfs()) {
        mpz_class push = unbounded;
        for (std::size_t v = sink; v != source; v = parent[v].first) {
            const Edge& e = g[parent[v].first][parent[v].second];
            if (e.cap < push) {
                push = e.cap;
            }
        }
        for (std::size_t v = sink; v != source; v = parent[v].first) {
            Edge& e = g[parent[v].first][parent[v].second];
            e.cap -= push;
            g[e.to][e.rev].cap += push;
        }
        flow += push;
    }
    IndexedViolation out;
    out.value = Rational(mass1 - flow, s.den);
    out.value.canonicalize();
    for (std::size_t i = 0; i < n; ++i) {
        if (seen[1 + i]) {
            out.witness.push_back(i);
        }
    }
    return out;
}

}  // namespace

IndexedViolation max_violation_indexed(const IndexedInstance& inst, Backend backend) {
    if (inst.adj.size() != inst.w1.size()) {
        throw std::invalid_argument("adjacency does not match the left support");
    }
    switch (backend) {
    case Backend::Enumeration:
        return by_enumeration(inst);
    case Backend::MaxFlow:
        return by_max_flow(inst);
    case Backend::Auto:
        break;
    }
    return inst.w1.size() <= kMaxEnumerationSupport ? by_enumeration(inst) : by_max_flow(inst);
}

}  // namespace pcw::coupling
