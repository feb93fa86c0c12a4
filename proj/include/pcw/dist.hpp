#pragma once

// Finite-support discrete subdistributions with exact rational weights.

#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <type_traits>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pcw/rational.hpp"

namespace pcw {

template <typename T, typename Compare = std::less<T>>
class DistBuilder;

/// A subdistribution over `T`: a finite map from outcomes to strictly positive
/// exact weights whose total mass is at most one. Iteration follows `Compare`,
/// which makes serialization and equality structural.
template <typename T, typename Compare = std::less<T>>
class Dist {
public:
    using value_type = T;
    using compare_type = Compare;
    using Weights = std::map<T, Rational, Compare>;
    using const_iterator = typename Weights::const_iterator;

    Dist() = default;

    static Dist ret(T a) {
        Dist d;
        d.weights_.emplace(std::move(a), Rational(1));
        return d;
    }

    /// Validating constructor: zero weights are dropped, negative weights and
    /// total mass above one are rejected.
    static Dist from_weights(Weights weights) {
        Rational total = 0;
        for (auto it = weights.begin(); it != weights.end();) {
            if (it->second < 0) {
                throw std::invalid_argument("negative probability weight");
            }
            if (it->second == 0) {
                it = weights.erase(it);
                continue;
            }
            total += it->second;
            ++it;
        }
        if (total > 1) {
            throw std::invalid_argument("distribution mass exceeds 1: " + to_exact_string(total));
        }
        Dist d;
        d.weights_ = std::move(weights);
        return d;
    }

    /// Weight of `a`; zero outside the support.
    [[nodiscard]] Rational operator()(const T& a) const {
        auto it = weights_.find(a);
        return it == weights_.end() ? Rational(0) : it->second;
    }

    [[nodiscard]] Rational mass() const {
        Rational total = 0;
        for (const auto& [_, w] : weights_) {
            total += w;
        }
        return total;
    }

    [[nodiscard]] bool empty() const { return weights_.empty(); }
    [[nodiscard]] std::size_t size() const { return weights_.size(); }
    [[nodiscard]] const_iterator begin() const { return weights_.begin(); }
    [[nodiscard]] const_iterator end() const { return weights_.end(); }
    [[nodiscard]] const Weights& weights() const { return weights_; }

    [[nodiscard]] std::vector<T> support() const {
        std::vector<T> out;
        out.reserve(weights_.size());
        for (const auto& [a, _] : weights_) {
            out.push_back(a);
        }
        return out;
    }

    friend bool operator==(const Dist& lhs, const Dist& rhs) {
        if (lhs.weights_.size() != rhs.weights_.size()) {
            return false;
        }
        const Compare less = lhs.weights_.key_comp();
        auto r = rhs.weights_.begin();
        for (const auto& [a, w] : lhs.weights_) {
            if (less(a, r->first) || less(r->first, a) || w != r->second) {
                return false;
            }
            ++r;
        }
        return true;
    }

private:
    friend class DistBuilder<T, Compare>;
    Weights weights_;
};

/// Accumulates weighted outcomes; used where a result is assembled piecewise.
template <typename T, typename Compare>
class DistBuilder {
public:
    void add(const T& a, const Rational& w) {
        if (w == 0) {
            return;
        }
        auto [it, inserted] = weights_.try_emplace(a, w);
        if (!inserted) {
            it->second += w;
        }
    }

    void add(T&& a, const Rational& w) {
        if (w == 0) {
            return;
        }
        auto [it, inserted] = weights_.try_emplace(std::move(a), w);
        if (!inserted) {
            it->second += w;
        }
    }

    [[nodiscard]] Dist<T, Compare> build() && { return Dist<T, Compare>::from_weights(std::move(weights_)); }

    // Skips the mass check; callers guarantee mass <= 1 by construction.
    [[nodiscard]] Dist<T, Compare> build_unchecked() && {
        Dist<T, Compare> d;
        d.weights_ = std::move(weights_);
        return d;
    }

private:
    typename Dist<T, Compare>::Weights weights_;
};

template <typename T, typename Compare = std::less<T>>
Dist<T, Compare> ret(T a) {
    return Dist<T, Compare>::ret(std::move(a));
}

/// result(b) = sum_a mu(a) * f(a)(b).
template <typename A, typename CA, typename F>
auto bind(const Dist<A, CA>& mu, F&& f) -> std::invoke_result_t<F, const A&> {
    using Out = std::invoke_result_t<F, const A&>;
    DistBuilder<typename Out::value_type, typename Out::compare_type> builder;
    for (const auto& [a, wa] : mu) {
        const Out fa = f(a);
        for (const auto& [b, wb] : fa) {
            builder.add(b, wa * wb);
        }
    }
    return std::move(builder).build_unchecked();
}

/// Pushforward along a deterministic map.
template <typename B, typename CB = std::less<B>, typename A, typename CA, typename F>
Dist<B, CB> fmap(const Dist<A, CA>& mu, F&& f) {
    DistBuilder<B, CB> builder;
    for (const auto& [a, w] : mu) {
        builder.add(f(a), w);
    }
    return std::move(builder).build_unchecked();
}

/// Uniform over {0, ..., n-1}.
Dist<std::int64_t> uniform(std::int64_t n);

/// Expected value of a [0,1]-valued random variable.
template <typename A, typename CA, typename F>
Rational expect(const Dist<A, CA>& mu, F&& f) {
    Rational total = 0;
    for (const auto& [a, w] : mu) {
        const Rational fa = f(a);
        if (!is_probability(fa)) {
            throw std::invalid_argument("random variable value outside [0,1]: " + to_exact_string(fa));
        }
        total += w * fa;
    }
    return total;
}

/// max(sum (mu1-mu2)^+, sum (mu2-mu1)^+), the supremum over events of
/// |mu1(X) - mu2(X)| for finite subdistributions.
template <typename A, typename CA>
Rational tv_distance(const Dist<A, CA>& mu1, const Dist<A, CA>& mu2) {
    Rational pos = 0;
    Rational neg = 0;
    const CA less = mu1.weights().key_comp();
    auto i = mu1.begin();
    auto j = mu2.begin();
    while (i != mu1.end() || j != mu2.end()) {
        if (j == mu2.end() || (i != mu1.end() && less(i->first, j->first))) {
            pos += i->second;
            ++i;
        } else if (i == mu1.end() || less(j->first, i->first)) {
            neg += j->second;
            ++j;
        } else {
            const Rational d = i->second - j->second;
            if (d > 0) {
                pos += d;
            } else {
                neg -= d;
            }
            ++i;
            ++j;
        }
    }
    return pos > neg ? pos : neg;
}

/// JSON array of {outcome, num, den} in canonical order; integers are decimal strings.
template <typename A, typename CA, typename F>
nlohmann::json dist_to_json(const Dist<A, CA>& mu, F&& outcome_to_json) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& [a, w] : mu) {
        out.push_back({{"outcome", outcome_to_json(a)},
                       {"num", w.get_num().get_str()},
                       {"den", w.get_den().get_str()}});
    }
    return out;
}

/// Exact rational as {"num": "...", "den": "..."}.
nlohmann::json rational_to_json(const Rational& r);
Rational rational_from_json(const nlohmann::json& j);

}  // namespace pcw
