#pragma once

// Seeded generators for property tests.

#include <algorithm>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "pcw/coupling.hpp"
#include "pcw/dist.hpp"

namespace pcw::testing {

class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    std::int64_t range(std::int64_t lo, std::int64_t hi) {
        return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng_);
    }

    bool coin(double p = 0.5) { return std::bernoulli_distribution(p)(rng_); }

    Rational unit_rational(std::int64_t max_den = 12) {
        const std::int64_t den = range(1, max_den);
        return make_rational(range(0, den), den);
    }

    /// Subdistribution over values in 0..max_value with at most max_support
    /// outcomes; total mass is 1 when `full`.
    Dist<std::int64_t> dist(std::size_t max_support, std::int64_t max_value, bool full = false) {
        const auto k = static_cast<std::size_t>(range(1, static_cast<std::int64_t>(max_support)));
        std::vector<std::int64_t> outcomes;
        for (std::int64_t v = 0; v <= max_value; ++v) {
            outcomes.push_back(v);
        }
        std::shuffle(outcomes.begin(), outcomes.end(), rng_);
        outcomes.resize(std::min(k, outcomes.size()));
        std::vector<std::int64_t> w;
        std::int64_t total = 0;
        for (std::size_t i = 0; i < outcomes.size(); ++i) {
            w.push_back(range(1, 10));
            total += w.back();
        }
        const std::int64_t den = full ? total : total + range(0, 6);
        Dist<std::int64_t>::Weights weights;
        for (std::size_t i = 0; i < outcomes.size(); ++i) {
            weights[outcomes[i]] = make_rational(w[i], den);
        }
        return Dist<std::int64_t>::from_weights(std::move(weights));
    }

    coupling::Relation<std::int64_t, std::int64_t> relation(std::int64_t max_value, double density = 0.4) {
        coupling::Relation<std::int64_t, std::int64_t> r;
        for (std::int64_t a = 0; a <= max_value; ++a) {
            for (std::int64_t b = 0; b <= max_value; ++b) {
                if (coin(density)) {
                    r.emplace_back(a, b);
                }
            }
        }
        return r;
    }

    std::mt19937_64& engine() { return rng_; }

private:
    std::mt19937_64 rng_;
};

}  // namespace pcw::testing
