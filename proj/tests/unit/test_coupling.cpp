#include <doctest.h>

#include <functional>
#include <set>

#include "pcw/coupling.hpp"
#include "../support/gen.hpp"

using namespace pcw;
using namespace pcw::coupling;

namespace {

using D = Dist<std::int64_t>;
using Less = std::less<std::int64_t>;
using ErrFn = std::function<Rational(const std::int64_t&)>;
using Rel = Relation<std::int64_t, std::int64_t>;

Rel injection_graph(std::int64_t n) {
    Rel r;
    for (std::int64_t i = 0; i <= n; ++i) {
        r.emplace_back(i, i);
    }
    return r;
}

Rel full_relation(std::int64_t max_value) {
    Rel r;
    for (std::int64_t a = 0; a <= max_value; ++a) {
        for (std::int64_t b = 0; b <= max_value; ++b) {
            r.emplace_back(a, b);
        }
    }
    return r;
}

// Brute force over every subset, independent of the library backends.
Rational brute_force(const D& mu1, const D& mu2, const Rel& rel) {
    const auto s1 = mu1.support();
    Rational best = 0;
    for (std::size_t mask = 0; mask < (std::size_t{1} << s1.size()); ++mask) {
        Rational lhs = 0;
        std::set<std::int64_t> image;
        for (std::size_t i = 0; i < s1.size(); ++i) {
            if ((mask >> i) & 1U) {
                lhs += mu1(s1[i]);
                for (const auto& [a, b] : rel) {
                    if (a == s1[i]) {
                        image.insert(b);
                    }
                }
            }
        }
        Rational rhs = 0;
        for (auto b : image) {
            rhs += mu2(b);
        }
        if (lhs - rhs > best) {
            best = lhs - rhs;
        }
    }
    return best;
}

}  // namespace

TEST_CASE("identity coupling has no violation") {
    testing::Gen g(3);
    for (int i = 0; i < 50; ++i) {
        const D mu = g.dist(5, 6);
        const auto v = max_violation(mu, mu, equality_relation(mu, mu));
        CHECK(v.value == 0);
        CHECK(v.witness.empty());
    }
}

TEST_CASE("injection between uniforms is tight at (M-N)/(M+1)") {
    for (std::int64_t n = 0; n <= 5; ++n) {
        for (std::int64_t m = n; m <= 6; ++m) {
            const auto v = max_violation(uniform(n + 1), uniform(m + 1), injection_graph(n));
            CHECK(v.value == make_rational(m - n, m + 1));
            if (m > n) {
                CHECK(v.witness == uniform(n + 1).support());
            }
        }
    }
    const CouplingQuery<std::int64_t> q{uniform(2), uniform(4), make_rational(1, 2), injection_graph(1)};
    CHECK(arcoupl_check(q).holds);
    auto below = q;
    below.epsilon = make_rational(499, 1000);
    const auto verdict = arcoupl_check(below);
    CHECK_FALSE(verdict.holds);
    CHECK(verdict.max_violation == make_rational(1, 2));
    CHECK(verdict.witness == std::vector<std::int64_t>{0, 1});
}

TEST_CASE("trivial and degenerate queries") {
    testing::Gen g(4);
    for (int i = 0; i < 50; ++i) {
        const D a = g.dist(4, 5);
        const D b = g.dist(4, 5);
        CHECK(arcoupl_check(CouplingQuery<std::int64_t>{a, b, Rational(1), g.relation(5)}).holds);
        const D full = g.dist(4, 5, true);
        CHECK(max_violation(a, full, full_relation(5)).value == 0);
    }
    const D one = uniform(3);
    const auto empty = max_violation(one, uniform(3), Rel{});
    CHECK(empty.value == 1);
    CHECK(empty.witness == one.support());
    CHECK(arcoupl(D::ret(2), D::ret(9), Rational(0), Rel{{2, 9}}));
    CHECK_THROWS_AS(require_epsilon(make_rational(-1, 2)), std::invalid_argument);
    CHECK_THROWS_AS(require_epsilon(make_rational(3, 2)), std::invalid_argument);
}

TEST_CASE("backends agree on value and witness up to support 12") {
    testing::Gen g(11);
    for (int i = 0; i < 300; ++i) {
        const auto size = static_cast<std::size_t>(g.range(1, 12));
        const D a = g.dist(size, 13);
        const D b = g.dist(size, 13, g.coin());
        const Rel r = g.relation(13, 0.15);
        const auto e = max_violation(a, b, r, Backend::Enumeration);
        const auto f = max_violation(a, b, r, Backend::MaxFlow);
        CHECK(e.value == f.value);
        CHECK(e.witness == f.witness);
        if (a.size() <= 8) {
            CHECK(e.value == brute_force(a, b, r));
        }
    }
}

TEST_CASE("enumeration refuses supports above its limit") {
    IndexedInstance inst;
    inst.w1.assign(kMaxEnumerationSupport + 1, make_rational(1, 64));
    inst.w2.assign(1, Rational(1));
    inst.adj.assign(kMaxEnumerationSupport + 1, {0});
    CHECK_THROWS_AS(max_violation_indexed(inst, Backend::Enumeration), SupportTooLarge);
    const auto v = max_violation_indexed(inst, Backend::Auto);
    CHECK(v.value == 0);
    inst.adj.assign(kMaxEnumerationSupport + 1, {});
    CHECK(max_violation_indexed(inst, Backend::Auto).value == make_rational(21, 64));
}

TEST_CASE("least witness is contained in every maximizer") {
    // Both {0} and {0, 1} attain 1/2; the least one is {0}.
    const D a = D::from_weights({{0, make_rational(1, 2)}, {1, make_rational(1, 4)}});
    const D b = D::from_weights({{0, make_rational(1, 4)}});
    const auto v = max_violation(a, b, Rel{{1, 0}});
    CHECK(v.value == make_rational(1, 2));
    CHECK(v.witness == std::vector<std::int64_t>{0});
}

TEST_CASE("monotone in the relation and in epsilon") {
    testing::Gen g(5);
    for (int i = 0; i < 300; ++i) {
        const D a = g.dist(4, 5);
        const D b = g.dist(4, 5);
        Rel r = g.relation(5, 0.3);
        const Rational small = max_violation(a, b, r).value;
        Rel bigger = r;
        for (const auto& p : g.relation(5, 0.2)) {
            bigger.push_back(p);
        }
        CHECK(max_violation(a, b, bigger).value <= small);
        const Rational e1 = g.unit_rational();
        const Rational e2 = g.unit_rational();
        if (arcoupl(a, b, std::min(e1, e2), r)) {
            CHECK(arcoupl(a, b, std::max(e1, e2), r));
        }
    }
}

TEST_CASE("equality coupling elimination") {
    testing::Gen g(6);
    int exercised = 0;
    for (int i = 0; i < 500; ++i) {
        const D a = g.dist(4, 4);
        const D b = g.coin() ? a : g.dist(4, 4);
        const Rational eps = g.unit_rational(6);
        const auto c = check_eq_elim(a, b, eps);
        CHECK(c.outcome != Outcome::Fails);
        exercised += c.outcome == Outcome::Holds;
        // With eps = 0 the coupling holds exactly when a <= b pointwise.
        bool pointwise = true;
        for (const auto& [x, w] : a) {
            pointwise = pointwise && w <= b(x);
        }
        CHECK(arcoupl(a, b, Rational(0), equality_relation(a, b)) == pointwise);
    }
    CHECK(exercised > 100);
    CHECK(check_eq_elim(uniform(3), uniform(2), Rational(1)).outcome == Outcome::Holds);
}

TEST_CASE("bind composition adds errors") {
    using Inst = BindInstance<std::int64_t, Less, std::int64_t, Less, std::int64_t, Less, std::int64_t, Less>;
    // uniform(2) into uniform(4), then each pair of continuations again.
    Inst in;
    in.mu1 = uniform(2);
    in.mu2 = uniform(4);
    in.rel = injection_graph(1);
    in.eps = make_rational(1, 2);
    in.f = [](std::int64_t a) { return fmap<std::int64_t>(uniform(2), [a](std::int64_t x) { return 2 * a + x; }); };
    in.g = [](std::int64_t b) { return fmap<std::int64_t>(uniform(4), [b](std::int64_t x) { return 4 * b + x; }); };
    for (std::int64_t a = 0; a < 2; ++a) {
        for (std::int64_t x = 0; x < 2; ++x) {
            in.rel2.emplace_back(2 * a + x, 4 * a + x);
        }
    }
    in.eps2 = make_rational(1, 2);
    CHECK(check_bind_composition(in).outcome == Outcome::Holds);
    auto weak = in;
    weak.eps2 = make_rational(1, 4);
    CHECK(check_bind_composition(weak).outcome == Outcome::InvalidInstance);
    const auto left = check_exp_composition_left(in, ErrFn([](const std::int64_t&) { return make_rational(1, 2); }));
    CHECK(left.outcome == Outcome::Holds);
}

TEST_CASE("composition lemmas on 1000 random premise-filtered instances") {
    using Inst = BindInstance<std::int64_t, Less, std::int64_t, Less, std::int64_t, Less, std::int64_t, Less>;
    testing::Gen g(8);
    int bind_valid = 0;
    int left_valid = 0;
    int right_valid = 0;
    for (int i = 0; i < 1000; ++i) {
        Inst in;
        in.mu1 = g.dist(4, 3);
        in.mu2 = g.dist(4, 3, true);
        in.rel = g.relation(3, 0.5);
        in.eps = max_violation(in.mu1, in.mu2, in.rel).value;
        std::vector<D> fs;
        std::vector<D> gs;
        for (int k = 0; k < 4; ++k) {
            fs.push_back(g.dist(3, 3));
            gs.push_back(g.dist(3, 3, true));
        }
        in.f = [fs](std::int64_t a) { return fs[static_cast<std::size_t>(a)]; };
        in.g = [gs](std::int64_t b) { return gs[static_cast<std::size_t>(b)]; };
        in.rel2 = g.relation(3, 0.5);
        std::vector<Rational> errs(4, Rational(0));
        std::vector<Rational> errs_r(4, Rational(0));
        for (const auto& [a, b] : in.rel) {
            const Rational v = max_violation(fs[a], gs[b], in.rel2).value;
            in.eps2 = std::max(in.eps2, v);
            errs[a] = std::max(errs[a], v);
            errs_r[b] = std::max(errs_r[b], v);
        }
        const auto bind = check_bind_composition(in);
        CHECK(bind.outcome != Outcome::Fails);
        bind_valid += bind.outcome == Outcome::Holds;
        const auto left = check_exp_composition_left(
            in, ErrFn([&](const std::int64_t& a) { return errs[static_cast<std::size_t>(a)]; }));
        CHECK(left.outcome != Outcome::Fails);
        left_valid += left.outcome == Outcome::Holds;
        const auto right = check_exp_composition_right(
            in, ErrFn([&](const std::int64_t& b) { return errs_r[static_cast<std::size_t>(b)]; }));
        CHECK(right.outcome != Outcome::Fails);
        right_valid += right.outcome == Outcome::Holds;
    }
    CHECK(bind_valid > 500);
    CHECK(left_valid > 500);
    CHECK(right_valid > 500);
}

TEST_CASE("limit check around the tight injection bound") {
    const D a = uniform(3);
    const D b = uniform(5);
    const Rel r = injection_graph(2);
    const Rational tight = make_rational(2, 5);
    std::vector<Rational> grid;
    Rational step = make_rational(1, 10);
    for (int k = 1; k <= 6; ++k) {
        grid.push_back(tight + step);
        step /= 10;
    }
    CHECK(check_limit(a, b, tight, r, grid).outcome == Outcome::Holds);
    CHECK(check_limit(a, b, tight, r, {}).outcome == Outcome::Holds);
    const Rational below = tight - make_rational(1, 1000000);
    CHECK(check_limit(a, b, below, r, grid).outcome == Outcome::InvalidInstance);
    CHECK(check_limit(a, b, below, r, {}).outcome == Outcome::InvalidInstance);
    CHECK(check_limit(a, b, tight, r, {tight}).outcome == Outcome::InvalidInstance);
}
