#include <doctest.h>

#include "pcw/lang/library.hpp"
#include "pcw/lang/syntax.hpp"
#include "pcw/semantics.hpp"

using namespace pcw;
using namespace pcw::lang;
using namespace pcw::sem;

namespace {

Expr prog(std::string_view src) { return Library::standard().load_program(src, "test.rml"); }

Dist<std::int64_t> ints(const Dist<Val>& d) {
    return fmap<std::int64_t>(d, [](const Val& v) { return static_cast<std::int64_t>(v->num); });
}

State with_tape(std::int64_t bound, std::vector<std::int64_t> contents) {
    State s;
    s.alloc_tape(bound, std::move(contents));
    return s;
}

}  // namespace

TEST_CASE("rand N reduces to a uniform value in one step") {
    for (std::int64_t n = 0; n <= 7; ++n) {
        const auto d = exec_n(initial(rand(int_lit(n))), 1);
        CHECK(ints(d) == uniform(n + 1));
        CHECK(exec_n(initial(rand(int_lit(n))), 0).empty());
    }
}

TEST_CASE("labelled rand pops a matching tape") {
    const auto d = step(initial(parse_expr("rand 3 #t0"), with_tape(3, {2, 1})));
    REQUIRE(d.size() == 1);
    const auto& [cfg, w] = *d.begin();
    CHECK(w == 1);
    CHECK(structurally_equal(cfg.expr, int_lit(2)));
    CHECK(cfg.state.tape(0)->contents == std::vector<std::int64_t>{1});
}

TEST_CASE("bound mismatch and empty tapes sample fresh and keep the tape") {
    for (const State& s : {with_tape(2, {1}), with_tape(3, {})}) {
        const auto d = step(initial(parse_expr("rand 3 #t0"), s));
        CHECK(d.size() == 4);
        for (const auto& [cfg, w] : d) {
            CHECK(w == make_rational(1, 4));
            CHECK(*cfg.state.tape(0) == *s.tape(0));
        }
    }
}

TEST_CASE("stuck configurations have no successors") {
    for (const char* src : {"rand 3 #t4", "rand (-1)", "1 / 0", "5 % 0", "fst 3", "!#l9", "1 + true", "3 2",
                            "alloctape (-2)", "rand true"}) {
        INFO(src);
        const Cfg c = initial(parse_expr(src));
        CHECK(step(c).empty());
        const auto r = exec_approx(c, 10);
        CHECK(r.stuck == 1);
        CHECK(r.values.empty());
        CHECK(r.residual == 0);
    }
    CHECK_THROWS_AS(step(initial(int_lit(1))), std::invalid_argument);
}

TEST_CASE("deterministic redexes step with weight one") {
    for (const char* src : {"1 + 2", "(fun x -> x) 4", "fst (1, 2)", "ref 0", "if true then 1 else 2",
                            "alloctape 3", "unpack (pack 1) as x in x"}) {
        INFO(src);
        const auto d = step(initial(parse_expr(src)));
        REQUIRE(d.size() == 1);
        CHECK(d.mass() == 1);
    }
}

TEST_CASE("large rand supports are refused") {
    ExecOptions opts;
    opts.max_rand_support = 4;
    CHECK_NOTHROW(step(initial(parse_expr("rand 3")), opts));
    CHECK_THROWS_AS(step(initial(parse_expr("rand 4")), opts), SupportTooLarge);
}

TEST_CASE("evaluation is right to left") {
    const auto d = exec_n(initial(parse_expr("let r = ref 0 in (r <- 1; 0) + (r <- 2; 0); !r")), 100);
    CHECK(ints(d) == Dist<std::int64_t>::ret(1));
    const auto pairs = exec_n(initial(parse_expr("let r = ref 0 in let p = ((r <- !r + 1; !r), (r <- !r + 1; !r)) in fst p")), 100);
    CHECK(ints(pairs) == Dist<std::int64_t>::ret(2));
}

TEST_CASE("state_step appends a uniform sample") {
    const auto d = state_step(with_tape(2, {1}), 0);
    REQUIRE(d.size() == 3);
    std::int64_t expected = 0;
    for (const auto& [s, w] : d) {
        CHECK(w == make_rational(1, 3));
        CHECK(s.tape(0)->contents == std::vector<std::int64_t>{1, expected++});
    }
    CHECK_THROWS(state_step(State{}, 0));
}

TEST_CASE("scripted runs resolve samples in order") {
    const Cfg c = initial(parse_expr("10 * rand 3 + rand 3"));
    const auto full = scripted_length(c, {1, 2});
    REQUIRE(full.has_value());
    CHECK(exec_n(c, *full).mass() == 1);
    CHECK(exec_n(c, *full - 1).mass() == 0);
    CHECK_FALSE(scripted_length(c, {1}).has_value());
    CHECK_FALSE(scripted_length(c, {4, 0}).has_value());
    CHECK_FALSE(scripted_length(initial(parse_expr("1 / 0")), {}).has_value());
}

TEST_CASE("residual, values and stuck mass account for everything") {
    const Cfg drej = initial(prog("drej ()"));
    for (std::uint64_t n : {0U, 5U, 17U, 40U}) {
        const auto r = exec_approx(drej, n);
        CHECK(r.values.mass() + r.residual + r.stuck == 1);
        CHECK(r.values.mass() == term_prob_n(drej, n));
        CHECK(r.values == exec_n(drej, n));
    }
    ExecOptions tight;
    tight.max_steps = 10;
    const auto r = exec_approx(drej, 1000, tight);
    CHECK(r.budget_exhausted);
    CHECK(r.values.mass() + r.residual == 1);
}

TEST_CASE("exec_n is monotone in n and tape annotations do not matter") {
    for (const char* src : {"drej ()", "dsim ()", "droll ()", "m2o_bits ()"}) {
        INFO(src);
        const Expr e = prog(src);
        const auto profile = exec_profile(initial(e), 40);
        const auto plain = exec_profile(initial(strip_labels(e)), 40);
        CHECK(profile == plain);
        for (std::size_t n = 1; n < profile.size(); ++n) {
            for (const auto& [v, w] : profile[n - 1]) {
                CHECK(profile[n](v) >= w);
            }
            CHECK(profile[n] == exec_n(initial(e), n));
        }
    }
}

TEST_CASE("pexec_n keeps final states") {
    const auto d = pexec_n(initial(parse_expr("ref (rand 1)")), 10);
    REQUIRE(d.size() == 2);
    for (const auto& [cfg, w] : d) {
        CHECK(w == make_rational(1, 2));
        CHECK(cfg.state.heap_size() == 1);
    }
}
