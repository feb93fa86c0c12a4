#include <doctest.h>

#include <set>

#include "pcw/lang/library.hpp"
#include "pcw/rules.hpp"
#include "../support/gen.hpp"

using namespace pcw;
using namespace pcw::rules;

namespace {

Injection random_injection(testing::Gen& g, std::int64_t n, std::int64_t m) {
    std::vector<std::int64_t> cod;
    for (std::int64_t i = 0; i <= m; ++i) {
        cod.push_back(i);
    }
    std::shuffle(cod.begin(), cod.end(), g.engine());
    cod.resize(static_cast<std::size_t>(n + 1));
    return Injection{cod};
}

}  // namespace

TEST_CASE("decoder reads digits most significant first") {
    CHECK(decoder(1, {1, 1, 0}) == 6);
    CHECK(decoder(1, {1, 1, 1}) == 7);
    CHECK(decoder(2, {2, 0}) == 6);
    CHECK(decoder(4, {}) == 0);
    CHECK_THROWS_AS(decoder(1, {2}), std::invalid_argument);
    CHECK_THROWS_AS(decoder(1, {-1}), std::invalid_argument);
}

TEST_CASE("decoder is a bijection onto 0..(N+1)^p - 1") {
    for (std::int64_t n = 0; n <= 15; ++n) {
        std::int64_t size = 1;
        for (std::int64_t p = 0; size <= 256; ++p, size *= n + 1) {
            const auto lists = uniform_lists(n, p);
            CHECK(static_cast<std::int64_t>(lists.size()) == size);
            std::set<std::int64_t> image;
            for (const auto& [digits, w] : lists) {
                CHECK(w == make_rational(1, size));
                image.insert(decoder(n, digits));
            }
            CHECK(static_cast<std::int64_t>(image.size()) == size);
            CHECK(*image.begin() == 0);
            CHECK(*image.rbegin() == size - 1);
            if (n == 0) {
                break;
            }
        }
    }
}

TEST_CASE("injections are validated") {
    CHECK(Injection::from_pairs({{0, 2}, {1, 0}}, 1, 3).image == std::vector<std::int64_t>{2, 0});
    CHECK_THROWS_AS(Injection::from_pairs({{0, 1}, {1, 1}}, 1, 3), std::invalid_argument);
    CHECK_THROWS_AS(Injection::from_pairs({{0, 4}, {1, 1}}, 1, 3), std::invalid_argument);
    CHECK_THROWS_AS(Injection::from_pairs({{0, 1}}, 1, 3), std::invalid_argument);
    CHECK(Injection::identity(2).pairs() == std::vector<std::pair<std::int64_t, std::int64_t>>{{0, 0}, {1, 1}, {2, 2}});
}

TEST_CASE("rand-rand rules are tight") {
    const auto le = validate_rand_rand_le(1, 3, Injection::identity(1));
    CHECK(le.passed());
    const auto ge = validate_rand_rand_ge(7, 5, Injection{{0, 1, 2, 3, 4, 5}});
    CHECK(ge.passed());
    testing::Gen g(2);
    for (std::int64_t n = 0; n <= 4; ++n) {
        for (std::int64_t m = n + 1; m <= 5; ++m) {
            CHECK(validate_rand_rand_le(n, m, random_injection(g, n, m)).passed());
            CHECK(validate_rand_rand_ge(m, n, random_injection(g, n, m)).passed());
        }
    }
    CHECK(validate_rand_rand_le(2, 2, Injection::identity(2)).passed());
    CHECK_THROWS(validate_rand_rand_le(3, 2, Injection::identity(3)));
}

TEST_CASE("many-to-one coupling") {
    for (auto [n, p] : std::vector<std::pair<std::int64_t, std::int64_t>>{{1, 2}, {1, 3}, {2, 2}, {3, 1}}) {
        CHECK(validate_many_to_one(n, p).passed());
    }
}

TEST_CASE("fragmented accounting") {
    const auto id = Injection::identity(5);
    const auto acc = fragmented_accounting(5, 7, id, make_rational(1, 8));
    CHECK(acc.amplified == make_rational(1, 2));
    CHECK(acc.expectation == make_rational(1, 8));
    CHECK(validate_fragmented(5, 7, id, make_rational(1, 8)).passed());
    CHECK_THROWS(validate_fragmented(6, 7, Injection::identity(6), make_rational(1, 2)));
    // Unclamped accounting still reports the exact expectation.
    const auto big = fragmented_accounting(0, 1, Injection::identity(0), make_rational(1, 2));
    CHECK(big.amplified == 1);
    CHECK(big.expectation == make_rational(1, 2));
}

TEST_CASE("error amplification iterations") {
    CHECK(amp_iterations(Rational(1), make_rational(4, 3)) == 0);
    CHECK(amp_iterations(make_rational(1, 2), Rational(2)) == 1);
    CHECK(amp_iterations(make_rational(1, 100), make_rational(4, 3)) == 17);
    CHECK_THROWS(amp_iterations(Rational(0), Rational(2)));
    CHECK_THROWS(amp_iterations(make_rational(1, 2), Rational(1)));
}

TEST_CASE("erasability on the corpus") {
    const auto corpus = load_corpus(2);
    CHECK(corpus.size() >= 8);
    for (const auto& p : corpus) {
        CHECK(p.program->closed());
    }
    const State sigma = standard_state(2);
    CHECK(erasability_check("state-step", append_samples(0, 1), sigma, corpus, 12).passed());
    CHECK(erasability_check("state-step x2", append_samples(0, 2), sigma, corpus, 8).passed());
    const auto control = erasability_check("fixed", append_fixed(0, 1), sigma, corpus, 12);
    CHECK_FALSE(control.passed());
    bool reported = false;
    for (const auto& c : control.checks) {
        reported = reported || (!c.ok && c.detail.find("without presampling") != std::string::npos);
    }
    CHECK(reported);
}

TEST_CASE("tape-tape append coupling") {
    ListRelation rel;
    for (std::int64_t a = 0; a <= 1; ++a) {
        for (std::int64_t b = 0; b <= 1; ++b) {
            rel.push_back({{a, b}, {2 * a + b}});
        }
    }
    CHECK(validate_tape_tape_append(1, 3, 2, 1, rel, Rational(0)).passed());
    rel.pop_back();
    CHECK_FALSE(validate_tape_tape_append(1, 3, 2, 1, rel, make_rational(1, 8)).passed());
    CHECK(validate_tape_tape_append(1, 3, 2, 1, rel, make_rational(1, 4)).passed());
}

TEST_CASE("rule manifest instances all behave as expected") {
    const auto manifest = nlohmann::json::parse(lang::read_file(lang::asset_dir() / "manifest" / "rules.json"));
    const auto& instances = manifest.at("instances");
    CHECK(instances.size() >= 20);
    int expected_failures = 0;
    for (const auto& inst : instances) {
        const auto report = run_rule_instance(inst);
        INFO(report.to_json().dump());
        CHECK(report.as_expected());
        expected_failures += report.expect_holds == false;
    }
    CHECK(expected_failures >= 3);
    CHECK_THROWS(run_rule_instance({{"rule", "no-such-rule"}}));
}
