#include <doctest.h>

#include "../support/properties.hpp"

using namespace pcw;
using namespace pcw::testing;

TEST_CASE("monad laws on 1000 generated instances") { CHECK(monad_law_failures(101, 1000) == 0); }

TEST_CASE("bind never increases mass on 1000 generated instances") { CHECK(mass_inequality_failures(102, 1000) == 0); }

TEST_CASE("tv is symmetric, a metric and the subset maximum on 1000 instances") { CHECK(tv_failures(103, 1000) == 0); }

TEST_CASE("dual search never beats the subset maximum") {
    const auto r = dual_search(104, 300, 40);
    CHECK(r.queries == 300);
    CHECK(r.exceeded == 0);
    CHECK(r.monotonicity == 0);
    // The 0/1 samples reach the maximum on at least one query.
    CHECK(r.best_gap_to_max == 0);
}
