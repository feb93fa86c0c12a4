// One pass/fail line per acceptance criterion. Tolerances are exact (rational
// equality or inequality); each criterion also has a wall-clock limit.

#include <chrono>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "pcw/cases.hpp"
#include "pcw/rules.hpp"
#include "pcw/semantics.hpp"
#include "../support/properties.hpp"

using namespace pcw;

namespace {

struct Outcome {
    bool ok = true;
    std::ostringstream detail;

    void require(bool cond, const std::string& what) {
        if (!cond) {
            if (ok) {
                detail << "failed: ";
            } else {
                detail << "; ";
            }
            detail << what;
            ok = false;
        }
    }
};

std::string q(const Rational& r) { return to_exact_string(r); }

struct Criterion {
    int id;
    std::string name;
    double limit_seconds;
    std::function<void(Outcome&)> body;
};

void uniform_step_law(Outcome& out) {
    for (std::int64_t n = 0; n <= 7; ++n) {
        const auto d = sem::exec_n(sem::initial(lang::rand(lang::int_lit(n))), 1);
        const auto ints = fmap<std::int64_t>(d, [](const lang::Val& v) { return static_cast<std::int64_t>(v->num); });
        out.require(ints == uniform(n + 1), "rand " + std::to_string(n) + " not uniform after one step");
    }
    out.detail << "N = 0..7 exact";
}

void coupling_oracle(Outcome& out) {
    const auto r = testing::dual_search(2024, 1000, 30);
    out.require(r.queries == 1000, "query count");
    out.require(r.exceeded == 0, std::to_string(r.exceeded) + " searches exceeded max_violation");
    out.require(r.monotonicity == 0, std::to_string(r.monotonicity) + " monotonicity violations");
    out.detail << r.queries << " queries, 30 X samples each, exceeded " << r.exceeded << ", monotonicity failures "
               << r.monotonicity;
}

void rule_tightness(Outcome& out) {
    testing::Gen g(7);
    int instances = 0;
    for (std::int64_t n = 0; n <= 8; ++n) {
        for (std::int64_t m = n + 1; m <= 8; ++m) {
            std::vector<rules::Injection> fs{rules::Injection::identity(n)};
            for (int k = 0; k < 5; ++k) {
                std::vector<std::int64_t> cod;
                for (std::int64_t i = 0; i <= m; ++i) {
                    cod.push_back(i);
                }
                std::shuffle(cod.begin(), cod.end(), g.engine());
                cod.resize(static_cast<std::size_t>(n + 1));
                fs.push_back(rules::Injection{cod});
            }
            for (const auto& f : fs) {
                const auto le = rules::validate_rand_rand_le(n, m, f);
                const auto ge = rules::validate_rand_rand_ge(m, n, f);
                out.require(le.passed(), "le " + le.params.dump());
                out.require(ge.passed(), "ge " + ge.params.dump());
                instances += 2;
            }
        }
    }
    out.detail << instances << " instances tight, each failing 1/1000000 below";
}

void many_to_one(Outcome& out) {
    out.require(rules::decoder(1, {1, 1, 0}) == 6, "decoder(1,[1,1,0]) != 6");
    for (std::uint64_t depth : {6U, 8U, 12U}) {
        const auto r = cases::run_many_to_one_prog(depth);
        out.require(r.computed == Rational(0) && r.residual == 0,
                    "tv at depth " + std::to_string(depth) + " is not exactly 0");
    }
    for (auto [n, p] : std::vector<std::pair<std::int64_t, std::int64_t>>{{1, 2}, {1, 3}, {2, 2}}) {
        out.require(rules::validate_many_to_one(n, p).passed(),
                    "validate_many_to_one(" + std::to_string(n) + "," + std::to_string(p) + ")");
    }
    out.detail << "decoder 6, tv 0 at depth 6/8/12, (1,2) (1,3) (2,2) pass";
}

void fragmented_identity(Outcome& out) {
    int count = 0;
    int amplified_above_one = 0;
    for (std::int64_t n = 0; n <= 8; ++n) {
        for (std::int64_t m = n + 1; m <= 8; ++m) {
            for (const Rational& eps : {make_rational(1, 8), make_rational(1, 16)}) {
                const auto acc = rules::fragmented_accounting(n, m, rules::Injection::identity(n), eps);
                out.require(acc.expectation == eps, "N=" + std::to_string(n) + " M=" + std::to_string(m) + " eps=" +
                                                        q(eps) + " gives " + q(acc.expectation));
                amplified_above_one += acc.amplified > 1;
                ++count;
            }
        }
    }
    out.detail << count << " (N, M, eps) triples exact; " << amplified_above_one
               << " have amplified error above 1 (identity only)";
}

void erasability(Outcome& out) {
    const auto corpus = rules::load_corpus(3);
    out.require(corpus.size() >= 8, "corpus has fewer than 8 programs");
    const auto sigma = rules::standard_state(3);
    const auto pass = rules::erasability_check("state-step", rules::append_samples(0, 1), sigma, corpus, 12);
    out.require(pass.passed(), "state_step append not erasable");
    const auto control = rules::erasability_check("fixed", rules::append_fixed(0, 1), sigma, corpus, 12);
    std::string counterexample;
    for (const auto& c : control.checks) {
        if (!c.ok && counterexample.empty()) {
            counterexample = c.name + " " + c.detail;
        }
    }
    out.require(!control.passed() && !counterexample.empty(), "fixed-value control did not fail");
    out.detail << corpus.size() << " programs, n <= 12; control counterexample: " << counterexample;
}

void rejection(Outcome& out) {
    const auto rs = cases::run_rejection(7, 5, 5);
    out.require(rs.verdict() == cases::Verdict::Pass, "rejection case did not pass");
    out.require(rs.residual == make_rational(1, 1024), "residual " + q(rs.residual) + " != 1/1024");
    out.require(rs.computed && *rs.computed <= make_rational(1, 1024), "gap above 1/1024");
    const auto dice = cases::run_dice(4);
    out.require(dice.verdict() == cases::Verdict::Pass, "dice case did not pass");
    out.detail << "rs(7,5) gap " << q(rs.computed.value_or(-1)) << " residual " << q(rs.residual)
               << "; dice gap " << q(dice.computed.value_or(-1)) << " <= combined residual " << q(dice.bound)
               << ", droll uniform";
}

void weak_switching(Outcome& out) {
    const std::vector<std::tuple<std::int64_t, std::int64_t, Rational>> cases{
        {3, 2, make_rational(1, 3)}, {4, 2, make_rational(1, 4)}, {4, 3, make_rational(3, 4)}, {5, 3, make_rational(3, 5)}};
    for (const auto& [n, qq, bound] : cases) {
        const auto r = cases::run_switching_weak(n, qq);
        out.require(r.bound == bound, "bound for N=" + std::to_string(n));
        out.require(r.verdict() == cases::Verdict::Pass, "N=" + std::to_string(n) + " Q=" + std::to_string(qq));
        out.detail << "(" << n << "," << qq << ") tv " << q(r.computed.value_or(-1)) << " <= " << q(bound) << "; ";
    }
    const auto one = cases::run_switching_weak(4, 1);
    out.require(one.computed == Rational(0), "Q=1 tv not 0");
    out.detail << "Q=1 tv " << q(one.computed.value_or(-1));
}

void transcripts(Outcome& out) {
    const auto t = cases::run_switching_transcript(4, 2);
    out.require(t.verdict() == cases::Verdict::Pass, "transcript (4,2)");
    const auto cpa = cases::run_cpa(3, {0, 1});
    out.require(cpa.bound == make_rational(2, 3), "cpa bound " + q(cpa.bound));
    out.require(cpa.verdict() == cases::Verdict::Pass, "cpa (3,2)");
    const auto one = cases::run_cpa(3, {1});
    out.require(one.computed == Rational(0) && one.verdict() == cases::Verdict::Pass, "cpa Q=1 tv not 0");
    out.detail << "transcript max tv " << q(t.computed.value_or(-1)) << " <= " << q(t.bound) << "; cpa tv "
               << q(cpa.computed.value_or(-1)) << " <= 2/3; Q=1 tv " << q(one.computed.value_or(-1));
}

void bptree(Outcome& out) {
    const auto spec = cases::TreeSpec::from_json(
        nlohmann::json::parse(R"({"M": 3, "depth": 2, "tree": [[0, 1], [2, 3, 4], [5]]})"));
    const auto r = cases::run_bptree(spec, 6);
    out.require(r.bound == make_rational(1, 729), "bound " + q(r.bound) + " != (1-6/9)^6");
    out.require(r.verdict() == cases::Verdict::Pass, "bptree case");
    for (const auto& c : r.checks) {
        out.require(c.ok, c.name);
    }
    out.detail << "max gap " << q(r.computed.value_or(-1)) << " <= " << q(r.bound) << ", naive exact, ranks match";
}

void properties(Outcome& out) {
    const int monad = testing::monad_law_failures(11, 1000);
    const int mass = testing::mass_inequality_failures(12, 1000);
    const int tv = testing::tv_failures(13, 1000);
    out.require(monad == 0, std::to_string(monad) + " monad law failures");
    out.require(mass == 0, std::to_string(mass) + " mass inequality failures");
    out.require(tv == 0, std::to_string(tv) + " tv property failures");
    out.detail << "1000 instances each: monad laws, mass inequality, tv symmetry/triangle/subsets";
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria{
        {1, "uniform step law", 1, uniform_step_law},
        {2, "coupling checker oracle equivalence", 30, coupling_oracle},
        {3, "rand-rand rule tightness", 10, rule_tightness},
        {4, "many-to-one", 5, many_to_one},
        {5, "fragmented expectation identity", 60, fragmented_identity},
        {6, "erasability", 60, erasability},
        {7, "rejection samplers", 60, rejection},
        {8, "weak switching lemma", 300, weak_switching},
        {9, "transcript bounds", 300, transcripts},
        {10, "B+ tree samplers", 300, bptree},
        {11, "monad and tv properties", 30, properties},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        Outcome out;
        const auto start = std::chrono::steady_clock::now();
        try {
            c.body(out);
        } catch (const std::exception& e) {
            out.require(false, std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        out.require(secs < c.limit_seconds, "over time limit");
        failures += !out.ok;
        std::printf("criterion %2d %s  %s (%.2fs < %.0fs) %s\n", c.id, out.ok ? "PASS" : "FAIL", c.name.c_str(), secs,
                    c.limit_seconds, out.detail.str().c_str());
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
