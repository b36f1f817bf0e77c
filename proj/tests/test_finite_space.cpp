#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "condmom/finite_space.hpp"
#include "condmom/fixtures.hpp"
#include "condmom/random_space.hpp"
#include "condmom/verify_suite.hpp"

using namespace condmom;

namespace {

double cell_value(const FiniteSpace& space, const RandomMap& m, const Partition& part,
                  std::size_t cell) {
    return m.value(part.cells[cell].front());
}

// moment-difference form of the conditional covariance, as an independent
// route against the centered form the library computes
double cov_by_moments(const FiniteSpace& space, const RandomMap& x, const RandomMap& y,
                      const Partition& part, std::size_t c) {
    double sxy = 0.0, sx = 0.0, sy = 0.0;
    for (std::size_t i : part.cells[c]) {
        const double w = space.probs[i] / part.cell_probs[c];
        sxy += w * x.value(i) * y.value(i);
        sx += w * x.value(i);
        sy += w * y.value(i);
    }
    return sxy - sx * sy;
}

} // namespace

TEST_CASE("space invariants are enforced") {
    CHECK_THROWS_AS(FiniteSpace({"a", "b"}, {0.5, 0.6}), std::invalid_argument);
    CHECK_THROWS_AS(FiniteSpace({"a", "b"}, {-0.1, 1.1}), std::invalid_argument);
    CHECK_THROWS_AS(FiniteSpace({"a", "a"}, {0.5, 0.5}), std::invalid_argument);
    CHECK_THROWS_AS(FiniteSpace({"a"}, {0.5, 0.5}), std::invalid_argument);
    CHECK_NOTHROW(FiniteSpace({"a", "b"}, {0.25, 0.75}));
}

TEST_CASE("expectation") {
    const auto r3 = builtin_fixture("remark3");
    CHECK(expectation(r3.space, r3.y) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(expectation(r3.space, r3.x) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

    const auto space = FiniteSpace::uniform(4);
    CHECK(expectation(space, RandomMap::constant(4, 7.25)) == doctest::Approx(7.25));
    CHECK(expectation(space, RandomMap::real({1, 2, 3, 4})) == doctest::Approx(2.5));

    CHECK_THROWS_AS(expectation(space, RandomMap::labels({"a", "b", "a", "b"})), KindError);
    CHECK_THROWS_AS(expectation(space, RandomMap::real({1, 2})), SpaceMismatchError);
}

TEST_CASE("condition groups by exact label tuples") {
    const auto r3 = builtin_fixture("remark3");

    const Partition by_x = condition(r3.space, {r3.x});
    REQUIRE(by_x.cell_count() == 2);
    // first-appearance order: X = 0 cell {m1, p1}, then X = 1 cell {z0}
    CHECK(by_x.cells[0] == std::vector<std::size_t>{0, 2});
    CHECK(by_x.cells[1] == std::vector<std::size_t>{1});
    CHECK(by_x.cell_probs[0] == doctest::Approx(2.0 / 3.0));

    const Partition trivial = condition(r3.space, {RandomMap::constant(3, 1.0)});
    CHECK(trivial.cell_count() == 1);
    CHECK(trivial.cells[0].size() == 3);

    // (x, z) with the two-letter z separates all three points
    const auto r3z = builtin_fixture("remark3_z");
    CHECK(condition(r3z.space, {r3z.x, r3z.z}).cell_count() == 3);

    CHECK_THROWS_AS(condition(r3.space, {}), std::invalid_argument);
    CHECK_THROWS_AS(condition(r3.space, {RandomMap::constant(5, 1.0)}), SpaceMismatchError);
}

TEST_CASE("zero-probability cells are dropped") {
    const FiniteSpace space({"a", "b", "c"}, {0.5, 0.5, 0.0});
    const RandomMap z = RandomMap::labels({"u", "u", "v"});
    const Partition part = condition(space, {z});
    REQUIRE(part.cell_count() == 1);
    CHECK(part.cell_of_outcome[2] == -1);
    // conditional values on dropped outcomes default to 0
    const RandomMap ce = conditional_expectation(space, RandomMap::real({1, 3, 9}), part);
    CHECK(ce.value(0) == doctest::Approx(2.0));
    CHECK(ce.value(2) == 0.0);
}

TEST_CASE("conditional expectation on the asymmetry fixture") {
    const auto r3 = builtin_fixture("remark3");

    const RandomMap ex_y = conditional_expectation(r3.space, r3.y, {r3.x});
    for (std::size_t i = 0; i < 3; ++i)
        CHECK(ex_y.value(i) == doctest::Approx(0.0).epsilon(1e-12));

    // y separates points, so conditioning on it recovers x itself
    const RandomMap ey_x = conditional_expectation(r3.space, r3.x, {r3.y});
    for (std::size_t i = 0; i < 3; ++i)
        CHECK(ey_x.value(i) == r3.x.value(i));

    const auto r3z = builtin_fixture("remark3_z");
    const RandomMap fine = conditional_expectation(r3z.space, r3z.y, {r3z.x, r3z.z});
    CHECK(fine.value(0) == doctest::Approx(-1.0)); // w = -1
    CHECK(fine.value(1) == doctest::Approx(0.0));  // w = 0
    CHECK(fine.value(2) == doctest::Approx(1.0));  // w = +1
}

TEST_CASE("conditional distribution") {
    const auto r3 = builtin_fixture("remark3");

    // conditioning on the target itself: point mass everywhere
    const auto self = conditional_distribution(r3.space, r3.y, {r3.y});
    for (std::size_t c = 0; c < self.partition.cell_count(); ++c) {
        REQUIRE(self.pmf[c].size() == 1);
        CHECK(self.pmf[c].begin()->second == doctest::Approx(1.0));
    }

    const auto y_given_x = conditional_distribution(r3.space, r3.y, {r3.x});
    // cell order: x = 0 first, then x = 1
    CHECK(y_given_x.pmf[0].at("-1") == doctest::Approx(0.5));
    CHECK(y_given_x.pmf[0].at("1") == doctest::Approx(0.5));
    CHECK(y_given_x.pmf[1].at("0") == doctest::Approx(1.0));

    // trivial conditioning = marginal pmf
    const auto marginal = conditional_distribution(r3.space, r3.y, {r3.z});
    REQUIRE(marginal.partition.cell_count() == 1);
    CHECK(marginal.pmf[0].at("-1") == doctest::Approx(1.0 / 3.0));
    CHECK(marginal.pmf[0].at("0") == doctest::Approx(1.0 / 3.0));
    CHECK(marginal.pmf[0].at("1") == doctest::Approx(1.0 / 3.0));

    // pmfs sum to 1
    double total = 0.0;
    for (const auto& [k, p] : y_given_x.pmf[0])
        total += p;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("conditional covariance and variance on fixtures") {
    const auto r3 = builtin_fixture("remark3");
    const RandomMap cov = conditional_covariance(r3.space, r3.x, r3.y, {r3.z});
    CHECK(std::abs(cov.value(0)) <= 1e-12);

    // covariance of a map with itself is its variance
    const RandomMap var = conditional_variance(r3.space, r3.x, {r3.z});
    const RandomMap cov_xx = conditional_covariance(r3.space, r3.x, r3.x, {r3.z});
    CHECK(var.value(0) == doctest::Approx(cov_xx.value(0)).epsilon(1e-14));
    CHECK(var.value(0) == doctest::Approx(2.0 / 9.0).epsilon(1e-14));

    const auto fp = builtin_fixture("four_point");
    const RandomMap cov4 = conditional_covariance(fp.space, fp.x, fp.y, {fp.z});
    CHECK(cov4.value(0) == doctest::Approx(-0.5).epsilon(1e-14));

    // x measurable w.r.t. the conditioning set has zero conditional variance
    const RandomMap vx = conditional_variance(fp.space, fp.x, {fp.x});
    for (std::size_t i = 0; i < 4; ++i)
        CHECK(std::abs(vx.value(i)) <= 1e-15);
}

TEST_CASE("both covariance forms agree on randomized spaces") {
    for (int k = 0; k < 200; ++k) {
        Rng rng(mix_seed(101, static_cast<std::uint64_t>(k)));
        const auto inst = sample_instance(rng, RandomSpaceConfig{});
        const auto part = condition(inst.space, {inst.z});
        const RandomMap cov = conditional_covariance(inst.space, inst.x, inst.y, part);
        for (std::size_t c = 0; c < part.cell_count(); ++c) {
            const double alt = cov_by_moments(inst.space, inst.x, inst.y, part, c);
            CHECK(std::abs(cell_value(inst.space, cov, part, c) - alt) <= 1e-12);
        }
    }
}

TEST_CASE("bernoulli cell variance is p(1-p)") {
    for (int k = 0; k < 100; ++k) {
        Rng rng(mix_seed(202, static_cast<std::uint64_t>(k)));
        RandomSpaceConfig cfg;
        cfg.binary_x = true;
        const auto inst = sample_instance(rng, cfg);
        const auto part = condition(inst.space, {inst.z});
        const RandomMap var = conditional_variance(inst.space, inst.x, part);
        const RandomMap mean = conditional_expectation(inst.space, inst.x, part);
        for (std::size_t c = 0; c < part.cell_count(); ++c) {
            const double p = cell_value(inst.space, mean, part, c);
            CHECK(std::abs(cell_value(inst.space, var, part, c) - p * (1.0 - p)) <= 1e-12);
        }
    }
}

TEST_CASE("conditional independence check") {
    // explicit product measure: two independent coins, z constant
    const FiniteSpace coins({"00", "01", "10", "11"}, {0.3 * 0.6, 0.3 * 0.4, 0.7 * 0.6, 0.7 * 0.4});
    const RandomMap cx = RandomMap::real({0, 0, 1, 1});
    const RandomMap cy = RandomMap::real({0, 1, 0, 1});
    const RandomMap cz = RandomMap::labels({"u", "u", "u", "u"});
    CHECK(check_conditional_independence(coins, cx, cy, cz).independent);

    Rng rng(mix_seed(303, 0));
    const auto prod = sample_conditionally_independent_instance(rng);
    CHECK(check_conditional_independence(prod.space, prod.x, prod.y, prod.z).independent);

    const auto r3 = builtin_fixture("remark3");
    const auto dep = check_conditional_independence(r3.space, r3.x, r3.y, r3.z);
    CHECK_FALSE(dep.independent);
    CHECK(dep.max_violation > 0.1);

    // a non-degenerate map is never independent of itself
    const auto self = check_conditional_independence(r3.space, r3.y, r3.y, r3.z);
    CHECK_FALSE(self.independent);
}

TEST_CASE("mean independence is asymmetric on the fixture") {
    const auto r3 = builtin_fixture("remark3");
    CHECK(check_mean_independence(r3.space, r3.y, r3.x, r3.z).holds);
    CHECK_FALSE(check_mean_independence(r3.space, r3.x, r3.y, r3.z).holds);

    // y measurable w.r.t. z: both sides equal y
    const auto fp = builtin_fixture("four_point");
    const RandomMap zy = RandomMap::labels({"p", "p", "q", "q"});
    const RandomMap y2 = RandomMap::real({1, 1, 3, 3});
    CHECK(check_mean_independence(fp.space, y2, fp.x, zy).holds);
}

TEST_CASE("independence characterizations agree") {
    Rng rng(mix_seed(404, 1));
    const auto prod = sample_conditionally_independent_instance(rng);
    const auto all_true = check_independence_equivalence(prod.space, prod.x, prod.y, prod.z);
    CHECK(all_true.stmt1);
    CHECK(all_true.stmt2);
    CHECK(all_true.stmt3);

    const auto r3 = builtin_fixture("remark3");
    const auto all_false = check_independence_equivalence(r3.space, r3.x, r3.y, r3.z);
    CHECK_FALSE(all_false.stmt1);
    CHECK_FALSE(all_false.stmt2);
    CHECK_FALSE(all_false.stmt3);
    CHECK(all_false.agree());

    // degenerate y: conditioning on it adds nothing
    const auto degen = check_independence_equivalence(r3.space, r3.x, RandomMap::constant(3, 5.0), r3.z);
    CHECK(degen.stmt1);
    CHECK(degen.stmt2);
    CHECK(degen.stmt3);

    for (int k = 0; k < 1000; ++k) {
        Rng r(mix_seed(404, 100 + static_cast<std::uint64_t>(k)));
        const auto inst = sample_instance(r, RandomSpaceConfig{});
        CHECK(check_independence_equivalence(inst.space, inst.x, inst.y, inst.z).agree());
    }
}

TEST_CASE("averaging, chain rule and pull-out properties") {
    for (int k = 0; k < 200; ++k) {
        Rng rng(mix_seed(505, static_cast<std::uint64_t>(k)));
        const auto inst = sample_instance(rng, RandomSpaceConfig{});
        CHECK(averaging_violation(inst.space, inst.y, {inst.x, inst.z}) <= 1e-12);

        const RandomMap fine = conditional_expectation(inst.space, inst.y, {inst.x, inst.z});
        const RandomMap twice = conditional_expectation(inst.space, fine, {inst.z});
        const RandomMap once = conditional_expectation(inst.space, inst.y, {inst.z});
        for (std::size_t i = 0; i < inst.space.size(); ++i)
            if (inst.space.probs[i] > 0.0)
                CHECK(std::abs(twice.value(i) - once.value(i)) <= 1e-12);
    }
}

TEST_CASE("conditional independence implies both mean independences and zero covariance") {
    for (int k = 0; k < 200; ++k) {
        Rng rng(mix_seed(606, static_cast<std::uint64_t>(k)));
        const auto inst = sample_conditionally_independent_instance(rng);
        REQUIRE(check_conditional_independence(inst.space, inst.x, inst.y, inst.z).independent);
        CHECK(check_mean_independence(inst.space, inst.y, inst.x, inst.z).holds);
        CHECK(check_mean_independence(inst.space, inst.x, inst.y, inst.z).holds);
        const auto m = conditional_moments(inst.space, inst.x, inst.y, {inst.z});
        for (double c : m.cov_xy)
            CHECK(std::abs(c) <= 1e-12);
    }
}

TEST_CASE("cauchy-schwarz per cell") {
    for (int k = 0; k < 200; ++k) {
        Rng rng(mix_seed(707, static_cast<std::uint64_t>(k)));
        const auto inst = sample_instance(rng, RandomSpaceConfig{});
        const auto m = conditional_moments(inst.space, inst.x, inst.y, {inst.z});
        const auto my = conditional_moments(inst.space, inst.y, inst.y, {inst.z});
        for (std::size_t c = 0; c < m.partition.cell_count(); ++c)
            CHECK(m.cov_xy[c] * m.cov_xy[c] <= m.var_x[c] * my.var_x[c] + 1e-12);
    }
}

TEST_CASE("fixture parser") {
    const auto parsed = load_fixture_string("# comment\nw1 1/2 0 1.5 a\nw2 1/2 1 -1 b # tail\n");
    CHECK(parsed.space.size() == 2);
    CHECK(parsed.x.value(1) == 1.0);
    CHECK(parsed.y.value(0) == 1.5);
    CHECK(parsed.z.label(1) == "b");

    CHECK_THROWS_AS(load_fixture_string(""), ParseError);
    CHECK_THROWS_AS(load_fixture_string("w1 1/2 0 1\n"), ParseError);          // missing field
    CHECK_THROWS_AS(load_fixture_string("w1 1.0 0 1 a extra\n"), ParseError);  // trailing field
    CHECK_THROWS_AS(load_fixture_string("w1 x/2 0 1 a\n"), ParseError);        // bad rational
    CHECK_THROWS_AS(load_fixture_string("w1 1/0 0 1 a\n"), ParseError);        // zero denominator

    // the shipped fixture files parse to the same spaces as the builtins
    const auto from_file = load_fixture_file(std::string(CONDMOM_FIXTURE_DIR) + "/remark3.space");
    const auto builtin = builtin_fixture("remark3");
    REQUIRE(from_file.space.size() == builtin.space.size());
    for (std::size_t i = 0; i < builtin.space.size(); ++i) {
        CHECK(from_file.space.probs[i] == builtin.space.probs[i]);
        CHECK(from_file.x.value(i) == builtin.x.value(i));
        CHECK(from_file.y.value(i) == builtin.y.value(i));
        CHECK(from_file.z.label(i) == builtin.z.label(i));
    }
    CHECK_THROWS_AS(load_fixture_file("/nonexistent/missing.space"), ParseError);
}

TEST_CASE("opaque labels admit equality only") {
    const auto r3 = builtin_fixture("remark3");
    CHECK_THROWS_AS(r3.z.value(0), KindError);
    CHECK_THROWS_AS(conditional_expectation(r3.space, r3.z, {r3.x}), KindError);
    CHECK(r3.z.key(0) == "u");
    CHECK_THROWS_AS(r3.x.label(0), KindError);
}
