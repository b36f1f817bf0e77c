#include "condmom/verify_suite.hpp"

#include <algorithm>
#include <cmath>

#include "condmom/affine_regression.hpp"
#include "condmom/fixtures.hpp"
#include "condmom/projection.hpp"

namespace condmom {

RandomMap make_mean_independent(const FiniteSpace& space, const RandomMap& y0, const RandomMap& x,
                                const RandomMap& z) {
    const RandomMap fine = conditional_expectation(space, y0, {x, z});
    const RandomMap coarse = conditional_expectation(space, y0, {z});
    std::vector<double> out(space.size());
    for (std::size_t i = 0; i < space.size(); ++i)
        out[i] = y0.value(i) - fine.value(i) + coarse.value(i);
    return RandomMap::real(std::move(out));
}

RandomMap make_zero_conditional_cov(const FiniteSpace& space, const RandomMap& y0,
                                    const RandomMap& x, const RandomMap& z) {
    const RandomMap g = g_term(space, x, y0, z);
    std::vector<double> out(space.size());
    for (std::size_t i = 0; i < space.size(); ++i)
        out[i] = y0.value(i) - g.value(i);
    return RandomMap::real(std::move(out));
}

namespace {

constexpr double kIdentityTol = 1e-10;
constexpr double kPartiallingTol = 1e-9;

double max_abs_diff_on_support(const FiniteSpace& space, const RandomMap& a, const RandomMap& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < space.size(); ++i)
        if (space.probs[i] > 0.0)
            worst = std::max(worst, std::abs(a.value(i) - b.value(i)));
    return worst;
}

struct ClauseTally {
    int applicable = 0;
    int failures = 0;
    double max_violation = 0.0;

    void add(const ClauseResult& c) {
        if (!c.applicable)
            return;
        ++applicable;
        if (!c.pass)
            ++failures;
        max_violation = std::max(max_violation, c.max_violation);
    }
    nlohmann::json as_json() const {
        return {{"applicable", applicable},
                {"failures", failures},
                {"max_violation", max_violation}};
    }
};

struct RandomizedTally {
    int spaces = 0;
    double regression_identity = 0.0;        // binary x: rhs vs fine conditional mean
    double affine_reconstruction = 0.0;  // two-value cells
    double averaging = 0.0;
    double chain_rule = 0.0;
    double pull_out = 0.0;
    double cauchy_schwarz = 0.0;
    double cross_oracle = 0.0;
    int cross_oracle_flag_mismatches = 0;
    double h_bound_excess = 0.0;
    double h_sharpness = 0.0;
    int equivalence_disagreements = 0;
    int independence_implication_failures = 0; // conditional independence => both mean indeps + zero cov
    double identity = 0.0;    // worst proof-step identity across reports
    ClauseTally forward, formulas, converse, mirror_forward, mirror_formulas,
        mirror_converse;

    void add_slope_theorem(const SlopeTheoremReport& r) {
        forward.add(r.forward);
        formulas.add(r.formulas);
        converse.add(r.converse);
        mirror_forward.add(r.mirror_forward);
        mirror_formulas.add(r.mirror_formulas);
        mirror_converse.add(r.mirror_converse);
        identity = std::max({identity, r.intercept_identity_violation, r.cov_beta_var_violation,
                             r.degenerate_slope_violation, r.mirror_intercept_identity_violation,
                             r.mirror_cov_delta_var_violation, r.mirror_degenerate_slope_violation});
    }

    bool pass() const {
        return regression_identity <= kIdentityTol && affine_reconstruction <= kIdentityTol &&
               averaging <= kMomentTol && chain_rule <= kMomentTol && pull_out <= kMomentTol &&
               cauchy_schwarz <= kMomentTol && cross_oracle <= kIdentityTol &&
               cross_oracle_flag_mismatches == 0 && h_bound_excess <= kMomentTol &&
               h_sharpness <= kMomentTol && equivalence_disagreements == 0 && independence_implication_failures == 0 &&
               identity <= kIdentityTol &&
               forward.failures + formulas.failures + converse.failures +
                       mirror_forward.failures + mirror_formulas.failures +
                       mirror_converse.failures ==
                   0;
    }

    nlohmann::json as_json() const {
        return {{"spaces", spaces},
                {"regression_identity_max_violation", regression_identity},
                {"affine_reconstruction_max_violation", affine_reconstruction},
                {"averaging_max_violation", averaging},
                {"chain_rule_max_violation", chain_rule},
                {"pull_out_max_violation", pull_out},
                {"cauchy_schwarz_max_violation", cauchy_schwarz},
                {"cross_oracle_max_violation", cross_oracle},
                {"cross_oracle_flag_mismatches", cross_oracle_flag_mismatches},
                {"h_bound_max_excess", h_bound_excess},
                {"h_sharpness_max_violation", h_sharpness},
                {"equivalence_disagreements", equivalence_disagreements},
                {"independence_implication_failures", independence_implication_failures},
                {"proof_identity_max_violation", identity},
                {"slope_theorem_clauses",
                 {{"forward", forward.as_json()},
                  {"coefficient_formulas", formulas.as_json()},
                  {"converse", converse.as_json()},
                  {"mirror_forward", mirror_forward.as_json()},
                  {"mirror_coefficient_formulas", mirror_formulas.as_json()},
                  {"mirror_converse", mirror_converse.as_json()}}},
                {"pass", pass()}};
    }
};

void check_properties(const RandomInstance& inst, RandomizedTally& t) {
    const auto& [space, x, y, z] = inst;

    t.averaging = std::max(t.averaging, averaging_violation(space, y, {x, z}));

    // chain rule: conditioning twice equals conditioning once
    {
        const RandomMap fine = conditional_expectation(space, y, {x, z});
        const RandomMap twice = conditional_expectation(space, fine, {z});
        const RandomMap once = conditional_expectation(space, y, {z});
        t.chain_rule = std::max(t.chain_rule, max_abs_diff_on_support(space, twice, once));
    }

    // pull-out with a z-measurable factor
    {
        const RandomMap u = conditional_expectation(space, x, {z});
        std::vector<double> uy(space.size());
        for (std::size_t i = 0; i < space.size(); ++i)
            uy[i] = u.value(i) * y.value(i);
        const RandomMap lhs = conditional_expectation(space, RandomMap::real(std::move(uy)), {z});
        const RandomMap ey = conditional_expectation(space, y, {z});
        double worst = 0.0;
        for (std::size_t i = 0; i < space.size(); ++i)
            if (space.probs[i] > 0.0)
                worst = std::max(worst, std::abs(lhs.value(i) - u.value(i) * ey.value(i)));
        t.pull_out = std::max(t.pull_out, worst);
    }

    // Cauchy-Schwarz per cell
    {
        const auto m = conditional_moments(space, x, y, {z});
        const auto my = conditional_moments(space, y, y, {z});
        for (std::size_t c = 0; c < m.partition.cell_count(); ++c) {
            const double excess = m.cov_xy[c] * m.cov_xy[c] - m.var_x[c] * my.var_x[c];
            t.cauchy_schwarz = std::max(t.cauchy_schwarz, excess);
        }
    }

    // two independent slope oracles
    {
        const AffineFit fit = fit_affine(space, x, y, z);
        const CellSlopes geo = slope_from_projection(space, x, y, {z});
        for (std::size_t c = 0; c < fit.partition.cell_count(); ++c) {
            if (fit.degenerate[c] != geo.degenerate[c]) {
                ++t.cross_oracle_flag_mismatches;
                continue;
            }
            t.cross_oracle =
                std::max(t.cross_oracle, std::abs(fit.beta[c] - geo.slope[c]));
        }
    }

    if (const auto p1 = check_independence_equivalence(space, x, y, z); !p1.agree())
        ++t.equivalence_disagreements;

    t.add_slope_theorem(verify_slope_theorem(space, x, y, z));
}

void check_binary_extras(const RandomInstance& inst, RandomizedTally& t) {
    const auto& [space, x, y, z] = inst;

    // the regression identity with no propensity assumption whatsoever
    const RandomMap fine = conditional_expectation(space, y, {x, z});
    const RandomMap rhs = regression_rhs(space, x, y, z);
    t.regression_identity = std::max(t.regression_identity, max_abs_diff_on_support(space, fine, rhs));

    // affine reconstruction on cells where x takes exactly two values
    const AffineFit fit = fit_affine(space, x, y, z);
    for (std::size_t c = 0; c < fit.partition.cell_count(); ++c) {
        bool saw0 = false, saw1 = false;
        for (std::size_t i : fit.partition.cells[c]) {
            if (space.probs[i] <= 0.0)
                continue;
            (x.value(i) == 1.0 ? saw1 : saw0) = true;
        }
        if (!(saw0 && saw1))
            continue;
        for (std::size_t i : fit.partition.cells[c])
            if (space.probs[i] > 0.0)
                t.affine_reconstruction = std::max(
                    t.affine_reconstruction,
                    std::abs(fit.alpha[c] + fit.beta[c] * x.value(i) - fine.value(i)));
    }

    const HDiagnostic h = h_diagnostic(space, x, z);
    t.h_bound_excess = std::max(t.h_bound_excess, h.second_moment - 1.0);
    t.h_sharpness =
        std::max(t.h_sharpness, std::abs(h.second_moment - h.nondegenerate_mass));
}

void check_independence_implications(const RandomInstance& inst, RandomizedTally& t) {
    const auto& [space, x, y, z] = inst;
    const auto ind = check_conditional_independence(space, x, y, z);
    if (!ind.independent) {
        ++t.independence_implication_failures; // the generator promises independence
        return;
    }
    const auto mi10 = check_mean_independence(space, y, x, z);
    const auto mi11 = check_mean_independence(space, x, y, z);
    const auto m = conditional_moments(space, x, y, {z});
    double max_cov = 0.0;
    for (double c : m.cov_xy)
        max_cov = std::max(max_cov, std::abs(c));
    if (!mi10.holds || !mi11.holds || max_cov > kMomentTol)
        ++t.independence_implication_failures;
}

nlohmann::json partialling_report(std::uint64_t seed, int instances, bool& pass) {
    double identity = 0.0;     // partialling formula vs direct projection
    double idempotence = 0.0;  // P(P y) vs P y
    double self_adjoint = 0.0; // <P a, b> vs <a, P b>
    int degenerate_rejections = 0;

    for (int k = 0; k < instances; ++k) {
        Rng rng(mix_seed(seed ^ 0x4c454d4d41ULL, static_cast<std::uint64_t>(k)));
        const Eigen::Index dim = 2 + static_cast<Eigen::Index>(rng.below(9)); // 2..10

        Eigen::MatrixXd gram;
        if (rng.below(3) == 0) {
            gram = Eigen::MatrixXd::Identity(dim, dim);
        } else {
            Eigen::MatrixXd a(dim, dim);
            for (Eigen::Index i = 0; i < dim; ++i)
                for (Eigen::Index j = 0; j < dim; ++j)
                    a(i, j) = rng.normal();
            gram = a.transpose() * a;
            // keep the spectrum away from zero so 1e-9 relative agreement is
            // a statement about the formula, not about the conditioning
            gram += 0.05 * gram.trace() / double(dim) *
                    Eigen::MatrixXd::Identity(dim, dim);
        }
        const InnerProductSpace space{gram};

        const Eigen::Index vdim = static_cast<Eigen::Index>(rng.below(
            static_cast<std::uint64_t>(dim - 1))); // 0 .. dim-2
        Eigen::MatrixXd cols(dim, vdim);
        for (Eigen::Index j = 0; j < vdim; ++j)
            for (Eigen::Index i = 0; i < dim; ++i)
                cols(i, j) = rng.normal();
        if (vdim > 0 && rng.below(3) == 0) { // rank-deficient spanning set
            Eigen::MatrixXd wide(dim, vdim + 1);
            wide << cols, 2.0 * cols.col(0);
            cols = wide;
        }
        const Subspace V{cols};

        Eigen::VectorXd xv(dim), yv(dim), av(dim), bv(dim);
        for (Eigen::Index i = 0; i < dim; ++i) {
            xv(i) = rng.normal();
            yv(i) = rng.normal();
            av(i) = rng.normal();
            bv(i) = rng.normal();
        }

        try {
            const PartialOut po = partial_out(space, yv, xv, V);
            const Eigen::VectorXd direct = project(space, yv, V.extended_by(xv));
            identity = std::max(identity, space.norm(po.projection - direct) /
                                              (1.0 + space.norm(yv)));
        } catch (const DegenerateDirectionError&) {
            ++degenerate_rejections; // astronomically unlikely for random x
        }

        const Eigen::VectorXd py = project(space, yv, V);
        idempotence = std::max(idempotence, space.norm(project(space, py, V) - py));
        const Eigen::VectorXd pa = project(space, av, V);
        const Eigen::VectorXd pb = project(space, bv, V);
        self_adjoint =
            std::max(self_adjoint, std::abs(space.inner(pa, bv) - space.inner(av, pb)));
    }

    pass = identity <= kPartiallingTol && idempotence <= kPartiallingTol && self_adjoint <= kPartiallingTol &&
           degenerate_rejections == 0;
    return {{"instances", instances},
            {"identity_max_relative_violation", identity},
            {"idempotence_max_violation", idempotence},
            {"self_adjoint_max_violation", self_adjoint},
            {"degenerate_rejections", degenerate_rejections},
            {"pass", pass}};
}

nlohmann::json fixture_report(const std::string& name, const LabeledSpace& f, bool& pass) {
    const auto& space = f.space;

    nlohmann::json j;
    j["outcomes"] = space.outcomes;

    const auto mi10 = check_mean_independence(space, f.y, f.x, f.z);
    const auto mi11 = check_mean_independence(space, f.x, f.y, f.z);
    j["y_mean_independent_of_x"] = mi10.holds;
    j["x_mean_independent_of_y"] = mi11.holds;
    j["expectation_x"] = expectation(space, f.x);
    j["expectation_y"] = expectation(space, f.y);

    const auto m = conditional_moments(space, f.x, f.y, {f.z});
    double max_cov = 0.0;
    for (double c : m.cov_xy)
        max_cov = std::max(max_cov, std::abs(c));
    j["max_abs_conditional_cov"] = max_cov;

    const RandomMap fine = conditional_expectation(space, f.y, {f.x, f.z});
    j["conditional_mean_y_given_xz"] = fine.values();

    const AffineFit fit = fit_affine(space, f.x, f.y, f.z);
    j["alpha"] = fit.alpha;
    j["beta"] = fit.beta;

    const CellSlopes geo = slope_from_projection(space, f.x, f.y, {f.z});
    double oracle_gap = 0.0;
    for (std::size_t c = 0; c < fit.beta.size(); ++c)
        oracle_gap = std::max(oracle_gap, std::abs(fit.beta[c] - geo.slope[c]));
    j["slope_oracle_gap"] = oracle_gap;

    const SlopeTheoremReport t1 = verify_slope_theorem(space, f.x, f.y, f.z);
    j["slope_theorem"] = t1.as_json();

    bool fixture_pass = t1.pass && oracle_gap <= kIdentityTol;

    if (name == "remark3") {
        // the canonical asymmetric instance: (10) holds, (11) does not
        const RandomMap ex_y = conditional_expectation(space, f.y, {f.x});
        fixture_pass = fixture_pass && mi10.holds && !mi11.holds && max_cov <= kMomentTol &&
                       max_abs_diff_on_support(space, ex_y,
                                               RandomMap::constant(space.size(), 0.0)) <=
                           kMomentTol &&
                       std::abs(expectation(space, f.x) - 1.0 / 3.0) <= kMomentTol;
        const RandomMap ey_x = conditional_expectation(space, f.x, {f.y});
        fixture_pass =
            fixture_pass && max_abs_diff_on_support(space, ey_x, f.x) <= kMomentTol;
        j["conditional_mean_y_given_x"] = ex_y.values();
        j["conditional_mean_x_given_y_equals_x"] =
            max_abs_diff_on_support(space, ey_x, f.x) <= kMomentTol;
    } else if (name == "remark3_z") {
        // fine conditional mean must hit (-1, 0, +1) in fixture line order
        const std::vector<double> expected = {-1.0, 0.0, 1.0};
        double worst = 0.0;
        for (std::size_t i = 0; i < space.size(); ++i)
            worst = std::max(worst, std::abs(fine.value(i) - expected[i]));
        fixture_pass = fixture_pass && worst <= kMomentTol;
        j["fine_mean_max_violation"] = worst;
    } else if (name == "four_point") {
        fixture_pass = fixture_pass && fit.beta.size() == 1 &&
                       std::abs(fit.beta[0] + 2.0) <= kMomentTol &&
                       std::abs(fit.alpha[0] - 3.5) <= kMomentTol;
        const RandomMap g = g_term(space, f.x, f.y, f.z);
        const std::vector<double> expected_g = {-1.0, -1.0, 1.0, 1.0};
        double worst = 0.0;
        for (std::size_t i = 0; i < space.size(); ++i)
            worst = std::max(worst, std::abs(g.value(i) - expected_g[i]));
        fixture_pass = fixture_pass && worst <= kMomentTol;
        j["g_max_violation"] = worst;

        const HDiagnostic h = h_diagnostic(space, f.x, f.z);
        fixture_pass = fixture_pass && std::abs(h.second_moment - 1.0) <= kMomentTol;
        j["h_second_moment"] = h.second_moment;
    }

    j["pass"] = fixture_pass;
    pass = fixture_pass;
    return j;
}

} // namespace

VerifySuiteResult run_verify_suite(const VerifySuiteOptions& opt) {
    VerifySuiteResult result;
    nlohmann::json& report = result.report;
    bool all_pass = true;

    report["options"] = {{"seed", opt.seed},
                         {"randomized_spaces", opt.randomized_spaces},
                         {"max_outcomes", opt.max_outcomes},
                         {"projection_instances", opt.projection_instances}};

    std::vector<std::string> fixture_names =
        opt.fixtures.empty() ? builtin_fixture_names() : opt.fixtures;
    nlohmann::json fixtures = nlohmann::json::object();
    for (const auto& name : fixture_names) {
        bool fpass = false;
        fixtures[name] = fixture_report(name, builtin_fixture(name), fpass);
        all_pass = all_pass && fpass;
    }
    for (const auto& path : opt.fixture_files) {
        bool fpass = false;
        fixtures[path] = fixture_report(path, load_fixture_file(path), fpass);
        all_pass = all_pass && fpass;
    }
    report["fixtures"] = fixtures;

    RandomizedTally tally;
    RandomSpaceConfig general;
    general.max_outcomes = opt.max_outcomes;
    RandomSpaceConfig binary = general;
    binary.binary_x = true;

    int first_failing_space = -1;
    for (int k = 0; k < opt.randomized_spaces; ++k) {
        const std::uint64_t s = mix_seed(opt.seed, static_cast<std::uint64_t>(k));
        const bool ok_before = tally.pass();
        ++tally.spaces;

        Rng rng_a(mix_seed(s, 1));
        const RandomInstance a = sample_instance(rng_a, general);
        check_properties(a, tally);

        Rng rng_b(mix_seed(s, 2));
        const RandomInstance b = sample_instance(rng_b, binary);
        check_properties(b, tally);
        check_binary_extras(b, tally);

        // constructed hypotheses so the conditional clauses actually fire;
        // the mirrored construction exercises the (v)-(vii) direction
        {
            const RandomInstance mi{a.space, a.x, make_mean_independent(a.space, a.y, a.x, a.z),
                                    a.z};
            check_properties(mi, tally);
            const RandomInstance mirror_mi{
                a.space, make_mean_independent(a.space, a.x, a.y, a.z), a.y, a.z};
            check_properties(mirror_mi, tally);
            const RandomInstance zc{b.space, b.x,
                                    make_zero_conditional_cov(b.space, b.y, b.x, b.z), b.z};
            check_properties(zc, tally);
            check_binary_extras(zc, tally);
        }

        Rng rng_c(mix_seed(s, 3));
        check_independence_implications(sample_conditionally_independent_instance(rng_c), tally);

        if (ok_before && !tally.pass() && first_failing_space < 0)
            first_failing_space = k; // per-space seed is mix_seed(options.seed, k)
    }
    nlohmann::json randomized = tally.as_json();
    randomized["first_failing_space"] = first_failing_space;
    report["randomized"] = randomized;
    all_pass = all_pass && (opt.randomized_spaces == 0 || tally.pass());

    bool lemma_pass = true;
    report["partialling"] = partialling_report(opt.seed, opt.projection_instances, lemma_pass);
    all_pass = all_pass && (opt.projection_instances == 0 || lemma_pass);

    report["pass"] = all_pass;
    result.pass = all_pass;
    return result;
}

} // namespace condmom
