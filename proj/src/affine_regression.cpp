#include "condmom/affine_regression.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace condmom {

namespace {

constexpr double kCheckTol = 1e-10;

bool is_binary01(const FiniteSpace& space, const RandomMap& v) {
    if (!v.is_real())
        return false;
    for (std::size_t i = 0; i < space.size(); ++i) {
        if (space.probs[i] <= 0.0)
            continue;
        const double val = v.value(i);
        if (val != 0.0 && val != 1.0)
            return false;
    }
    return true;
}

} // namespace

bool AffineFit::affine_holds() const {
    return std::all_of(affine_cell.begin(), affine_cell.end(), [](bool b) { return b; });
}

RandomMap g_term(const FiniteSpace& space, const RandomMap& x, const RandomMap& y,
                 const RandomMap& z) {
    const auto m = conditional_moments(space, x, y, {z});
    std::vector<double> out(space.size(), 0.0);
    for (std::size_t c = 0; c < m.partition.cell_count(); ++c) {
        if (m.var_x[c] <= kVarEps)
            continue;
        const double ratio = m.cov_xy[c] / m.var_x[c];
        for (std::size_t i : m.partition.cells[c])
            out[i] = ratio * (x.value(i) - m.mean_x[c]);
    }
    return RandomMap::real(std::move(out));
}

RandomMap regression_rhs(const FiniteSpace& space, const RandomMap& x, const RandomMap& y,
                         const RandomMap& z) {
    const RandomMap ez_y = conditional_expectation(space, y, {z});
    const RandomMap g = g_term(space, x, y, z);
    std::vector<double> out(space.size());
    for (std::size_t i = 0; i < space.size(); ++i)
        out[i] = ez_y.value(i) + g.value(i);
    return RandomMap::real(std::move(out));
}

AffineFit fit_affine(const FiniteSpace& space, const RandomMap& x, const RandomMap& y,
                     const RandomMap& z) {
    auto m = conditional_moments(space, x, y, {z});
    const std::size_t cells = m.partition.cell_count();

    AffineFit fit{std::move(m.partition), {}, {}, std::move(m.mean_x), std::move(m.mean_y),
                  std::move(m.var_x),     {}, {}};
    fit.alpha.resize(cells);
    fit.beta.resize(cells);
    fit.degenerate.resize(cells);
    fit.affine_cell.resize(cells);
    fit.x_binary01 = is_binary01(space, x);

    const RandomMap exz_y = conditional_expectation(space, y, {x, z});
    for (std::size_t c = 0; c < cells; ++c) {
        const bool degen = fit.var_x[c] <= kVarEps;
        fit.degenerate[c] = degen;
        fit.beta[c] = degen ? 0.0 : m.cov_xy[c] / fit.var_x[c];
        fit.alpha[c] = fit.mean_y[c] - fit.beta[c] * fit.mean_x[c];

        double viol = 0.0;
        for (std::size_t i : fit.partition.cells[c]) {
            if (space.probs[i] <= 0.0)
                continue;
            viol = std::max(viol,
                            std::abs(fit.alpha[c] + fit.beta[c] * x.value(i) - exz_y.value(i)));
        }
        fit.affine_cell[c] = viol <= kCheckTol;
        fit.max_affine_violation = std::max(fit.max_affine_violation, viol);
    }
    return fit;
}

AffineFit fit_affine_mirror(const FiniteSpace& space, const RandomMap& x, const RandomMap& y,
                            const RandomMap& z) {
    return fit_affine(space, y, x, z);
}

BinaryDecomposition binary_decompose(const std::function<double(double, std::size_t)>& e,
                                     double b, double d, std::size_t cell_count) {
    if (b == d)
        throw DegenerateSupportError("binary_decompose: support points coincide");
    BinaryDecomposition out;
    out.alpha.resize(cell_count);
    out.beta.resize(cell_count);
    for (std::size_t c = 0; c < cell_count; ++c) {
        const double eb = e(b, c), ed = e(d, c);
        out.alpha[c] = (d * eb - b * ed) / (d - b);
        out.beta[c] = (ed - eb) / (d - b);
    }
    return out;
}

TreatmentEffect treatment_effect(const AffineFit& fit, const RandomMap& propensity) {
    if (!fit.x_binary01)
        throw NonBinaryTreatmentError("treatment_effect: regressor is not {0,1}-valued");
    TreatmentEffect te{fit.partition, fit.beta, {}, fit.degenerate};
    te.propensity.resize(fit.partition.cell_count());
    for (std::size_t c = 0; c < fit.partition.cell_count(); ++c)
        te.propensity[c] = propensity.value(fit.partition.cells[c].front());
    return te;
}

HDiagnostic h_diagnostic(const FiniteSpace& space, const RandomMap& x, const RandomMap& z) {
    if (!is_binary01(space, x))
        throw NonBinaryTreatmentError("h_diagnostic: x is not {0,1}-valued");
    const Partition part = condition(space, {z});
    std::vector<double> h(space.size(), 0.0);
    double nondeg_mass = 0.0;
    for (std::size_t c = 0; c < part.cell_count(); ++c) {
        // Degeneracy is structural: does the cell carry both treatment arms
        // with positive probability?  (A variance threshold would misread
        // cells holding a tiny-probability arm.)
        double p = 0.0;
        bool has_zero = false, has_one = false;
        for (std::size_t i : part.cells[c]) {
            if (space.probs[i] <= 0.0)
                continue;
            const double w = space.probs[i] / part.cell_probs[c];
            if (x.value(i) == 1.0) {
                p += w;
                has_one = true;
            } else {
                has_zero = true;
            }
        }
        if (!(has_zero && has_one))
            continue;
        nondeg_mass += part.cell_probs[c];
        const double scale = std::sqrt(p * (1.0 - p));
        for (std::size_t i : part.cells[c])
            h[i] = (x.value(i) - p) / scale;
    }
    const RandomMap hmap = RandomMap::real(std::move(h));
    double second = 0.0;
    for (std::size_t i = 0; i < space.size(); ++i)
        second += space.probs[i] * hmap.value(i) * hmap.value(i);
    return HDiagnostic{hmap, second, nondeg_mass};
}

double conjugate_exponent(double p) {
    if (std::isinf(p))
        return 1.0;
    if (!(p >= 1.0))
        throw std::invalid_argument("conjugate_exponent: p must lie in [1, inf]");
    if (p == 1.0)
        return std::numeric_limits<double>::infinity();
    return p / (p - 1.0);
}

namespace {

// Independent route for "the fine conditional mean is affine in x per cell":
// weighted least squares of the conditional-mean values against x inside each
// cell, then the residual.  Returns the max residual over cells.
double affine_ls_residual(const FiniteSpace& space, const RandomMap& x, const RandomMap& exz_y,
                          const Partition& zpart) {
    double worst = 0.0;
    for (std::size_t c = 0; c < zpart.cell_count(); ++c) {
        double s0 = 0.0, s1 = 0.0, s2 = 0.0, t0 = 0.0, t1 = 0.0;
        for (std::size_t i : zpart.cells[c]) {
            const double w = space.probs[i] / zpart.cell_probs[c];
            const double xv = x.value(i), ev = exz_y.value(i);
            s0 += w;
            s1 += w * xv;
            s2 += w * xv * xv;
            t0 += w * ev;
            t1 += w * xv * ev;
        }
        const double det = s0 * s2 - s1 * s1; // = Var^Z(x) up to the s0 factor
        double a, b;
        if (det <= kVarEps * std::max(1.0, s2)) {
            b = 0.0;
            a = t0 / s0;
        } else {
            b = (s0 * t1 - s1 * t0) / det;
            a = (t0 - b * s1) / s0;
        }
        for (std::size_t i : zpart.cells[c]) {
            if (space.probs[i] <= 0.0)
                continue;
            worst = std::max(worst, std::abs(a + b * x.value(i) - exz_y.value(i)));
        }
    }
    return worst;
}

struct DirectionChecks {
    bool mean_indep = false;
    bool affine = false;
    ClauseResult forward;  // mean independence => zero covariance + degenerate affine form
    ClauseResult formulas; // affine form => closed-form intercept/slope
    ClauseResult converse; // affine form + zero covariance => mean independence
    double intercept_id = 0.0;
    double cov_beta_var = 0.0;
    double degenerate_slope = 0.0;
};

DirectionChecks check_direction(const FiniteSpace& space, const RandomMap& reg,
                                const RandomMap& resp, const RandomMap& z, bool zero_cov,
                                double max_cov) {
    DirectionChecks out;
    const AffineFit fit = fit_affine(space, reg, resp, z);
    const auto mi = check_mean_independence(space, resp, reg, z);
    out.mean_indep = mi.holds;

    const RandomMap fine = conditional_expectation(space, resp, {reg, z});
    out.affine = affine_ls_residual(space, reg, fine, fit.partition) <= kCheckTol;

    // forward clause: conclusions are zero covariance and the degenerate
    // affine form, witnessed by slope 0 / intercept E^Z(resp)
    out.forward.applicable = out.mean_indep;
    if (out.forward.applicable) {
        out.forward.max_violation = std::max(max_cov, mi.max_violation);
        out.forward.pass = out.forward.max_violation <= kCheckTol;
    }

    // formula clause: the moment-ratio coefficients reproduce the fine mean
    out.formulas.applicable = out.affine;
    if (out.formulas.applicable) {
        out.formulas.max_violation = fit.max_affine_violation;
        out.formulas.pass = fit.max_affine_violation <= kCheckTol;
    }

    // converse clause
    out.converse.applicable = out.affine && zero_cov;
    if (out.converse.applicable) {
        out.converse.max_violation = mi.max_violation;
        out.converse.pass = mi.holds;
    }

    // proof-step identities
    const auto m = conditional_moments(space, reg, resp, {z});
    for (std::size_t c = 0; c < fit.partition.cell_count(); ++c) {
        out.intercept_id = std::max(out.intercept_id, std::abs(fit.mean_y[c] - fit.alpha[c] -
                                               fit.beta[c] * fit.mean_x[c]));
        if (out.affine)
            out.cov_beta_var =
                std::max(out.cov_beta_var, std::abs(m.cov_xy[c] - fit.beta[c] * m.var_x[c]));
        if (fit.degenerate[c])
            out.degenerate_slope = std::max(out.degenerate_slope, std::abs(fit.beta[c]));
    }
    return out;
}

} // namespace

SlopeTheoremReport verify_slope_theorem(const FiniteSpace& space, const RandomMap& x, const RandomMap& y,
                               const RandomMap& z) {
    SlopeTheoremReport r;
    r.x_binary01 = is_binary01(space, x);
    r.y_binary01 = is_binary01(space, y);

    const auto m = conditional_moments(space, x, y, {z});
    double max_cov = 0.0;
    for (double c : m.cov_xy)
        max_cov = std::max(max_cov, std::abs(c));
    r.zero_cov = max_cov <= kCheckTol;

    const auto fwd = check_direction(space, x, y, z, r.zero_cov, max_cov);
    r.mean_independent = fwd.mean_indep;
    r.affine_in_x = fwd.affine;
    r.forward = fwd.forward;
    r.formulas = fwd.formulas;
    r.converse = fwd.converse;
    r.intercept_identity_violation = fwd.intercept_id;
    r.cov_beta_var_violation = fwd.cov_beta_var;
    r.degenerate_slope_violation = fwd.degenerate_slope;

    const auto mir = check_direction(space, y, x, z, r.zero_cov, max_cov);
    r.mirror_mean_independent = mir.mean_indep;
    r.affine_in_y = mir.affine;
    r.mirror_forward = mir.forward;
    r.mirror_formulas = mir.formulas;
    r.mirror_converse = mir.converse;
    r.mirror_intercept_identity_violation = mir.intercept_id;
    r.mirror_cov_delta_var_violation = mir.cov_beta_var;
    r.mirror_degenerate_slope_violation = mir.degenerate_slope;

    const double worst_identity =
        std::max({r.intercept_identity_violation, r.cov_beta_var_violation, r.degenerate_slope_violation,
                  r.mirror_intercept_identity_violation, r.mirror_cov_delta_var_violation,
                  r.mirror_degenerate_slope_violation});
    r.pass = r.forward.pass && r.formulas.pass && r.converse.pass && r.mirror_forward.pass &&
             r.mirror_formulas.pass && r.mirror_converse.pass && worst_identity <= kCheckTol;
    return r;
}

namespace {

nlohmann::json clause_json(const ClauseResult& c) {
    return {{"applicable", c.applicable}, {"pass", c.pass}, {"max_violation", c.max_violation}};
}

} // namespace

nlohmann::json SlopeTheoremReport::as_json() const {
    return {
        {"hypotheses",
         {{"y_mean_independent_of_x", mean_independent},
          {"x_mean_independent_of_y", mirror_mean_independent},
          {"affine_in_x", affine_in_x},
          {"affine_in_y", affine_in_y},
          {"zero_conditional_covariance", zero_cov},
          {"x_binary01", x_binary01},
          {"y_binary01", y_binary01}}},
        {"clauses",
         {{"forward", clause_json(forward)},
          {"coefficient_formulas", clause_json(formulas)},
          {"converse", clause_json(converse)},
          {"mirror_forward", clause_json(mirror_forward)},
          {"mirror_coefficient_formulas", clause_json(mirror_formulas)},
          {"mirror_converse", clause_json(mirror_converse)}}},
        {"identities",
         {{"intercept_identity", intercept_identity_violation},
          {"cov_equals_beta_var", cov_beta_var_violation},
          {"beta_zero_on_degenerate", degenerate_slope_violation},
          {"mirror_intercept_identity", mirror_intercept_identity_violation},
          {"mirror_cov_equals_delta_var", mirror_cov_delta_var_violation},
          {"mirror_delta_zero_on_degenerate", mirror_degenerate_slope_violation}}},
        {"pass", pass},
    };
}

} // namespace condmom
