#pragma once

// The slope/intercept calculus for conditional means that are affine in one
// covariate: the covariance-ratio slope with its zero-variance indicator, the
// additive regression decomposition, the binary-covariate decomposition, the
// per-cell treatment effect, and the normalized-treatment diagnostic h with
// its unit second-moment bound.

#include <cstddef>
#include <functional>
#include <vector>

#include <json.hpp>

#include "condmom/finite_space.hpp"

namespace condmom {

// Below this, a cell's conditional variance counts as zero and the slope is
// pinned to 0 (the indicator branch).
inline constexpr double kVarEps = 1e-12;

struct AffineFit {
    Partition partition; // z-partition
    std::vector<double> alpha;
    std::vector<double> beta;
    std::vector<double> mean_x;
    std::vector<double> mean_y;
    std::vector<double> var_x;
    std::vector<bool> degenerate;  // var_x <= kVarEps
    std::vector<bool> affine_cell; // alpha + beta*x reproduces the fine conditional mean
    bool x_binary01 = false;       // regressor takes only values {0,1} (a.s.)
    double max_affine_violation = 0.0;

    bool affine_holds() const;
};

struct TreatmentEffect {
    Partition partition;
    std::vector<double> effect;     // = beta per cell
    std::vector<double> propensity; // = E^Z(X) per cell
    std::vector<bool> degenerate;
};

struct HDiagnostic {
    RandomMap h;
    double second_moment;      // E(h^2); <= 1, with equality iff no degenerate cell
    double nondegenerate_mass; // P(propensity strictly inside (0,1))
};

struct BinaryDecomposition {
    std::vector<double> alpha;
    std::vector<double> beta;
};

// (Cov^Z/Var^Z) [Var^Z > 0] (X - E^Z(X)), per outcome; 0 on degenerate cells.
RandomMap g_term(const FiniteSpace& space, const RandomMap& x, const RandomMap& y,
                 const RandomMap& z);

// E^Z(Y) + g_term, per outcome.
RandomMap regression_rhs(const FiniteSpace& space, const RandomMap& x, const RandomMap& y,
                         const RandomMap& z);

AffineFit fit_affine(const FiniteSpace& space, const RandomMap& x, const RandomMap& y,
                     const RandomMap& z);

// Roles of x and y interchanged: alpha/beta read as gamma/delta and var_x is
// the conditional variance of y.
AffineFit fit_affine_mirror(const FiniteSpace& space, const RandomMap& x, const RandomMap& y,
                            const RandomMap& z);

// Rewrites a function of a two-point covariate as intercept + slope * x.
// e(label, cell) is evaluated at both support points b != d for each cell.
BinaryDecomposition binary_decompose(const std::function<double(double, std::size_t)>& e,
                                     double b, double d, std::size_t cell_count);

// Requires a {0,1}-valued regressor in the fit; the propensity map must be
// E^Z(X) on the same partition.
TreatmentEffect treatment_effect(const AffineFit& fit, const RandomMap& propensity);

// h = (X - E^Z(X)) / sqrt(E^Z(X)(1 - E^Z(X))) on cells where both treatment
// arms carry positive probability, else 0.  x must be {0,1}-valued.
HDiagnostic h_diagnostic(const FiniteSpace& space, const RandomMap& x, const RandomMap& z);

// q with 1/p + 1/q = 1, for p in [1, inf].
double conjugate_exponent(double p);

struct ClauseResult {
    bool applicable = false; // the clause's hypothesis holds on this instance
    bool pass = true;        // conclusion verified when applicable
    double max_violation = 0.0;
};

// One instance's worth of evidence for the slope-formula theorem: clause
// conclusions re-derived by independent arithmetic routes, plus the proof-step
// identities that the derivation runs through.
struct SlopeTheoremReport {
    bool mean_independent = false; // fine conditional mean of y collapses to the z-mean
    bool mirror_mean_independent = false; // mirror direction
    bool affine_in_x = false;     // fine conditional mean of y affine in x per cell (LS residual route)
    bool affine_in_y = false;     // mirror
    bool zero_cov = false;      // all cells' conditional covariance ~ 0
    bool x_binary01 = false;
    bool y_binary01 = false;

    ClauseResult forward, formulas, converse; // direct direction
    ClauseResult mirror_forward, mirror_formulas, mirror_converse;  // mirror direction

    double intercept_identity_violation = 0.0;          // meanY - (alpha + beta * meanX)
    double cov_beta_var_violation = 0.0;  // Cov - beta * Var, cells where affine holds
    double degenerate_slope_violation = 0.0;          // |beta| on degenerate cells
    double mirror_intercept_identity_violation = 0.0;
    double mirror_cov_delta_var_violation = 0.0;
    double mirror_degenerate_slope_violation = 0.0;

    bool pass = true;
    nlohmann::json as_json() const;
};

SlopeTheoremReport verify_slope_theorem(const FiniteSpace& space, const RandomMap& x, const RandomMap& y,
                               const RandomMap& z);

} // namespace condmom
