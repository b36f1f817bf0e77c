#pragma once

// A Rademacher-mixed bivariate Gaussian generator with X = W*Y, together
// with closed-form conditional expectations and a battery of sample checks
// against them.  The construction makes the mean of Y given (X, Z) vanish
// while the mean of X given (Y, Z) genuinely depends on Y whenever the
// mixing correlation is nonzero, so it serves both as a continuous-space
// ground truth for the estimators and as the asymmetry counterexample.

#include <cstddef>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

namespace condmom {

struct Example1Config {
    double rho = 0.5;       // mixing correlation, |rho| < 1
    std::size_t n = 100000; // sample count
    std::uint64_t seed = 20170655;
};

struct SampleBatch {
    std::vector<double> w; // +-1
    std::vector<double> y;
    std::vector<double> z;
    std::vector<double> x; // = w * y, exactly
    Example1Config config;

    std::size_t size() const { return w.size(); }
};

// Standard bivariate normal density with correlation nu; throws
// std::domain_error unless |nu| < 1.
double phi_density(double u, double v, double nu);
double log_phi_density(double u, double v, double nu);

// (phi_rho - phi_{-rho}) / (phi_rho + phi_{-rho}) at (y, z), combined in log
// space so far-tail evaluations stay finite.  Always in (-1, 1).
double f_ratio(double y, double z, double rho);

SampleBatch sample_example1(const Example1Config& cfg);

// Tolerances and minimum sample sizes per check.  Defaults are the desk-scale
// targets at n = 1e6; checks below their min_n report "inconclusive".
struct ToleranceSet {
    double mean_y_given_z = 0.02;    // weighted RMS over central 1D bins
    double mean_y_given_xz = 0.03;   // weighted RMS over central 2D bins
    double slope_x_on_z = 0.01;      // |ls slope - rho|
    double mean_x_given_z = 0.02;    // weighted RMS against rho * center
    double mean_x_given_yz = 0.05;   // weighted RMS against y * f(y, z)
    double cov_xy_given_z = 0.02;    // weighted RMS over central 1D bins
    double marginal_mean_floor = 0.005;
    double marginal_var_floor = 0.01;
    double xz_correlation = 0.01;
    double x_plus_y_fraction = 0.005;
    double mirror_violation_se_ratio = 10.0; // (11)-violation must exceed this many SEs
    double mirror_min_abs_rho = 0.05;        // below this (and nonzero), power is insufficient

    std::size_t min_n_moments = 10000;   // marginals, slope, correlation, sign fraction
    std::size_t min_n_binned_1d = 200000;
    std::size_t min_n_binned_2d = 800000;
    std::size_t min_n_mirror = 100000;

    int bins_1d = 50;
    int bins_2d = 20; // per axis
    double central_mass = 0.90;
};

struct CheckResult {
    std::string name;
    std::string status; // "pass" | "fail" | "inconclusive"
    double statistic = 0.0;
    double tolerance = 0.0;
    std::size_t n_used = 0;
    nlohmann::json detail;

    bool conclusive() const { return status != "inconclusive"; }
    bool passed() const { return status == "pass"; }
};

// One row of plot-ready binned data emitted alongside the report.
struct BinRow {
    std::string check;
    double center1 = 0.0;
    double center2 = 0.0;
    std::size_t count = 0;
    double estimate = 0.0;
    double target = 0.0;
    double tolerance = 0.0;
};

struct Example1Report {
    std::vector<CheckResult> checks;
    std::vector<BinRow> bin_rows;

    bool all_conclusive_pass() const;
    nlohmann::json as_json() const;
    void write_bins_csv(std::ostream& out) const;
};

Example1Report verify_example1(const SampleBatch& batch, const ToleranceSet& tol = {});

// CSV with header "w,y,z,x"; shortest round-trip formatting, so a write/read
// cycle reproduces every value exactly.
void write_batch_csv(const SampleBatch& batch, std::ostream& out);
SampleBatch read_batch_csv(std::istream& in);

} // namespace condmom
