#pragma once

// Plug-in estimation on samples: locally-weighted (Nadaraya-Watson) moments
// in z, the covariance-ratio slope with its degenerate-variance guard, and
// the conditional treatment effect for a {0,1} treatment column.

#include <cstddef>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "condmom/errors.hpp"

namespace condmom {

struct Dataset {
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> z;

    static Dataset from_columns(std::vector<double> x, std::vector<double> y,
                                std::vector<double> z); // validates finiteness, n >= 2
    std::size_t size() const { return x.size(); }
    bool x_binary01() const;
};

struct CsvReadResult {
    Dataset data;
    std::vector<std::string> ignored_columns;
};

// Header must name columns x, y, z (any order); extra columns are ignored and
// reported.  Throws ParseError on malformed input.
CsvReadResult read_xyz_csv(std::istream& in);

enum class KernelType { Gaussian, Epanechnikov };

KernelType kernel_from_name(const std::string& name);

struct KernelSpec {
    KernelType kernel = KernelType::Gaussian;
    double bandwidth = 0.0; // <= 0 requests the rule-of-thumb bandwidth
    bool pooled = false;    // infinite-bandwidth behavior: plain sample moments
};

// 1.06 * min(sd, iqr/1.34) * n^(-1/5), floored at 1e-6 of the data spread.
// Throws std::invalid_argument on zero spread.
double bandwidth_auto(const std::vector<double>& column);

struct LocalMeans {
    std::vector<double> value;
    std::vector<bool> no_support; // no sample within 5 bandwidths of the query
    double bandwidth = 0.0;
};

LocalMeans kernel_conditional_mean(const Dataset& data, const std::vector<double>& target,
                                   const KernelSpec& spec, const std::vector<double>& z_q);

struct LocalCov {
    std::vector<double> cov_xy;
    std::vector<double> var_x;
    std::vector<bool> no_support;
    std::size_t clamp_count = 0; // negative variance estimates clamped to 0
    double bandwidth = 0.0;
};

LocalCov kernel_conditional_cov(const Dataset& data, const KernelSpec& spec,
                                const std::vector<double>& z_q);

struct CateEstimate {
    std::vector<double> z_q;
    std::vector<double> beta;
    std::vector<double> alpha;
    std::vector<double> propensity;
    std::vector<double> var_x;
    std::vector<bool> degenerate;
    std::vector<bool> no_support;
    double bandwidth = 0.0;
    double degenerate_threshold = 0.0;
    std::size_t clamp_count = 0;
    bool heavy_tail_warning = false;  // top 1% of |y| carries over half of sum|y|
    double max_binary_var_gap = 0.0;  // |var_x - p(1-p)|, an algebraic identity

    nlohmann::json diagnostics() const;
};

// Requires x in {0,1}; throws NonBinaryTreatmentError otherwise.
CateEstimate estimate_cate(const Dataset& data, const KernelSpec& spec,
                           const std::vector<double>& z_q);

// Equally spaced query points spanning the central 90% of the z sample.
std::vector<double> default_grid(const std::vector<double>& z, int points = 41);

// Header: z,beta_hat,alpha_hat,propensity_hat,varx_hat,degenerate
void write_cate_csv(const CateEstimate& est, std::ostream& out);

} // namespace condmom
