#pragma once

// Drives the named counterexample fixtures and the seeded randomized-space
// property suites, folding everything into one JSON report.  The CLI verify
// command is a thin wrapper around run_verify_suite.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "condmom/finite_space.hpp"
#include "condmom/random_space.hpp"

namespace condmom {

struct VerifySuiteOptions {
    std::uint64_t seed = kDefaultSeed;
    int randomized_spaces = 1000;
    int max_outcomes = 12;
    int projection_instances = 1000;
    std::vector<std::string> fixtures;      // empty selects all builtin fixtures
    std::vector<std::string> fixture_files; // extra labeled spaces in fixture format
};

struct VerifySuiteResult {
    bool pass = false;
    nlohmann::json report;
};

VerifySuiteResult run_verify_suite(const VerifySuiteOptions& opt);

// y adjusted so its fine conditional mean given (x, z) collapses to the
// z-conditional mean: y0 - E^{X,Z}(y0) + E^Z(y0).
RandomMap make_mean_independent(const FiniteSpace& space, const RandomMap& y0, const RandomMap& x,
                                const RandomMap& z);

// y adjusted so the conditional covariance with x given z vanishes:
// y0 minus the fitted slope term.
RandomMap make_zero_conditional_cov(const FiniteSpace& space, const RandomMap& y0,
                                    const RandomMap& x, const RandomMap& z);

} // namespace condmom
