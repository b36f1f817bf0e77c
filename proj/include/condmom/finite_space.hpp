#pragma once

// Exact conditional-moment engine on finite discrete probability spaces.
//
// Conditioning on a tuple of maps is realized literally: outcomes are grouped
// into cells on which all conditioning maps agree, and conditional quantities
// are probability-weighted averages per cell.  Everything here is meant to be
// cheap and exact enough (|Omega| is small) to serve as the brute-force oracle
// for the rest of the library.

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "condmom/errors.hpp"

namespace condmom {

// Absolute tolerance for arithmetic identities on finite spaces.  Partition
// keys use exact label equality, so only rounding noise accrues.
inline constexpr double kMomentTol = 1e-12;

struct FiniteSpace {
    std::vector<std::string> outcomes; // distinct identifiers
    std::vector<double> probs;         // >= 0, summing to 1 within kMomentTol

    FiniteSpace(std::vector<std::string> ids, std::vector<double> p);

    // n equiprobable outcomes named w0..w{n-1}.
    static FiniteSpace uniform(std::size_t n);

    std::size_t size() const { return outcomes.size(); }
};

enum class MapKind { Real, Label };

// A labeling of outcomes.  Real-valued maps admit arithmetic; opaque-label
// maps admit only equality, which is all conditioning ever needs.
class RandomMap {
  public:
    static RandomMap real(std::vector<double> values);
    static RandomMap labels(std::vector<std::string> values);
    static RandomMap constant(std::size_t n, double c);

    MapKind kind() const { return kind_; }
    bool is_real() const { return kind_ == MapKind::Real; }
    std::size_t size() const;

    double value(std::size_t i) const; // KindError on label maps
    const std::vector<double>& values() const;
    const std::string& label(std::size_t i) const; // KindError on real maps

    // Canonical key used for cell grouping and pmf indexing.  Real values
    // compare by exact double equality (shortest round-trip rendering,
    // with -0 normalized to 0); labels compare as strings.
    std::string key(std::size_t i) const;

  private:
    RandomMap(MapKind k, std::vector<double> r, std::vector<std::string> l)
        : kind_(k), reals_(std::move(r)), labels_(std::move(l)) {}

    MapKind kind_;
    std::vector<double> reals_;
    std::vector<std::string> labels_;
};

// Cells of positive probability; zero-probability cells are dropped so that
// conditional quantities are only ever defined where "almost surely" allows.
struct Partition {
    std::vector<std::vector<std::size_t>> cells; // outcome indices, by first appearance
    std::vector<std::string> labels;             // conditioning-value tuple per cell
    std::vector<double> cell_probs;
    std::vector<std::ptrdiff_t> cell_of_outcome; // -1 for outcomes in dropped cells

    std::size_t cell_count() const { return cells.size(); }
};

struct ConditionalMoments {
    Partition partition;
    std::vector<double> mean_y;
    std::vector<double> mean_x;
    std::vector<double> cov_xy;
    std::vector<double> var_x;
};

// Per-cell pmf over the target's labels.
struct ConditionalPmf {
    Partition partition;
    std::vector<std::map<std::string, double>> pmf;
};

struct IndependenceCheck {
    bool independent = false;
    double max_violation = 0.0;
};

struct MeanIndependenceCheck {
    bool holds = false;
    double max_violation = 0.0;
};

// Statements (1)-(3) of the conditional-independence characterization,
// each evaluated by an independent route.
struct EquivalenceReport {
    bool stmt1 = false, stmt2 = false, stmt3 = false;
    double viol1 = 0.0, viol2 = 0.0, viol3 = 0.0;
    bool agree() const { return stmt1 == stmt2 && stmt2 == stmt3; }
};

double expectation(const FiniteSpace& space, const RandomMap& v);

Partition condition(const FiniteSpace& space, const std::vector<RandomMap>& given);

// Constant on each cell; value 0 on outcomes of dropped (null) cells.
RandomMap conditional_expectation(const FiniteSpace& space, const RandomMap& v,
                                  const Partition& given);
RandomMap conditional_expectation(const FiniteSpace& space, const RandomMap& v,
                                  const std::vector<RandomMap>& given);

ConditionalPmf conditional_distribution(const FiniteSpace& space, const RandomMap& target,
                                        const std::vector<RandomMap>& given);

RandomMap conditional_covariance(const FiniteSpace& space, const RandomMap& x,
                                 const RandomMap& y, const Partition& given);
RandomMap conditional_covariance(const FiniteSpace& space, const RandomMap& x,
                                 const RandomMap& y, const std::vector<RandomMap>& given);

RandomMap conditional_variance(const FiniteSpace& space, const RandomMap& x,
                               const Partition& given);
RandomMap conditional_variance(const FiniteSpace& space, const RandomMap& x,
                               const std::vector<RandomMap>& given);

ConditionalMoments conditional_moments(const FiniteSpace& space, const RandomMap& x,
                                       const RandomMap& y, const std::vector<RandomMap>& given);
ConditionalMoments conditional_moments(const FiniteSpace& space, const RandomMap& x,
                                       const RandomMap& y, Partition given);

IndependenceCheck check_conditional_independence(const FiniteSpace& space, const RandomMap& x,
                                                 const RandomMap& y, const RandomMap& z);

// Whether E^{x,z}(y) == E^z(y) outcome-wise on positive-probability outcomes.
MeanIndependenceCheck check_mean_independence(const FiniteSpace& space, const RandomMap& y,
                                              const RandomMap& x, const RandomMap& z);

EquivalenceReport check_independence_equivalence(const FiniteSpace& space, const RandomMap& x,
                                    const RandomMap& y, const RandomMap& z);

// Largest |E(E^G(v)[C]) - E(v[C])| over cells C: the averaging property.
double averaging_violation(const FiniteSpace& space, const RandomMap& v,
                           const std::vector<RandomMap>& given);

} // namespace condmom
