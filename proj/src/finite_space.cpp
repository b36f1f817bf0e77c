#include "condmom/finite_space.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "condmom/detail/text.hpp"

namespace condmom {

namespace {

void require_real(const RandomMap& m, const char* what) {
    if (!m.is_real())
        throw KindError(std::string(what) + ": real-valued map required");
}

void require_same_space(const FiniteSpace& space, const RandomMap& m, const char* what) {
    if (m.size() != space.size())
        throw SpaceMismatchError(std::string(what) + ": map defined on a different space");
}

} // namespace

FiniteSpace::FiniteSpace(std::vector<std::string> ids, std::vector<double> p)
    : outcomes(std::move(ids)), probs(std::move(p)) {
    if (outcomes.size() != probs.size())
        throw std::invalid_argument("FiniteSpace: ids and probabilities differ in length");
    if (outcomes.empty())
        throw std::invalid_argument("FiniteSpace: empty outcome set");
    double total = 0.0;
    for (double q : probs) {
        if (!(q >= 0.0) || !std::isfinite(q))
            throw std::invalid_argument("FiniteSpace: probabilities must be finite and >= 0");
        total += q;
    }
    if (std::abs(total - 1.0) > kMomentTol)
        throw std::invalid_argument("FiniteSpace: probabilities must sum to 1");
    std::unordered_set<std::string> seen;
    for (const auto& id : outcomes)
        if (!seen.insert(id).second)
            throw std::invalid_argument("FiniteSpace: duplicate outcome id '" + id + "'");
}

FiniteSpace FiniteSpace::uniform(std::size_t n) {
    std::vector<std::string> ids;
    ids.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        ids.push_back("w" + std::to_string(i));
    return FiniteSpace(std::move(ids), std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

RandomMap RandomMap::real(std::vector<double> values) {
    return RandomMap(MapKind::Real, std::move(values), {});
}

RandomMap RandomMap::labels(std::vector<std::string> values) {
    return RandomMap(MapKind::Label, {}, std::move(values));
}

RandomMap RandomMap::constant(std::size_t n, double c) {
    return RandomMap(MapKind::Real, std::vector<double>(n, c), {});
}

std::size_t RandomMap::size() const {
    return kind_ == MapKind::Real ? reals_.size() : labels_.size();
}

double RandomMap::value(std::size_t i) const {
    if (kind_ != MapKind::Real)
        throw KindError("RandomMap::value: opaque-label map has no numeric values");
    return reals_[i];
}

const std::vector<double>& RandomMap::values() const {
    if (kind_ != MapKind::Real)
        throw KindError("RandomMap::values: opaque-label map has no numeric values");
    return reals_;
}

const std::string& RandomMap::label(std::size_t i) const {
    if (kind_ != MapKind::Label)
        throw KindError("RandomMap::label: real-valued map has no opaque labels");
    return labels_[i];
}

std::string RandomMap::key(std::size_t i) const {
    return kind_ == MapKind::Real ? detail::render_double(reals_[i]) : labels_[i];
}

double expectation(const FiniteSpace& space, const RandomMap& v) {
    require_real(v, "expectation");
    require_same_space(space, v, "expectation");
    double sum = 0.0;
    for (std::size_t i = 0; i < space.size(); ++i)
        sum += space.probs[i] * v.value(i);
    return sum;
}

Partition condition(const FiniteSpace& space, const std::vector<RandomMap>& given) {
    if (given.empty())
        throw std::invalid_argument("condition: empty conditioning set");
    for (const auto& m : given)
        require_same_space(space, m, "condition");

    const std::size_t n = space.size();
    std::vector<std::string> keys(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::string k;
        for (std::size_t j = 0; j < given.size(); ++j) {
            if (j > 0)
                k += ',';
            k += given[j].key(i);
        }
        keys[i] = std::move(k);
    }

    Partition part;
    part.cell_of_outcome.assign(n, -1);
    std::unordered_map<std::string, std::size_t> index; // key -> provisional cell
    std::vector<std::vector<std::size_t>> cells;
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < n; ++i) {
        auto [it, inserted] = index.try_emplace(keys[i], cells.size());
        if (inserted) {
            cells.emplace_back();
            labels.push_back(keys[i]);
        }
        cells[it->second].push_back(i);
    }

    // Drop zero-probability cells, keeping first-appearance order for the rest.
    for (std::size_t c = 0; c < cells.size(); ++c) {
        double mass = 0.0;
        for (std::size_t i : cells[c])
            mass += space.probs[i];
        if (mass <= 0.0)
            continue;
        const std::size_t id = part.cells.size();
        for (std::size_t i : cells[c])
            part.cell_of_outcome[i] = static_cast<std::ptrdiff_t>(id);
        part.cells.push_back(std::move(cells[c]));
        part.labels.push_back(std::move(labels[c]));
        part.cell_probs.push_back(mass);
    }
    return part;
}

RandomMap conditional_expectation(const FiniteSpace& space, const RandomMap& v,
                                  const Partition& given) {
    require_real(v, "conditional_expectation");
    require_same_space(space, v, "conditional_expectation");
    std::vector<double> out(space.size(), 0.0);
    for (std::size_t c = 0; c < given.cell_count(); ++c) {
        double sum = 0.0;
        for (std::size_t i : given.cells[c])
            sum += space.probs[i] * v.value(i);
        const double mean = sum / given.cell_probs[c];
        for (std::size_t i : given.cells[c])
            out[i] = mean;
    }
    return RandomMap::real(std::move(out));
}

RandomMap conditional_expectation(const FiniteSpace& space, const RandomMap& v,
                                  const std::vector<RandomMap>& given) {
    return conditional_expectation(space, v, condition(space, given));
}

ConditionalPmf conditional_distribution(const FiniteSpace& space, const RandomMap& target,
                                        const std::vector<RandomMap>& given) {
    require_same_space(space, target, "conditional_distribution");
    ConditionalPmf out;
    out.partition = condition(space, given);
    out.pmf.resize(out.partition.cell_count());
    for (std::size_t c = 0; c < out.partition.cell_count(); ++c) {
        const double mass = out.partition.cell_probs[c];
        for (std::size_t i : out.partition.cells[c])
            out.pmf[c][target.key(i)] += space.probs[i] / mass;
    }
    return out;
}

ConditionalMoments conditional_moments(const FiniteSpace& space, const RandomMap& x,
                                       const RandomMap& y, Partition given) {
    require_real(x, "conditional_moments");
    require_real(y, "conditional_moments");
    require_same_space(space, x, "conditional_moments");
    require_same_space(space, y, "conditional_moments");

    ConditionalMoments m;
    m.partition = std::move(given);
    const std::size_t cells = m.partition.cell_count();
    m.mean_y.resize(cells);
    m.mean_x.resize(cells);
    m.cov_xy.resize(cells);
    m.var_x.resize(cells);
    for (std::size_t c = 0; c < cells; ++c) {
        const double mass = m.partition.cell_probs[c];
        double sx = 0.0, sy = 0.0;
        for (std::size_t i : m.partition.cells[c]) {
            sx += space.probs[i] * x.value(i);
            sy += space.probs[i] * y.value(i);
        }
        const double mx = sx / mass, my = sy / mass;
        // centered form of the (co)variance; the moment-difference form is
        // checked against it in tests
        double cxy = 0.0, vx = 0.0;
        for (std::size_t i : m.partition.cells[c]) {
            const double w = space.probs[i] / mass;
            const double dx = x.value(i) - mx;
            cxy += w * dx * (y.value(i) - my);
            vx += w * dx * dx;
        }
        m.mean_x[c] = mx;
        m.mean_y[c] = my;
        m.cov_xy[c] = cxy;
        m.var_x[c] = vx < 0.0 ? 0.0 : vx;
    }
    return m;
}

ConditionalMoments conditional_moments(const FiniteSpace& space, const RandomMap& x,
                                       const RandomMap& y, const std::vector<RandomMap>& given) {
    return conditional_moments(space, x, y, condition(space, given));
}

namespace {

RandomMap spread_cell_values(const FiniteSpace& space, const Partition& part,
                             const std::vector<double>& cell_values) {
    std::vector<double> out(space.size(), 0.0);
    for (std::size_t c = 0; c < part.cell_count(); ++c)
        for (std::size_t i : part.cells[c])
            out[i] = cell_values[c];
    return RandomMap::real(std::move(out));
}

} // namespace

RandomMap conditional_covariance(const FiniteSpace& space, const RandomMap& x,
                                 const RandomMap& y, const Partition& given) {
    auto m = conditional_moments(space, x, y, given);
    return spread_cell_values(space, m.partition, m.cov_xy);
}

RandomMap conditional_covariance(const FiniteSpace& space, const RandomMap& x,
                                 const RandomMap& y, const std::vector<RandomMap>& given) {
    return conditional_covariance(space, x, y, condition(space, given));
}

RandomMap conditional_variance(const FiniteSpace& space, const RandomMap& x,
                               const Partition& given) {
    auto m = conditional_moments(space, x, x, given);
    return spread_cell_values(space, m.partition, m.var_x);
}

RandomMap conditional_variance(const FiniteSpace& space, const RandomMap& x,
                               const std::vector<RandomMap>& given) {
    return conditional_variance(space, x, condition(space, given));
}

IndependenceCheck check_conditional_independence(const FiniteSpace& space, const RandomMap& x,
                                                 const RandomMap& y, const RandomMap& z) {
    require_same_space(space, x, "check_conditional_independence");
    require_same_space(space, y, "check_conditional_independence");
    require_same_space(space, z, "check_conditional_independence");

    const Partition part = condition(space, {z});
    double worst = 0.0;
    for (std::size_t c = 0; c < part.cell_count(); ++c) {
        const double mass = part.cell_probs[c];
        std::map<std::string, double> px, py;
        std::map<std::pair<std::string, std::string>, double> pxy;
        for (std::size_t i : part.cells[c]) {
            const double w = space.probs[i] / mass;
            px[x.key(i)] += w;
            py[y.key(i)] += w;
            pxy[{x.key(i), y.key(i)}] += w;
        }
        for (const auto& [a, pa] : px)
            for (const auto& [b, pb] : py) {
                double joint = 0.0;
                if (auto it = pxy.find({a, b}); it != pxy.end())
                    joint = it->second;
                worst = std::max(worst, std::abs(joint - pa * pb));
            }
    }
    return {worst <= kMomentTol, worst};
}

MeanIndependenceCheck check_mean_independence(const FiniteSpace& space, const RandomMap& y,
                                              const RandomMap& x, const RandomMap& z) {
    const RandomMap fine = conditional_expectation(space, y, {x, z});
    const RandomMap coarse = conditional_expectation(space, y, {z});
    double worst = 0.0;
    for (std::size_t i = 0; i < space.size(); ++i)
        if (space.probs[i] > 0.0)
            worst = std::max(worst, std::abs(fine.value(i) - coarse.value(i)));
    return {worst <= kMomentTol, worst};
}

namespace {

// Max difference between the fine-conditioned pmf of `target` and the
// z-conditioned pmf, compared outcome-wise on positive-probability outcomes.
double pmf_refinement_violation(const FiniteSpace& space, const RandomMap& target,
                                const std::vector<RandomMap>& fine, const RandomMap& z) {
    const ConditionalPmf pf = conditional_distribution(space, target, fine);
    const ConditionalPmf pz = conditional_distribution(space, target, {z});

    std::set<std::string> universe;
    for (std::size_t i = 0; i < space.size(); ++i)
        universe.insert(target.key(i));

    double worst = 0.0;
    for (std::size_t i = 0; i < space.size(); ++i) {
        if (space.probs[i] <= 0.0)
            continue;
        const auto cf = pf.partition.cell_of_outcome[i];
        const auto cz = pz.partition.cell_of_outcome[i];
        for (const auto& k : universe) {
            double a = 0.0, b = 0.0;
            if (auto it = pf.pmf[cf].find(k); it != pf.pmf[cf].end())
                a = it->second;
            if (auto it = pz.pmf[cz].find(k); it != pz.pmf[cz].end())
                b = it->second;
            worst = std::max(worst, std::abs(a - b));
        }
    }
    return worst;
}

} // namespace

EquivalenceReport check_independence_equivalence(const FiniteSpace& space, const RandomMap& x,
                                    const RandomMap& y, const RandomMap& z) {
    EquivalenceReport r;
    const auto ind = check_conditional_independence(space, x, y, z);
    r.stmt1 = ind.independent;
    r.viol1 = ind.max_violation;
    r.viol2 = pmf_refinement_violation(space, y, {x, z}, z);
    r.stmt2 = r.viol2 <= kMomentTol;
    r.viol3 = pmf_refinement_violation(space, x, {y, z}, z);
    r.stmt3 = r.viol3 <= kMomentTol;
    return r;
}

double averaging_violation(const FiniteSpace& space, const RandomMap& v,
                           const std::vector<RandomMap>& given) {
    const Partition part = condition(space, given);
    const RandomMap ce = conditional_expectation(space, v, part);
    double worst = 0.0;
    for (std::size_t c = 0; c < part.cell_count(); ++c) {
        double lhs = 0.0, rhs = 0.0;
        for (std::size_t i : part.cells[c]) {
            lhs += space.probs[i] * ce.value(i);
            rhs += space.probs[i] * v.value(i);
        }
        worst = std::max(worst, std::abs(lhs - rhs));
    }
    return worst;
}

} // namespace condmom
