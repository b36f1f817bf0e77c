#include "condmom/random_space.hpp"

#include <cmath>
#include <numbers>

namespace condmom {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double Rng::uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double a, double b) {
    return a + (b - a) * uniform();
}

std::uint64_t Rng::below(std::uint64_t n) {
    return gen_() % n; // modulo bias is irrelevant at these alphabet sizes
}

double Rng::normal() {
    if (has_cached_normal_) {
        has_cached_normal_ = false;
        return cached_normal_;
    }
    double u1 = uniform();
    while (u1 <= 0.0)
        u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * std::numbers::pi * u2;
    cached_normal_ = r * std::sin(t);
    has_cached_normal_ = true;
    return r * std::cos(t);
}

double Rng::rademacher() {
    return (gen_() & 1) ? 1.0 : -1.0;
}

double Rng::exponential() {
    double u = uniform();
    while (u <= 0.0)
        u = uniform();
    return -std::log(u);
}

FiniteSpace sample_finite_space(Rng& rng, const RandomSpaceConfig& cfg) {
    const int n = cfg.min_outcomes +
                  static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.max_outcomes -
                                                                        cfg.min_outcomes + 1)));
    std::vector<double> probs(static_cast<std::size_t>(n));
    for (auto& p : probs)
        p = rng.exponential();
    if (n > 2 && rng.uniform() < cfg.zero_prob_rate)
        probs[rng.below(static_cast<std::uint64_t>(n))] = 0.0;
    double total = 0.0;
    for (double p : probs)
        total += p;
    for (auto& p : probs)
        p /= total;

    std::vector<std::string> ids;
    ids.reserve(probs.size());
    for (int i = 0; i < n; ++i)
        ids.push_back("w" + std::to_string(i));
    return FiniteSpace(std::move(ids), std::move(probs));
}

RandomMap sample_real_map(Rng& rng, std::size_t n, bool binary01) {
    std::vector<double> vals(n);
    if (binary01) {
        for (auto& v : vals)
            v = static_cast<double>(rng.below(2));
    } else {
        static constexpr double alphabet[] = {-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0};
        for (auto& v : vals)
            v = alphabet[rng.below(std::size(alphabet))];
    }
    return RandomMap::real(std::move(vals));
}

RandomMap sample_label_map(Rng& rng, std::size_t n, int alphabet_max) {
    static const std::string alphabet[] = {"a", "b", "c", "d"};
    const std::uint64_t k = 1 + rng.below(static_cast<std::uint64_t>(alphabet_max));
    std::vector<std::string> vals(n);
    for (auto& v : vals)
        v = alphabet[rng.below(k)];
    return RandomMap::labels(std::move(vals));
}

RandomInstance sample_instance(Rng& rng, const RandomSpaceConfig& cfg) {
    FiniteSpace space = sample_finite_space(rng, cfg);
    const std::size_t n = space.size();
    RandomMap x = sample_real_map(rng, n, cfg.binary_x);
    RandomMap y = sample_real_map(rng, n, false);
    RandomMap z = sample_label_map(rng, n, cfg.z_alphabet_max);
    return RandomInstance{std::move(space), std::move(x), std::move(y), std::move(z)};
}

RandomInstance sample_conditionally_independent_instance(Rng& rng) {
    static const std::string zalpha[] = {"a", "b", "c"};
    static constexpr double xalpha[] = {0.0, 1.0};
    static constexpr double yalpha[] = {-1.0, 0.0, 2.0};

    const std::uint64_t nz = 1 + rng.below(3);
    std::vector<double> zmass(nz);
    double ztot = 0.0;
    for (auto& m : zmass)
        ztot += (m = rng.exponential());

    std::vector<std::string> ids;
    std::vector<double> probs, xs, ys;
    std::vector<std::string> zs;
    for (std::uint64_t zi = 0; zi < nz; ++zi) {
        // per-cell marginals for x and y, then the product measure
        double px[2], py[3], sx = 0.0, sy = 0.0;
        for (auto& p : px)
            sx += (p = rng.exponential());
        for (auto& p : py)
            sy += (p = rng.exponential());
        for (int xi = 0; xi < 2; ++xi)
            for (int yi = 0; yi < 3; ++yi) {
                ids.push_back("w" + std::to_string(ids.size()));
                probs.push_back((zmass[zi] / ztot) * (px[xi] / sx) * (py[yi] / sy));
                xs.push_back(xalpha[xi]);
                ys.push_back(yalpha[yi]);
                zs.push_back(zalpha[zi]);
            }
    }
    // renormalize away rounding drift
    double total = 0.0;
    for (double p : probs)
        total += p;
    for (auto& p : probs)
        p /= total;
    return RandomInstance{FiniteSpace(std::move(ids), std::move(probs)),
                          RandomMap::real(std::move(xs)), RandomMap::real(std::move(ys)),
                          RandomMap::labels(std::move(zs))};
}

} // namespace condmom
