#include "condmom/gaussian_example.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include "condmom/detail/text.hpp"
#include "condmom/errors.hpp"
#include "condmom/random_space.hpp"

namespace condmom {

namespace {

constexpr std::size_t kChunk = 1 << 16;

void require_correlation(double nu) {
    if (!(std::abs(nu) < 1.0))
        throw std::domain_error("correlation must lie strictly inside (-1, 1)");
}

double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double variance_of(const std::vector<double>& v, double mean) {
    double s = 0.0;
    for (double a : v)
        s += (a - mean) * (a - mean);
    return s / static_cast<double>(v.size());
}

double covariance_of(const std::vector<double>& a, const std::vector<double>& b) {
    const double ma = mean_of(a), mb = mean_of(b);
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += (a[i] - ma) * (b[i] - mb);
    return s / static_cast<double>(a.size());
}

double ols_slope(const std::vector<double>& response, const std::vector<double>& regressor) {
    const double mr = mean_of(regressor);
    double sxy = 0.0, sxx = 0.0;
    const double my = mean_of(response);
    for (std::size_t i = 0; i < response.size(); ++i) {
        sxy += (regressor[i] - mr) * (response[i] - my);
        sxx += (regressor[i] - mr) * (regressor[i] - mr);
    }
    return sxy / sxx;
}

} // namespace

double log_phi_density(double u, double v, double nu) {
    require_correlation(nu);
    const double one_minus = 1.0 - nu * nu;
    const double quad = u * u - 2.0 * nu * u * v + v * v;
    return -std::log(2.0 * std::numbers::pi) - 0.5 * std::log(one_minus) -
           quad / (2.0 * one_minus);
}

double phi_density(double u, double v, double nu) {
    return std::exp(log_phi_density(u, v, nu));
}

double f_ratio(double y, double z, double rho) {
    require_correlation(rho);
    // (a - b)/(a + b) = tanh((log a - log b)/2); both densities can underflow
    // in the tails but their log difference stays finite.  tanh rounds to
    // +-1.0 for large arguments; pin the result back into the open interval.
    const double la = log_phi_density(y, z, rho);
    const double lb = log_phi_density(y, z, -rho);
    const double t = std::tanh(0.5 * (la - lb));
    const double cap = std::nextafter(1.0, 0.0);
    return std::clamp(t, -cap, cap);
}

SampleBatch sample_example1(const Example1Config& cfg) {
    require_correlation(cfg.rho);
    if (cfg.n < 1)
        throw std::invalid_argument("sample_example1: n must be >= 1");

    SampleBatch batch;
    batch.config = cfg;
    batch.w.reserve(cfg.n);
    batch.y.reserve(cfg.n);
    batch.z.reserve(cfg.n);
    batch.x.reserve(cfg.n);

    const double tail = std::sqrt(1.0 - cfg.rho * cfg.rho);
    // Chunked streams keyed by (seed, chunk): row i is reproducible without
    // generating rows before it.
    for (std::size_t start = 0; start < cfg.n; start += kChunk) {
        Rng rng(mix_seed(cfg.seed, start / kChunk));
        const std::size_t stop = std::min(cfg.n, start + kChunk);
        for (std::size_t i = start; i < stop; ++i) {
            const double w = rng.rademacher();
            const double n1 = rng.normal();
            const double n2 = rng.normal();
            const double y = n1;
            const double z = (cfg.rho * w) * n1 + tail * n2;
            batch.w.push_back(w);
            batch.y.push_back(y);
            batch.z.push_back(z);
            batch.x.push_back(w * y);
        }
    }
    return batch;
}

namespace {

struct Bin {
    std::vector<std::size_t> idx;
    double center1 = 0.0;
    double center2 = 0.0;
};

std::vector<std::size_t> argsort(const std::vector<double>& key,
                                 const std::vector<std::size_t>& subset) {
    std::vector<std::size_t> order = subset;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return key[a] < key[b]; });
    return order;
}

// Equal-count bins over the central `mass` fraction of `subset`, ordered by key.
std::vector<std::vector<std::size_t>> slice_equal_count(const std::vector<double>& key,
                                                        const std::vector<std::size_t>& subset,
                                                        int bins, double mass) {
    const auto order = argsort(key, subset);
    const std::size_t n = order.size();
    const std::size_t drop = static_cast<std::size_t>(std::floor(n * (1.0 - mass) / 2.0));
    const std::size_t lo = drop, hi = n - drop;
    const std::size_t m = hi - lo;
    std::vector<std::vector<std::size_t>> out;
    out.reserve(static_cast<std::size_t>(bins));
    for (int b = 0; b < bins; ++b) {
        const std::size_t a = lo + m * static_cast<std::size_t>(b) / static_cast<std::size_t>(bins);
        const std::size_t e =
            lo + m * static_cast<std::size_t>(b + 1) / static_cast<std::size_t>(bins);
        if (e > a)
            out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(a),
                             order.begin() + static_cast<std::ptrdiff_t>(e));
    }
    return out;
}

std::vector<std::size_t> all_indices(std::size_t n) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    return idx;
}

std::vector<Bin> bins_1d(const std::vector<double>& key, int bins, double mass) {
    std::vector<Bin> out;
    for (auto& members : slice_equal_count(key, all_indices(key.size()), bins, mass)) {
        Bin b;
        double c = 0.0;
        for (std::size_t i : members)
            c += key[i];
        b.center1 = c / static_cast<double>(members.size());
        b.idx = std::move(members);
        out.push_back(std::move(b));
    }
    return out;
}

// bins x bins cells, trimming each axis to sqrt(mass) so the joint keeps
// roughly the central `mass` fraction.
std::vector<Bin> bins_2d(const std::vector<double>& key1, const std::vector<double>& key2,
                         int bins, double mass) {
    const double axis_mass = std::sqrt(mass);
    std::vector<Bin> out;
    for (auto& slice : slice_equal_count(key1, all_indices(key1.size()), bins, axis_mass)) {
        for (auto& members : slice_equal_count(key2, slice, bins, axis_mass)) {
            Bin b;
            double c1 = 0.0, c2 = 0.0;
            for (std::size_t i : members) {
                c1 += key1[i];
                c2 += key2[i];
            }
            b.center1 = c1 / static_cast<double>(members.size());
            b.center2 = c2 / static_cast<double>(members.size());
            b.idx = std::move(members);
            out.push_back(std::move(b));
        }
    }
    return out;
}

struct BinnedAggregate {
    double rms = 0.0;          // weighted RMS deviation from targets
    double worst_se_ratio = 0.0;
    std::size_t failing_bins = 0; // bins beyond 5 standard errors
    std::size_t total = 0;
};

// Per-bin mean of `col` compared against target(bin); fills rows and returns
// the aggregate deviation statistics.
template <typename TargetFn>
BinnedAggregate binned_mean_check(const std::string& name, const std::vector<Bin>& bins,
                                  const std::vector<double>& col, TargetFn target,
                                  std::vector<BinRow>& rows) {
    BinnedAggregate agg;
    double wsum = 0.0, dev2 = 0.0;
    for (const auto& b : bins) {
        const double n_b = static_cast<double>(b.idx.size());
        double m = 0.0;
        for (std::size_t i : b.idx)
            m += col[i];
        m /= n_b;
        double s2 = 0.0;
        for (std::size_t i : b.idx)
            s2 += (col[i] - m) * (col[i] - m);
        const double se = std::sqrt(s2 / n_b / n_b); // sd/sqrt(n), population sd
        const double tgt = target(b);
        const double dev = m - tgt;
        wsum += n_b;
        dev2 += n_b * dev * dev;
        if (se > 0.0)
            agg.worst_se_ratio = std::max(agg.worst_se_ratio, std::abs(dev) / se);
        const double bin_tol = 5.0 * se;
        if (std::abs(dev) > bin_tol && se > 0.0)
            ++agg.failing_bins;
        rows.push_back(BinRow{name, b.center1, b.center2, b.idx.size(), m, tgt, bin_tol});
        agg.total += b.idx.size();
    }
    agg.rms = std::sqrt(dev2 / wsum);
    return agg;
}

CheckResult make_check(std::string name, double stat, double tol, std::size_t n_used,
                       std::size_t min_n, nlohmann::json detail = nlohmann::json::object()) {
    CheckResult c;
    c.name = std::move(name);
    c.statistic = stat;
    c.tolerance = tol;
    c.n_used = n_used;
    c.detail = std::move(detail);
    c.detail["min_n"] = min_n;
    c.status = n_used < min_n ? "inconclusive" : (std::abs(stat) <= tol ? "pass" : "fail");
    return c;
}

} // namespace

bool Example1Report::all_conclusive_pass() const {
    for (const auto& c : checks)
        if (c.conclusive() && !c.passed())
            return false;
    return true;
}

nlohmann::json Example1Report::as_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& c : checks)
        arr.push_back({{"name", c.name},
                       {"status", c.status},
                       {"statistic", c.statistic},
                       {"tolerance", c.tolerance},
                       {"n_used", c.n_used},
                       {"detail", c.detail}});
    return {{"checks", arr}, {"pass", all_conclusive_pass()}};
}

void Example1Report::write_bins_csv(std::ostream& out) const {
    out << "check,center1,center2,count,estimate,target,tolerance\n";
    for (const auto& r : bin_rows) {
        out << r.check << ',' << detail::render_double(r.center1) << ','
            << detail::render_double(r.center2) << ',' << r.count << ','
            << detail::render_double(r.estimate) << ',' << detail::render_double(r.target) << ','
            << detail::render_double(r.tolerance) << '\n';
    }
}

Example1Report verify_example1(const SampleBatch& batch, const ToleranceSet& tol) {
    const std::size_t n = batch.size();
    const double rho = batch.config.rho;
    Example1Report rep;

    // marginal location/scale of y and z against the standard normal
    for (const auto* col : {&batch.y, &batch.z}) {
        const std::string which = col == &batch.y ? "y" : "z";
        const double m = mean_of(*col);
        const double v = variance_of(*col, m);
        const double mean_tol = std::max(tol.marginal_mean_floor, 4.0 / std::sqrt(double(n)));
        const double var_tol =
            std::max(tol.marginal_var_floor, 4.0 * std::sqrt(2.0 / double(n)));
        rep.checks.push_back(
            make_check("marginal_" + which + "_mean", m, mean_tol, n, tol.min_n_moments));
        rep.checks.push_back(
            make_check("marginal_" + which + "_var", v - 1.0, var_tol, n, tol.min_n_moments));
    }

    // pooled covariance of (y, z): the two mixture components cancel
    rep.checks.push_back(make_check("pooled_cov_yz", covariance_of(batch.y, batch.z),
                                    4.0 / std::sqrt(double(n)), n, tol.min_n_moments));

    // (x, z) should carry the full correlation rho
    {
        const double c = covariance_of(batch.x, batch.z);
        const double vx = variance_of(batch.x, mean_of(batch.x));
        const double vz = variance_of(batch.z, mean_of(batch.z));
        rep.checks.push_back(make_check("xz_correlation", c / std::sqrt(vx * vz) - rho,
                                        tol.xz_correlation, n, tol.min_n_moments));
    }

    // x + y vanishes exactly on half the rows (the w = -1 half)
    {
        std::size_t zeros = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (batch.x[i] + batch.y[i] == 0.0)
                ++zeros;
        const double frac = static_cast<double>(zeros) / static_cast<double>(n);
        const double t = std::max(tol.x_plus_y_fraction, 2.0 / std::sqrt(double(n)));
        rep.checks.push_back(
            make_check("x_plus_y_zero_fraction", frac - 0.5, t, n, tol.min_n_moments));
    }

    // least-squares slope of x on z
    const double slope = ols_slope(batch.x, batch.z);
    rep.checks.push_back(
        make_check("slope_x_on_z", slope - rho, tol.slope_x_on_z, n, tol.min_n_moments));

    const auto zbins = bins_1d(batch.z, tol.bins_1d, tol.central_mass);

    // conditional mean of y given z is identically 0
    {
        auto agg = binned_mean_check("mean_y_given_z", zbins, batch.y,
                                     [](const Bin&) { return 0.0; }, rep.bin_rows);
        rep.checks.push_back(make_check(
            "mean_y_given_z", agg.rms, tol.mean_y_given_z, n, tol.min_n_binned_1d,
            {{"failing_bins", agg.failing_bins}, {"worst_se_ratio", agg.worst_se_ratio}}));
    }

    // conditional mean of x given z is rho * z
    {
        auto agg = binned_mean_check("mean_x_given_z", zbins, batch.x,
                                     [&](const Bin& b) { return rho * b.center1; }, rep.bin_rows);
        rep.checks.push_back(make_check(
            "mean_x_given_z", agg.rms, tol.mean_x_given_z, n, tol.min_n_binned_1d,
            {{"failing_bins", agg.failing_bins}, {"worst_se_ratio", agg.worst_se_ratio}}));
    }

    // conditional covariance of (x, y) given z is identically 0
    {
        double wsum = 0.0, dev2 = 0.0;
        std::size_t failing = 0;
        for (const auto& b : zbins) {
            const double n_b = static_cast<double>(b.idx.size());
            double mx = 0.0, my = 0.0;
            for (std::size_t i : b.idx) {
                mx += batch.x[i];
                my += batch.y[i];
            }
            mx /= n_b;
            my /= n_b;
            double c = 0.0, c2 = 0.0;
            for (std::size_t i : b.idx) {
                const double t = (batch.x[i] - mx) * (batch.y[i] - my);
                c += t;
                c2 += t * t;
            }
            c /= n_b;
            const double se = std::sqrt(std::max(0.0, c2 / n_b - c * c) / n_b);
            wsum += n_b;
            dev2 += n_b * c * c;
            const double bin_tol = 5.0 * se;
            if (std::abs(c) > bin_tol && se > 0.0)
                ++failing;
            rep.bin_rows.push_back(
                BinRow{"cov_xy_given_z", b.center1, 0.0, b.idx.size(), c, 0.0, bin_tol});
        }
        rep.checks.push_back(make_check("cov_xy_given_z", std::sqrt(dev2 / wsum),
                                        tol.cov_xy_given_z, n, tol.min_n_binned_1d,
                                        {{"failing_bins", failing}}));
    }

    // conditional mean of y given (x, z) is identically 0
    {
        const auto xz = bins_2d(batch.x, batch.z, tol.bins_2d, tol.central_mass);
        auto agg = binned_mean_check("mean_y_given_xz", xz, batch.y,
                                     [](const Bin&) { return 0.0; }, rep.bin_rows);
        rep.checks.push_back(make_check(
            "mean_y_given_xz", agg.rms, tol.mean_y_given_xz, n, tol.min_n_binned_2d,
            {{"failing_bins", agg.failing_bins}, {"worst_se_ratio", agg.worst_se_ratio}}));
    }

    // conditional mean of x given (y, z) is y * f(y, z)
    {
        const auto yz = bins_2d(batch.y, batch.z, tol.bins_2d, tol.central_mass);
        auto agg = binned_mean_check(
            "mean_x_given_yz", yz, batch.x,
            [&](const Bin& b) { return b.center1 * f_ratio(b.center1, b.center2, rho); },
            rep.bin_rows);
        rep.checks.push_back(make_check(
            "mean_x_given_yz", agg.rms, tol.mean_x_given_yz, n, tol.min_n_binned_2d,
            {{"failing_bins", agg.failing_bins}, {"worst_se_ratio", agg.worst_se_ratio}}));
    }

    // mirror mean-independence violation: V = mean(x * (y f(y,z) - slope * z))
    // estimates E[(E^{Y,Z}X)^2] - E[(E^Z X)^2] >= 0, zero exactly under the
    // mirror mean independence.  Requires a detectable effect size.
    {
        double v = 0.0, v2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double s =
                batch.x[i] * (batch.y[i] * f_ratio(batch.y[i], batch.z[i], rho) -
                              slope * batch.z[i]);
            v += s;
            v2 += s * s;
        }
        v /= static_cast<double>(n);
        const double se =
            std::sqrt(std::max(0.0, v2 / double(n) - v * v) / static_cast<double>(n));
        const double ratio = se > 0.0 ? v / se : 0.0;

        CheckResult c;
        c.name = "mirror_mean_independence_violation";
        c.statistic = ratio;
        c.tolerance = tol.mirror_violation_se_ratio;
        c.n_used = n;
        c.detail = {{"violation", v},
                    {"standard_error", se},
                    {"min_n", tol.min_n_mirror},
                    {"expected_violation", std::abs(rho) >= tol.mirror_min_abs_rho}};
        if (n < tol.min_n_mirror || (rho != 0.0 && std::abs(rho) < tol.mirror_min_abs_rho))
            c.status = "inconclusive";
        else if (rho == 0.0)
            c.status = ratio < tol.mirror_violation_se_ratio ? "pass" : "fail";
        else
            c.status = ratio > tol.mirror_violation_se_ratio ? "pass" : "fail";
        rep.checks.push_back(std::move(c));
    }

    return rep;
}

void write_batch_csv(const SampleBatch& batch, std::ostream& out) {
    out << "# rho=" << detail::render_double(batch.config.rho) << " seed=" << batch.config.seed
        << '\n';
    out << "w,y,z,x\n";
    for (std::size_t i = 0; i < batch.size(); ++i)
        out << detail::render_double(batch.w[i]) << ',' << detail::render_double(batch.y[i])
            << ',' << detail::render_double(batch.z[i]) << ','
            << detail::render_double(batch.x[i]) << '\n';
}

SampleBatch read_batch_csv(std::istream& in) {
    SampleBatch batch;
    batch.config.rho = std::numeric_limits<double>::quiet_NaN();
    batch.config.seed = 0;

    std::string line;
    int line_no = 0;
    bool saw_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty())
            continue;
        if (line[0] == '#') {
            std::istringstream meta(line.substr(1));
            std::string tok;
            while (meta >> tok) {
                if (tok.rfind("rho=", 0) == 0)
                    detail::parse_double(std::string_view(tok).substr(4), batch.config.rho);
                else if (tok.rfind("seed=", 0) == 0)
                    batch.config.seed = std::stoull(tok.substr(5));
            }
            continue;
        }
        if (!saw_header) {
            if (line != "w,y,z,x")
                throw ParseError("sample csv: expected header 'w,y,z,x'");
            saw_header = true;
            continue;
        }
        double vals[4];
        std::size_t pos = 0;
        for (int f = 0; f < 4; ++f) {
            const std::size_t comma = f < 3 ? line.find(',', pos) : line.size();
            if (comma == std::string::npos)
                throw ParseError("sample csv line " + std::to_string(line_no) +
                                 ": expected 4 fields");
            if (!detail::parse_double(std::string_view(line).substr(pos, comma - pos), vals[f]))
                throw ParseError("sample csv line " + std::to_string(line_no) + ": bad number");
            pos = comma + 1;
        }
        if (vals[0] != 1.0 && vals[0] != -1.0)
            throw ParseError("sample csv line " + std::to_string(line_no) + ": w must be +-1");
        if (vals[3] != vals[0] * vals[1])
            throw ParseError("sample csv line " + std::to_string(line_no) + ": x != w*y");
        batch.w.push_back(vals[0]);
        batch.y.push_back(vals[1]);
        batch.z.push_back(vals[2]);
        batch.x.push_back(vals[3]);
    }
    if (!saw_header)
        throw ParseError("sample csv: missing header");
    batch.config.n = batch.size();
    return batch;
}

} // namespace condmom
