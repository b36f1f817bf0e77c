#include "condmom/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "condmom/detail/text.hpp"

namespace condmom {

namespace {

double kernel_weight(KernelType k, double t) {
    switch (k) {
    case KernelType::Gaussian:
        return std::exp(-0.5 * t * t);
    case KernelType::Epanechnikov:
        return std::abs(t) < 1.0 ? 1.0 - t * t : 0.0;
    }
    return 0.0;
}

// Support radius (in bandwidths) beyond which a query point is flagged.
double support_radius(KernelType k) {
    return k == KernelType::Gaussian ? 5.0 : 1.0;
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

double resolve_bandwidth(const Dataset& data, const KernelSpec& spec) {
    return spec.bandwidth > 0.0 ? spec.bandwidth : bandwidth_auto(data.z);
}

} // namespace

Dataset Dataset::from_columns(std::vector<double> x, std::vector<double> y,
                              std::vector<double> z) {
    if (x.size() != y.size() || x.size() != z.size())
        throw std::invalid_argument("Dataset: column lengths differ");
    if (x.size() < 2)
        throw std::invalid_argument("Dataset: need at least 2 rows");
    for (std::size_t i = 0; i < x.size(); ++i)
        if (!std::isfinite(x[i]) || !std::isfinite(y[i]) || !std::isfinite(z[i]))
            throw std::invalid_argument("Dataset: non-finite value at row " + std::to_string(i));
    Dataset d;
    d.x = std::move(x);
    d.y = std::move(y);
    d.z = std::move(z);
    return d;
}

bool Dataset::x_binary01() const {
    return std::all_of(x.begin(), x.end(), [](double v) { return v == 0.0 || v == 1.0; });
}

CsvReadResult read_xyz_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line))
        throw ParseError("csv: empty input");
    if (!line.empty() && line.back() == '\r')
        line.pop_back();

    std::vector<std::string> names;
    {
        std::istringstream hdr(line);
        std::string field;
        while (std::getline(hdr, field, ','))
            names.push_back(field);
    }
    std::ptrdiff_t ix = -1, iy = -1, iz = -1;
    std::vector<std::string> ignored;
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == "x")
            ix = static_cast<std::ptrdiff_t>(i);
        else if (names[i] == "y")
            iy = static_cast<std::ptrdiff_t>(i);
        else if (names[i] == "z")
            iz = static_cast<std::ptrdiff_t>(i);
        else
            ignored.push_back(names[i]);
    }
    if (ix < 0 || iy < 0 || iz < 0)
        throw ParseError("csv: header must contain columns x, y, z");

    std::vector<double> xs, ys, zs;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        std::vector<double> fields;
        std::size_t pos = 0;
        while (true) {
            const std::size_t comma = line.find(',', pos);
            const std::string_view tok =
                std::string_view(line).substr(pos, comma == std::string::npos ? std::string::npos
                                                                              : comma - pos);
            double v = 0.0;
            if (!detail::parse_double(tok, v) || !std::isfinite(v))
                throw ParseError("csv line " + std::to_string(line_no) + ": bad number '" +
                                 std::string(tok) + "'");
            fields.push_back(v);
            if (comma == std::string::npos)
                break;
            pos = comma + 1;
        }
        if (fields.size() != names.size())
            throw ParseError("csv line " + std::to_string(line_no) + ": expected " +
                             std::to_string(names.size()) + " fields");
        xs.push_back(fields[static_cast<std::size_t>(ix)]);
        ys.push_back(fields[static_cast<std::size_t>(iy)]);
        zs.push_back(fields[static_cast<std::size_t>(iz)]);
    }
    return CsvReadResult{Dataset::from_columns(std::move(xs), std::move(ys), std::move(zs)),
                         std::move(ignored)};
}

KernelType kernel_from_name(const std::string& name) {
    if (name == "gaussian")
        return KernelType::Gaussian;
    if (name == "epanechnikov")
        return KernelType::Epanechnikov;
    throw std::invalid_argument("unknown kernel '" + name + "'");
}

double bandwidth_auto(const std::vector<double>& column) {
    const std::size_t n = column.size();
    if (n < 2)
        throw std::invalid_argument("bandwidth_auto: need at least 2 samples");
    std::vector<double> sorted = column;
    std::sort(sorted.begin(), sorted.end());
    const double spread = sorted.back() - sorted.front();
    if (spread <= 0.0)
        throw std::invalid_argument("bandwidth_auto: column has zero spread");

    const double mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / double(n);
    double s2 = 0.0;
    for (double v : sorted)
        s2 += (v - mean) * (v - mean);
    const double sd = std::sqrt(s2 / double(n));
    const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);

    double scale = sd;
    if (iqr > 0.0)
        scale = std::min(sd, iqr / 1.34);
    const double h = 1.06 * scale * std::pow(double(n), -0.2);
    return std::max(h, 1e-6 * spread);
}

namespace {

// Weighted first and second moments of (x, y) at each query point; the
// single pass all estimators share.
struct MomentRow {
    double mx, my, mxx, mxy;
    bool no_support;
};

MomentRow local_moments(const Dataset& data, KernelType kernel, double h, bool pooled,
                        double zq) {
    double sw = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    double nearest = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < data.size(); ++i) {
        const double t = (data.z[i] - zq) / h;
        nearest = std::min(nearest, std::abs(t));
        const double w = pooled ? 1.0 : kernel_weight(kernel, t);
        if (w <= 0.0)
            continue;
        sw += w;
        sx += w * data.x[i];
        sy += w * data.y[i];
        sxx += w * data.x[i] * data.x[i];
        sxy += w * data.x[i] * data.y[i];
    }
    MomentRow row{};
    row.no_support = !pooled && (sw <= 0.0 || nearest > support_radius(kernel));
    if (sw > 0.0) {
        row.mx = sx / sw;
        row.my = sy / sw;
        row.mxx = sxx / sw;
        row.mxy = sxy / sw;
    }
    return row;
}

} // namespace

LocalMeans kernel_conditional_mean(const Dataset& data, const std::vector<double>& target,
                                   const KernelSpec& spec, const std::vector<double>& z_q) {
    if (target.size() != data.size())
        throw std::invalid_argument("kernel_conditional_mean: target length mismatch");
    LocalMeans out;
    out.bandwidth = resolve_bandwidth(data, spec);
    out.value.reserve(z_q.size());
    out.no_support.reserve(z_q.size());
    for (double zq : z_q) {
        double sw = 0.0, st = 0.0;
        double nearest = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < data.size(); ++i) {
            const double t = (data.z[i] - zq) / out.bandwidth;
            nearest = std::min(nearest, std::abs(t));
            const double w = spec.pooled ? 1.0 : kernel_weight(spec.kernel, t);
            sw += w;
            st += w * target[i];
        }
        const bool missing = !spec.pooled && (sw <= 0.0 || nearest > support_radius(spec.kernel));
        out.no_support.push_back(missing);
        out.value.push_back(sw > 0.0 ? st / sw : 0.0);
    }
    return out;
}

LocalCov kernel_conditional_cov(const Dataset& data, const KernelSpec& spec,
                                const std::vector<double>& z_q) {
    LocalCov out;
    out.bandwidth = resolve_bandwidth(data, spec);
    for (double zq : z_q) {
        const auto m = local_moments(data, spec.kernel, out.bandwidth, spec.pooled, zq);
        out.no_support.push_back(m.no_support);
        double var = m.mxx - m.mx * m.mx;
        if (var < 0.0) {
            var = 0.0;
            ++out.clamp_count;
        }
        out.var_x.push_back(var);
        out.cov_xy.push_back(m.mxy - m.mx * m.my);
    }
    return out;
}

CateEstimate estimate_cate(const Dataset& data, const KernelSpec& spec,
                           const std::vector<double>& z_q) {
    if (!data.x_binary01())
        throw NonBinaryTreatmentError("estimate_cate: x must be 0/1");

    CateEstimate est;
    est.z_q = z_q;
    est.bandwidth = resolve_bandwidth(data, spec);

    // scale-aware floor for the zero-variance indicator under smoothing noise
    {
        const double mean = std::accumulate(data.x.begin(), data.x.end(), 0.0) / double(data.size());
        const double pooled_var = mean * (1.0 - mean); // x is 0/1
        est.degenerate_threshold = std::max(1e-12, 1e-6 * pooled_var);
    }

    // heavy-tail surface check on |y|
    {
        std::vector<double> ay(data.y.size());
        std::transform(data.y.begin(), data.y.end(), ay.begin(),
                       [](double v) { return std::abs(v); });
        std::sort(ay.begin(), ay.end());
        const double total = std::accumulate(ay.begin(), ay.end(), 0.0);
        const std::size_t top = std::max<std::size_t>(1, (ay.size() + 99) / 100);
        double top_sum = 0.0;
        for (std::size_t i = ay.size() - top; i < ay.size(); ++i)
            top_sum += ay[i];
        est.heavy_tail_warning = total > 0.0 && top_sum > 0.5 * total;
    }

    for (double zq : z_q) {
        const auto m = local_moments(data, spec.kernel, est.bandwidth, spec.pooled, zq);
        est.no_support.push_back(m.no_support);
        double var = m.mxx - m.mx * m.mx;
        if (var < 0.0) {
            var = 0.0;
            ++est.clamp_count;
        }
        const double cov = m.mxy - m.mx * m.my;
        const bool degen = var <= est.degenerate_threshold;
        const double beta = degen ? 0.0 : cov / var;
        est.degenerate.push_back(degen);
        est.beta.push_back(beta);
        est.alpha.push_back(m.my - beta * m.mx);
        est.propensity.push_back(m.mx);
        est.var_x.push_back(var);
        // for 0/1 x the weighted second moment equals the weighted mean, so
        // var must equal p(1-p) up to rounding; track the gap as a sanity stat
        est.max_binary_var_gap =
            std::max(est.max_binary_var_gap, std::abs(var - m.mx * (1.0 - m.mx)));
    }
    return est;
}

std::vector<double> default_grid(const std::vector<double>& z, int points) {
    if (points < 2)
        throw std::invalid_argument("default_grid: need at least 2 points");
    std::vector<double> sorted = z;
    std::sort(sorted.begin(), sorted.end());
    const double lo = quantile_sorted(sorted, 0.05);
    const double hi = quantile_sorted(sorted, 0.95);
    std::vector<double> grid(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i)
        grid[static_cast<std::size_t>(i)] =
            lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
    return grid;
}

nlohmann::json CateEstimate::diagnostics() const {
    std::size_t degen_count = 0, no_support_count = 0;
    for (bool b : degenerate)
        degen_count += b;
    for (bool b : no_support)
        no_support_count += b;
    return {{"bandwidth", bandwidth},
            {"degenerate_threshold", degenerate_threshold},
            {"query_points", z_q.size()},
            {"degenerate_points", degen_count},
            {"no_support_points", no_support_count},
            {"variance_clamps", clamp_count},
            {"heavy_tail_warning", heavy_tail_warning},
            {"max_binary_var_gap", max_binary_var_gap}};
}

void write_cate_csv(const CateEstimate& est, std::ostream& out) {
    out << "z,beta_hat,alpha_hat,propensity_hat,varx_hat,degenerate\n";
    for (std::size_t i = 0; i < est.z_q.size(); ++i) {
        out << detail::render_double(est.z_q[i]) << ',' << detail::render_double(est.beta[i])
            << ',' << detail::render_double(est.alpha[i]) << ','
            << detail::render_double(est.propensity[i]) << ','
            << detail::render_double(est.var_x[i]) << ',' << (est.degenerate[i] ? 1 : 0) << '\n';
    }
}

} // namespace condmom
