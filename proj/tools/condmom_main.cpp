// condmom command-line front end.
//
// Subcommands:
//   verify        fixture + randomized property suites, JSON report
//   example1      mixed-Gaussian generator checks, JSON report (+ bin CSV)
//   estimate      conditional-treatment-effect estimation from a CSV sample
//   project-demo  partialling-out identity on one random instance
//
// Exit codes: 0 pass, 1 check failure, 2 I/O error, 3 invalid arguments.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "condmom/affine_regression.hpp"
#include "condmom/estimators.hpp"
#include "condmom/fixtures.hpp"
#include "condmom/gaussian_example.hpp"
#include "condmom/projection.hpp"
#include "condmom/verify_suite.hpp"

namespace {

constexpr int kExitPass = 0;
constexpr int kExitCheckFailure = 1;
constexpr int kExitIo = 2;
constexpr int kExitBadArgs = 3;
constexpr int kSchemaVersion = 1;

// Reports go to a file when requested, else stdout; byte-stable formatting.
int emit_json(const nlohmann::json& j, const std::string& path) {
    const std::string text = j.dump(2) + "\n";
    if (path.empty() || path == "-") {
        std::cout << text;
        return kExitPass;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        std::cerr << "error: cannot open '" << path << "' for writing\n";
        return kExitIo;
    }
    out << text;
    return out ? kExitPass : kExitIo;
}

nlohmann::json report_shell(const std::string& command, std::uint64_t seed) {
    return {{"schema_version", kSchemaVersion}, {"command", command}, {"seed", seed}};
}

int run_verify(std::uint64_t seed, int seeds, int max_omega, int projections,
               const std::vector<std::string>& fixtures,
               const std::vector<std::string>& fixture_files, const std::string& out_path) {
    for (const auto& name : fixtures) {
        if (!condmom::is_builtin_fixture(name)) {
            std::cerr << "error: unknown fixture '" << name << "'\n";
            return kExitBadArgs;
        }
    }
    condmom::VerifySuiteOptions opt;
    opt.seed = seed;
    opt.randomized_spaces = seeds;
    opt.max_outcomes = max_omega;
    opt.projection_instances = projections;
    opt.fixtures = fixtures;
    opt.fixture_files = fixture_files;

    try {
        const auto result = condmom::run_verify_suite(opt);
        nlohmann::json report = report_shell("verify", seed);
        report.update(result.report);
        const int io = emit_json(report, out_path);
        if (io != kExitPass)
            return io;
        return result.pass ? kExitPass : kExitCheckFailure;
    } catch (const condmom::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
}

int run_example1(double rho, std::size_t n, std::uint64_t seed, const std::string& out_path,
                 const std::string& csv_path, const std::string& samples_path) {
    condmom::Example1Config cfg{rho, n, seed};
    const condmom::SampleBatch batch = condmom::sample_example1(cfg);

    if (!samples_path.empty()) {
        std::ofstream out(samples_path, std::ios::binary);
        if (!out) {
            std::cerr << "error: cannot open '" << samples_path << "' for writing\n";
            return kExitIo;
        }
        condmom::write_batch_csv(batch, out);
    }

    const condmom::Example1Report rep = condmom::verify_example1(batch);
    if (!csv_path.empty()) {
        std::ofstream out(csv_path, std::ios::binary);
        if (!out) {
            std::cerr << "error: cannot open '" << csv_path << "' for writing\n";
            return kExitIo;
        }
        rep.write_bins_csv(out);
    }

    nlohmann::json report = report_shell("example1", seed);
    report["rho"] = rho;
    report["n"] = n;
    report.update(rep.as_json());
    const int io = emit_json(report, out_path);
    if (io != kExitPass)
        return io;
    return rep.all_conclusive_pass() ? kExitPass : kExitCheckFailure;
}

int run_estimate(const std::string& input, const std::string& bandwidth,
                 const std::string& kernel, int grid_points, bool pooled,
                 const std::string& out_path, const std::string& json_path) {
    std::ifstream in(input);
    if (!in) {
        std::cerr << "error: cannot open '" << input << "'\n";
        return kExitIo;
    }

    condmom::KernelSpec spec;
    try {
        spec.kernel = condmom::kernel_from_name(kernel);
        spec.pooled = pooled;
        if (bandwidth != "auto") {
            std::size_t used = 0;
            spec.bandwidth = std::stod(bandwidth, &used);
            if (used != bandwidth.size() || !(spec.bandwidth > 0.0)) {
                std::cerr << "error: bandwidth must be a positive number or 'auto'\n";
                return kExitBadArgs;
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitBadArgs;
    }

    try {
        const condmom::CsvReadResult csv = condmom::read_xyz_csv(in);
        for (const auto& col : csv.ignored_columns)
            std::cerr << "warning: ignoring column '" << col << "'\n";

        const std::vector<double> grid = condmom::default_grid(csv.data.z, grid_points);
        const condmom::CateEstimate est = condmom::estimate_cate(csv.data, spec, grid);

        if (out_path.empty() || out_path == "-") {
            condmom::write_cate_csv(est, std::cout);
        } else {
            std::ofstream out(out_path, std::ios::binary);
            if (!out) {
                std::cerr << "error: cannot open '" << out_path << "' for writing\n";
                return kExitIo;
            }
            condmom::write_cate_csv(est, out);
        }

        nlohmann::json diag = {{"schema_version", kSchemaVersion},
                               {"command", "estimate"},
                               {"input", input},
                               {"rows", csv.data.size()},
                               {"ignored_columns", csv.ignored_columns},
                               {"diagnostics", est.diagnostics()}};
        if (json_path.empty()) {
            std::cerr << diag.dump(2) << "\n";
        } else {
            const int io = emit_json(diag, json_path);
            if (io != kExitPass)
                return io;
        }
        return kExitPass;
    } catch (const condmom::NonBinaryTreatmentError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitBadArgs;
    } catch (const condmom::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
}

int run_project_demo(std::uint64_t seed, const std::string& out_path) {
    // one seeded instance of the partialling identity, plus the finite-space
    // slope computed by both oracles on the four-point fixture
    condmom::Rng rng(condmom::mix_seed(seed, 7));
    const Eigen::Index dim = 6;
    Eigen::MatrixXd cols(dim, 2);
    Eigen::VectorXd x(dim), y(dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
        cols(i, 0) = rng.normal();
        cols(i, 1) = rng.normal();
        x(i) = rng.normal();
        y(i) = rng.normal();
    }
    const auto space = condmom::InnerProductSpace::standard(dim);
    const condmom::Subspace V{cols};
    const auto po = condmom::partial_out(space, y, x, V);
    const Eigen::VectorXd direct = condmom::project(space, y, V.extended_by(x));
    const double gap = space.norm(po.projection - direct);

    const condmom::LabeledSpace f = condmom::builtin_fixture("four_point");
    const auto fit = condmom::fit_affine(f.space, f.x, f.y, f.z);
    const auto geo = condmom::slope_from_projection(f.space, f.x, f.y, {f.z});

    nlohmann::json report = report_shell("project-demo", seed);
    report["dimension"] = dim;
    report["partialling_coefficient"] = po.coefficient;
    report["identity_gap"] = gap;
    report["fixture_slope_moments"] = fit.beta[0];
    report["fixture_slope_projection"] = geo.slope[0];
    const bool pass = gap <= 1e-9 * (1.0 + space.norm(y)) &&
                      std::abs(fit.beta[0] - geo.slope[0]) <= 1e-10;
    report["pass"] = pass;
    const int io = emit_json(report, out_path);
    if (io != kExitPass)
        return io;
    return pass ? kExitPass : kExitCheckFailure;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"condmom: exact and kernel-based conditional-moment computation"};
    app.require_subcommand(1);

    std::uint64_t seed = condmom::kDefaultSeed;
    app.add_option("--seed", seed, "RNG seed (default fixed for reproducible runs)")
        ->capture_default_str();

    // verify
    auto* verify = app.add_subcommand("verify", "run fixture and randomized property suites");
    int seeds = 1000, max_omega = 12, projections = 1000;
    std::vector<std::string> fixtures, fixture_files;
    std::string verify_out;
    verify->add_option("--seeds", seeds, "number of randomized spaces")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    verify->add_option("--max-omega", max_omega, "largest outcome count")
        ->check(CLI::Range(2, 64))
        ->capture_default_str();
    verify->add_option("--projections", projections, "number of random projection instances")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    verify->add_option("--fixture", fixtures, "restrict to named builtin fixtures");
    verify->add_option("--fixture-file", fixture_files,
                       "also verify labeled spaces from fixture-format files");
    verify->add_option("-o,--out", verify_out, "write the JSON report here (default stdout)");

    // example1
    auto* example1 = app.add_subcommand("example1", "sample the mixed-Gaussian model and check "
                                                    "its closed-form conditional moments");
    double rho = 0.5;
    std::size_t n = 1000000;
    std::string example1_out, example1_csv, example1_samples;
    example1->add_option("--rho", rho, "mixing correlation, |rho| < 1")->capture_default_str();
    example1->add_option("--n", n, "sample count (>= 10000)")->capture_default_str();
    example1->add_option("-o,--out", example1_out, "write the JSON report here (default stdout)");
    example1->add_option("--csv", example1_csv, "write plot-ready binned-check data here");
    example1->add_option("--dump-samples", example1_samples, "write the sampled rows here");

    // estimate
    auto* estimate = app.add_subcommand("estimate", "estimate the conditional treatment effect "
                                                    "from a CSV with columns x,y,z");
    std::string input, bandwidth = "auto", kernel = "gaussian", estimate_out = "-", estimate_json;
    int grid_points = 41;
    bool pooled = false;
    estimate->add_option("-i,--input", input, "input CSV path")->required();
    estimate->add_option("--bandwidth", bandwidth, "kernel bandwidth or 'auto'")
        ->capture_default_str();
    estimate->add_option("--kernel", kernel, "gaussian | epanechnikov")->capture_default_str();
    estimate->add_option("--grid", grid_points, "query points on the central 90% of z")
        ->check(CLI::Range(2, 100000))
        ->capture_default_str();
    estimate->add_flag("--pooled", pooled, "use plain sample moments (infinite bandwidth)");
    estimate->add_option("-o,--out", estimate_out, "output CSV path (default stdout)");
    estimate->add_option("--json", estimate_json, "write JSON diagnostics here (default stderr)");

    // project-demo
    auto* demo = app.add_subcommand("project-demo", "show the partialling-out identity on a "
                                                    "seeded random instance");
    std::string demo_out;
    demo->add_option("-o,--out", demo_out, "write the JSON report here (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitBadArgs;
    }

    try {
        if (verify->parsed())
            return run_verify(seed, seeds, max_omega, projections, fixtures, fixture_files,
                              verify_out);
        if (example1->parsed()) {
            if (!(std::abs(rho) < 1.0)) {
                std::cerr << "error: rho must lie strictly inside (-1, 1)\n";
                return kExitBadArgs;
            }
            if (n < 10000) {
                std::cerr << "error: n must be at least 10000\n";
                return kExitBadArgs;
            }
            return run_example1(rho, n, seed, example1_out, example1_csv, example1_samples);
        }
        if (estimate->parsed())
            return run_estimate(input, bandwidth, kernel, grid_points, pooled, estimate_out,
                                estimate_json);
        if (demo->parsed())
            return run_project_demo(seed, demo_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitCheckFailure;
    }
    return kExitBadArgs;
}
