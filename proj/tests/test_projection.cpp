#include <doctest.h>

#include <cmath>

#include "condmom/fixtures.hpp"
#include "condmom/projection.hpp"
#include "condmom/random_space.hpp"

using namespace condmom;

namespace {

Eigen::VectorXd random_vector(Rng& rng, Eigen::Index dim) {
    Eigen::VectorXd v(dim);
    for (Eigen::Index i = 0; i < dim; ++i)
        v(i) = rng.normal();
    return v;
}

Eigen::MatrixXd random_psd(Rng& rng, Eigen::Index dim) {
    Eigen::MatrixXd a(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i)
        for (Eigen::Index j = 0; j < dim; ++j)
            a(i, j) = rng.normal();
    Eigen::MatrixXd g = a.transpose() * a;
    g += 0.05 * g.trace() / double(dim) * Eigen::MatrixXd::Identity(dim, dim);
    return g;
}

// independent least-squares oracle: minimize |y - Sc|_G by transforming to
// standard coordinates with a symmetric square root of G and QR-solving
Eigen::VectorXd project_by_sqrt(const Eigen::MatrixXd& gram, const Eigen::VectorXd& y,
                                const Eigen::MatrixXd& spanning) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
    const Eigen::MatrixXd root =
        es.eigenvectors() *
        es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
        es.eigenvectors().transpose();
    const Eigen::VectorXd c =
        (root * spanning).colPivHouseholderQr().solve(root * y);
    return spanning * c;
}

} // namespace

TEST_CASE("gram matrix validation") {
    Eigen::MatrixXd asym(2, 2);
    asym << 1.0, 0.5, -0.5, 1.0;
    CHECK_THROWS_AS(InnerProductSpace{asym}, std::invalid_argument);

    Eigen::MatrixXd indef(2, 2);
    indef << 1.0, 2.0, 2.0, 1.0; // eigenvalues 3, -1
    CHECK_THROWS_AS(InnerProductSpace{indef}, std::invalid_argument);

    CHECK_NOTHROW(InnerProductSpace{Eigen::MatrixXd::Zero(2, 2)}); // PSD boundary is legal
}

TEST_CASE("projection of members and orthogonal vectors") {
    const auto space = InnerProductSpace::standard(4);
    Eigen::MatrixXd cols(4, 2);
    cols << 1, 0, 0, 1, 0, 0, 0, 0;
    const Subspace V{cols};

    Eigen::VectorXd inside(4);
    inside << 2.0, -3.0, 0.0, 0.0;
    CHECK((project(space, inside, V) - inside).norm() <= 1e-12);

    Eigen::VectorXd perp(4);
    perp << 0.0, 0.0, 1.5, -2.0;
    CHECK(project(space, perp, V).norm() <= 1e-12);

    // empty spanning set projects to zero
    CHECK(project(space, inside, Subspace{Eigen::MatrixXd(4, 0)}).norm() == 0.0);
}

TEST_CASE("projection matches the normal-equations oracle") {
    for (int k = 0; k < 200; ++k) {
        Rng rng(mix_seed(811, static_cast<std::uint64_t>(k)));
        const Eigen::Index dim = 6;
        const Eigen::MatrixXd gram =
            (k % 2 == 0) ? Eigen::MatrixXd::Identity(dim, dim) : random_psd(rng, dim);
        const InnerProductSpace space{gram};
        Eigen::MatrixXd cols(dim, 3);
        for (Eigen::Index j = 0; j < 3; ++j)
            cols.col(j) = random_vector(rng, dim);
        const Eigen::VectorXd y = random_vector(rng, dim);

        const Eigen::VectorXd p = project(space, y, Subspace{cols});
        const Eigen::VectorXd oracle = project_by_sqrt(gram, y, cols);
        CHECK(space.norm(p - oracle) <= 1e-9 * (1.0 + space.norm(y)));

        // residual orthogonal to every spanning vector
        for (Eigen::Index j = 0; j < 3; ++j)
            CHECK(std::abs(space.inner(y - p, cols.col(j))) <= 1e-9);
    }
}

TEST_CASE("rank-deficient spanning sets are legal") {
    const auto space = InnerProductSpace::standard(5);
    Rng rng(mix_seed(812, 0));
    Eigen::MatrixXd cols(5, 3);
    cols.col(0) = random_vector(rng, 5);
    cols.col(1) = 2.0 * cols.col(0);
    cols.col(2) = random_vector(rng, 5);
    const Eigen::VectorXd y = random_vector(rng, 5);

    Eigen::MatrixXd reduced(5, 2);
    reduced << cols.col(0), cols.col(2);
    const Eigen::VectorXd a = project(space, y, Subspace{cols});
    const Eigen::VectorXd b = project(space, y, Subspace{reduced});
    CHECK((a - b).norm() <= 1e-10);
}

TEST_CASE("partial_out basics") {
    const auto space = InnerProductSpace::standard(4);
    Eigen::MatrixXd cols(4, 1);
    cols << 1, 0, 0, 0;
    const Subspace V{cols};

    // x orthogonal to V, y = x: coefficient 1 and projection x
    Eigen::VectorXd x(4);
    x << 0, 2, 0, 0;
    const auto self = partial_out(space, x, x, V);
    CHECK(self.coefficient == doctest::Approx(1.0));
    CHECK((self.projection - x).norm() <= 1e-12);

    // y inside V: coefficient 0, projection y
    Eigen::VectorXd y(4);
    y << 3, 0, 0, 0;
    const auto inside = partial_out(space, y, x, V);
    CHECK(inside.coefficient == doctest::Approx(0.0));
    CHECK((inside.projection - y).norm() <= 1e-12);

    // x in V is a degenerate direction
    Eigen::VectorXd xv(4);
    xv << 5, 0, 0, 0;
    CHECK_THROWS_AS(partial_out(space, y, xv, V), DegenerateDirectionError);
    CHECK_THROWS_AS(partial_out(space, y, Eigen::VectorXd::Zero(4), V),
                    DegenerateDirectionError);
}

TEST_CASE("partialling formula equals direct projection on random instances") {
    for (int k = 0; k < 300; ++k) {
        Rng rng(mix_seed(813, static_cast<std::uint64_t>(k)));
        const Eigen::Index dim = 2 + static_cast<Eigen::Index>(rng.below(7)); // 2..8
        const Eigen::MatrixXd gram =
            (k % 3 == 0) ? Eigen::MatrixXd::Identity(dim, dim) : random_psd(rng, dim);
        const InnerProductSpace space{gram};
        const Eigen::Index vdim = static_cast<Eigen::Index>(rng.below(
            static_cast<std::uint64_t>(dim - 1)));
        Eigen::MatrixXd cols(dim, vdim);
        for (Eigen::Index j = 0; j < vdim; ++j)
            cols.col(j) = random_vector(rng, dim);
        const Subspace V{cols};
        const Eigen::VectorXd x = random_vector(rng, dim);
        const Eigen::VectorXd y = random_vector(rng, dim);

        const auto po = partial_out(space, y, x, V);
        const Eigen::VectorXd direct = project(space, y, V.extended_by(x));
        CHECK(space.norm(po.projection - direct) <= 1e-9 * (1.0 + space.norm(y)));
    }
}

TEST_CASE("projection is idempotent and self-adjoint") {
    for (int k = 0; k < 100; ++k) {
        Rng rng(mix_seed(814, static_cast<std::uint64_t>(k)));
        const Eigen::Index dim = 7;
        const InnerProductSpace space{random_psd(rng, dim)};
        Eigen::MatrixXd cols(dim, 3);
        for (Eigen::Index j = 0; j < 3; ++j)
            cols.col(j) = random_vector(rng, dim);
        const Subspace V{cols};
        const Eigen::VectorXd a = random_vector(rng, dim);
        const Eigen::VectorXd b = random_vector(rng, dim);

        const Eigen::VectorXd pa = project(space, a, V);
        CHECK(space.norm(project(space, pa, V) - pa) <= 1e-9);
        CHECK(std::abs(space.inner(pa, b) - space.inner(a, project(space, b, V))) <= 1e-9);
    }
}

TEST_CASE("slope_from_projection on fixtures") {
    const auto fp = builtin_fixture("four_point");
    const auto slopes = slope_from_projection(fp.space, fp.x, fp.y, {fp.z});
    REQUIRE(slopes.slope.size() == 1);
    CHECK(slopes.slope[0] == doctest::Approx(-2.0).epsilon(1e-12));
    CHECK_FALSE(slopes.degenerate[0]);
    for (std::size_t i = 0; i < 4; ++i)
        CHECK(slopes.slope_map.value(i) == doctest::Approx(-2.0));

    // x constant within each cell: degenerate, slope 0
    const auto degen = slope_from_projection(fp.space, fp.x, fp.y, {fp.x});
    for (std::size_t c = 0; c < degen.slope.size(); ++c) {
        CHECK(degen.degenerate[c]);
        CHECK(degen.slope[c] == 0.0);
    }

    const auto r3 = builtin_fixture("remark3");
    const auto zero = slope_from_projection(r3.space, r3.x, r3.y, {r3.z});
    CHECK(std::abs(zero.slope[0]) <= 1e-12);
}

TEST_CASE("geometric slope equals the covariance ratio on randomized spaces") {
    for (int k = 0; k < 300; ++k) {
        Rng rng(mix_seed(815, static_cast<std::uint64_t>(k)));
        const auto inst = sample_instance(rng, RandomSpaceConfig{});
        const auto slopes = slope_from_projection(inst.space, inst.x, inst.y, {inst.z});
        const auto m = conditional_moments(inst.space, inst.x, inst.y, {inst.z});
        for (std::size_t c = 0; c < m.partition.cell_count(); ++c) {
            if (m.var_x[c] <= 1e-12) {
                CHECK(slopes.degenerate[c]);
                CHECK(slopes.slope[c] == 0.0);
            } else {
                CHECK(std::abs(slopes.slope[c] - m.cov_xy[c] / m.var_x[c]) <= 1e-10);
            }
        }
    }
}
