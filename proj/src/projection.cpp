#include "condmom/projection.hpp"

#include <cmath>

namespace condmom {

InnerProductSpace::InnerProductSpace(Eigen::MatrixXd gram) : gram_(std::move(gram)) {
    if (gram_.rows() != gram_.cols() || gram_.rows() == 0)
        throw std::invalid_argument("InnerProductSpace: gram matrix must be square");
    const double scale = std::max(1.0, gram_.cwiseAbs().maxCoeff());
    if ((gram_ - gram_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw std::invalid_argument("InnerProductSpace: gram matrix must be symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram_, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-10 * scale)
        throw std::invalid_argument("InnerProductSpace: gram matrix must be positive semidefinite");
}

InnerProductSpace InnerProductSpace::standard(Eigen::Index dim) {
    return InnerProductSpace(Eigen::MatrixXd::Identity(dim, dim));
}

double InnerProductSpace::inner(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
    return a.dot(gram_ * b);
}

double InnerProductSpace::norm(const Eigen::VectorXd& a) const {
    return std::sqrt(std::max(0.0, inner(a, a)));
}

Subspace Subspace::constants(Eigen::Index dim) {
    return Subspace{Eigen::MatrixXd::Ones(dim, 1)};
}

Subspace Subspace::extended_by(const Eigen::VectorXd& v) const {
    Eigen::MatrixXd cols(spanning.rows(), spanning.cols() + 1);
    cols << spanning, v;
    return Subspace{std::move(cols)};
}

Eigen::VectorXd project(const InnerProductSpace& space, const Eigen::VectorXd& y,
                        const Subspace& V) {
    if (y.size() != space.dim() || V.spanning.rows() != space.dim())
        throw std::invalid_argument("project: dimension mismatch");
    if (V.spanning.cols() == 0)
        return Eigen::VectorXd::Zero(space.dim());
    // Normal equations (S' G S) c = S' G y, solved rank-revealingly so that
    // rank-deficient spanning sets are legal.
    const Eigen::MatrixXd StGS = V.spanning.transpose() * space.gram() * V.spanning;
    const Eigen::VectorXd StGy = V.spanning.transpose() * space.gram() * y;
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(StGS);
    cod.setThreshold(kRankTol);
    return V.spanning * cod.solve(StGy);
}

PartialOut partial_out(const InnerProductSpace& space, const Eigen::VectorXd& y,
                       const Eigen::VectorXd& x, const Subspace& V) {
    const Eigen::VectorXd rx = x - project(space, x, V); // P_{V bot} x
    const double rx_norm = space.norm(rx);
    if (rx_norm <= kRankTol * std::max(space.norm(x), 1e-300))
        throw DegenerateDirectionError("partial_out: x lies in the subspace");
    const Eigen::VectorXd py = project(space, y, V);
    const double coeff = space.inner(y - py, rx) / (rx_norm * rx_norm);
    return PartialOut{py + coeff * rx, coeff};
}

CellSlopes slope_from_projection(const FiniteSpace& space, const RandomMap& x,
                                 const RandomMap& y, const std::vector<RandomMap>& z) {
    Partition part = condition(space, z);
    const std::size_t cells = part.cell_count();
    std::vector<double> slope(cells, 0.0);
    std::vector<bool> degenerate(cells, false);

    std::vector<double> per_outcome(space.size(), 0.0);
    for (std::size_t c = 0; c < cells; ++c) {
        const auto& members = part.cells[c];
        const Eigen::Index m = static_cast<Eigen::Index>(members.size());
        Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(m, m);
        Eigen::VectorXd xv(m), yv(m);
        for (Eigen::Index i = 0; i < m; ++i) {
            gram(i, i) = space.probs[members[static_cast<std::size_t>(i)]] / part.cell_probs[c];
            xv(i) = x.value(members[static_cast<std::size_t>(i)]);
            yv(i) = y.value(members[static_cast<std::size_t>(i)]);
        }
        const InnerProductSpace cell_space{std::move(gram)};
        try {
            slope[c] = partial_out(cell_space, yv, xv, Subspace::constants(m)).coefficient;
        } catch (const DegenerateDirectionError&) {
            degenerate[c] = true; // slope stays 0
        }
        for (std::size_t i : members)
            per_outcome[i] = slope[c];
    }
    return CellSlopes{std::move(part), std::move(slope), std::move(degenerate),
                      RandomMap::real(std::move(per_outcome))};
}

} // namespace condmom
