#pragma once

// Orthogonal projection and partialling-out on finite-dimensional inner
// product spaces.  The inner product is carried by a Gram matrix, so a
// finite probability space embeds directly (gram = diag of cell-conditional
// probabilities) and the partialled-out coefficient doubles as a geometric
// oracle for the covariance-ratio slope.

#include <vector>

#include <Eigen/Dense>

#include "condmom/finite_space.hpp"

namespace condmom {

// Numerical boundary for "x lies outside the subspace".
inline constexpr double kRankTol = 1e-10;

class InnerProductSpace {
  public:
    explicit InnerProductSpace(Eigen::MatrixXd gram); // validates symmetry / PSD
    static InnerProductSpace standard(Eigen::Index dim);

    Eigen::Index dim() const { return gram_.rows(); }
    const Eigen::MatrixXd& gram() const { return gram_; }

    double inner(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const;
    double norm(const Eigen::VectorXd& a) const;

  private:
    Eigen::MatrixXd gram_;
};

struct Subspace {
    Eigen::MatrixXd spanning; // columns; rank deficiency is legal

    static Subspace from_columns(Eigen::MatrixXd cols) { return Subspace{std::move(cols)}; }
    static Subspace constants(Eigen::Index dim);
    Subspace extended_by(const Eigen::VectorXd& v) const;
};

// Orthogonal projection of y onto span(V), by a rank-revealing solve of the
// normal equations in the space's inner product.
Eigen::VectorXd project(const InnerProductSpace& space, const Eigen::VectorXd& y,
                        const Subspace& V);

struct PartialOut {
    Eigen::VectorXd projection; // projection of y onto span(V + {x})
    double coefficient;         // <P_{V bot} y, P_{V bot} x> / |P_{V bot} x|^2
};

// Throws DegenerateDirectionError when |P_{V bot} x| <= kRankTol * |x|
// (including x = 0); callers map that to the zero-variance branch.
PartialOut partial_out(const InnerProductSpace& space, const Eigen::VectorXd& y,
                       const Eigen::VectorXd& x, const Subspace& V);

struct CellSlopes {
    Partition partition;
    std::vector<double> slope;      // partialled-out coefficient per cell
    std::vector<bool> degenerate;   // x constant (in conditional norm) on the cell
    RandomMap slope_map;            // per-outcome, constant on each cell
};

// Per z-cell: partial x out of the constants and return the coefficient,
// which is the covariance-ratio slope computed by geometry instead of by
// moment arithmetic.  Degenerate cells get slope 0.
CellSlopes slope_from_projection(const FiniteSpace& space, const RandomMap& x,
                                 const RandomMap& y, const std::vector<RandomMap>& z);

} // namespace condmom
