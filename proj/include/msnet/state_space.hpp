#pragma once

#include "msnet/rational.hpp"

#include <Eigen/Dense>

namespace msnet {

/// SISO state-space realization: transfer function C (zI - A)^{-1} B + D.
/// A 0x0 system is a pure gain D.
struct StateSpace {
    Eigen::MatrixXd A;
    Eigen::VectorXd B;
    Eigen::RowVectorXd C;
    double D = 0.0;

    int order() const { return static_cast<int>(A.rows()); }
    std::complex<double> eval_z(std::complex<double> z) const;
};

/// Controllable canonical realization of a proper rational function.
StateSpace realize(const RatFn& f);

/// Numerator and characteristic polynomial of C (sI - A)^{-1} B + D in
/// descending powers of the abstract variable s (Leverrier-Faddeev).
struct ResolventForm {
    Eigen::VectorXd num_desc;
    Eigen::VectorXd den_desc;
};
ResolventForm resolvent_form(const StateSpace& s);

/// Transfer function of a realization via the Leverrier-Faddeev resolvent
/// expansion; exact for the small orders used here.
RatFn transfer_function(const StateSpace& s);

/// Unique solution X of the Stein equation X = A X A^T + Q for Q symmetric
/// and spectral radius of A strictly below one, by the squaring (doubling)
/// iteration. Throws on a marginally stable A.
Eigen::MatrixXd stein_solve(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Q);

/// Spectral radius estimate by power iteration (used as a guard, not an
/// eigensolver).
double spectral_radius_estimate(const Eigen::MatrixXd& A);

/// Squared H2 norm of a strictly stable proper rational function, through
/// the controllability Gramian. Equals the mean of |f|^2 over the unit
/// circle.
double h2_norm_sq(const RatFn& f);
double h2_norm_sq(const StateSpace& s);

/// Balanced realization of the all-pass product of first-order sections
/// (z - lambda_i)/(1 - conj(lambda_i) z) over a conjugate-closed set of
/// poles strictly outside the unit circle. The composite system matrix
/// [A B; C D] is orthogonal; |D| is the product of 1/|lambda_i|.
StateSpace balanced_allpass(const RootSet& mirrored_poles);

/// Realization of the inverse system (requires D != 0).
StateSpace inverse_realization(const StateSpace& s);

/// num(M) * den(M)^{-1} with num, den the z-polynomials of f applied to a
/// square matrix argument. Refuses ill-conditioned den(M).
Eigen::MatrixXd eval_at_matrix(const RatFn& f, const Eigen::MatrixXd& M);

/// Linear solve M X = RHS guarded by a reciprocal-condition estimate; the
/// label names the matrix in diagnostics.
Eigen::MatrixXd guarded_solve(const Eigen::MatrixXd& M, const Eigen::MatrixXd& rhs,
                              const char* label);

}  // namespace msnet
