#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

namespace msnet {

/// Relative magnitude below which a coefficient is treated as numerical noise.
inline constexpr double kCoeffNoiseFloor = 1e-12;

/// Classification tolerance against the unit circle: a root within this band
/// of |z| = 1 is reported "on" the circle rather than silently rounded.
inline constexpr double kCircleTol = 1e-9;

/// Real polynomial in the backward-shift variable: coeffs()[k] multiplies
/// z^{-k}. Canonical form trims trailing (highest-order) coefficients that
/// sit below the noise floor; the zero polynomial has an empty list.
class Poly {
 public:
    Poly() = default;
    explicit Poly(Eigen::VectorXd coeffs);
    Poly(std::initializer_list<double> coeffs);

    static Poly constant(double c);
    /// z^{-k}, k >= 0.
    static Poly delay(int k);
    /// Real polynomial c * w^{valuation} * prod_i (1 - rho_i w) from a
    /// conjugate-closed set of z-plane roots {rho_i}.
    static Poly from_z_roots(const std::vector<std::complex<double>>& z_roots,
                             double scale, int valuation = 0);

    const Eigen::VectorXd& coeffs() const { return coeffs_; }
    int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
    bool is_zero() const { return coeffs_.size() == 0; }
    /// Index of the first coefficient above the noise floor (0 for the zero
    /// polynomial). Equals the number of leading z^{-1} factors.
    int valuation() const;
    double max_abs_coeff() const;

    /// Evaluate at a point of the w = z^{-1} plane (Horner).
    std::complex<double> eval_w(std::complex<double> w) const;
    /// Evaluate at a point of the z plane; z must be nonzero.
    std::complex<double> eval_z(std::complex<double> z) const;

    /// Derivative with respect to w.
    Poly derivative() const;

    Poly operator-() const;
    friend Poly operator+(const Poly& a, const Poly& b);
    friend Poly operator-(const Poly& a, const Poly& b);
    friend Poly operator*(const Poly& a, const Poly& b);
    friend Poly operator*(double s, const Poly& p);
    friend Poly operator*(const Poly& p, double s) { return s * p; }

 private:
    Eigen::VectorXd coeffs_;  // ascending powers of z^{-1}
    void trim();
};

enum class CircleSide { Inside, On, Outside };

/// Roots of a polynomial in the z plane, clustered by multiplicity and
/// classified against the unit circle.
struct RootSet {
    struct Entry {
        std::complex<double> z;
        int multiplicity = 1;
        CircleSide side = CircleSide::Inside;
        /// Estimated numerical uncertainty of z given the source
        /// polynomial's conditioning at this root.
        double uncertainty = 0.0;
    };
    std::vector<Entry> entries;

    int total_multiplicity() const;
    /// Every root repeated according to its multiplicity.
    std::vector<std::complex<double>> flat() const;
    RootSet filtered(CircleSide side) const;
    bool any(CircleSide side) const;
};

/// All roots of the z-polynomial obtained by multiplying p by the highest
/// occurring power of z. Throws std::runtime_error if the iteration fails to
/// converge and std::invalid_argument for the zero polynomial.
RootSet roots_in_z(const Poly& p);

/// Roots of c[0] z^n + c[1] z^{n-1} + ... + c[n] by Aberth-Ehrlich iteration,
/// conjugate-symmetrized for real input. Used by roots_in_z and by the
/// spectral factorization. terminal_step, when supplied, receives the last
/// relative step size: the achieved accuracy (steps plateau around multiple
/// roots instead of reaching the step tolerance).
std::vector<std::complex<double>> polynomial_roots(const Eigen::VectorXd& descending_z_coeffs,
                                                   double* terminal_step = nullptr);

CircleSide classify_against_unit_circle(std::complex<double> z);

}  // namespace msnet
