#pragma once

#include "msnet/polynomial.hpp"

#include <vector>

namespace msnet {

/// Common-root cancellation tolerance, relative to root magnitude.
inline constexpr double kCancelTol = 1e-8;

/// Real rational function num/den, both polynomials in z^{-1}. Construction
/// canonicalizes: shared backward-shift factors and matching off-circle
/// roots are cancelled, and the denominator is scaled so its first
/// significant coefficient is 1. Roots on the unit circle are never
/// auto-cancelled; classify() surfaces them instead.
class RatFn {
 public:
    RatFn() : num_(), den_(Poly::constant(1.0)) {}
    RatFn(Poly num, Poly den);

    static RatFn constant(double c);
    /// z^{-k}; negative k gives the (improper) advance z^{+|k|}.
    static RatFn delay(int k);
    /// From coefficient lists in descending powers of z (the user-facing
    /// convention); converts to backward-shift form.
    static RatFn from_z_form(const std::vector<double>& num_desc,
                             const std::vector<double>& den_desc);

    const Poly& num() const { return num_; }
    const Poly& den() const { return den_; }
    bool is_zero() const { return num_.is_zero(); }

    /// Denominator z-degree minus numerator z-degree; the index of the first
    /// nonzero impulse-response coefficient when nonnegative.
    int relative_degree() const;

    std::complex<double> eval_w(std::complex<double> w) const;
    std::complex<double> eval_z(std::complex<double> z) const;

    RatFn inverse() const;
    RatFn operator-() const;

 private:
    Poly num_;
    Poly den_;
};

RatFn operator+(const RatFn& a, const RatFn& b);
RatFn operator-(const RatFn& a, const RatFn& b);
RatFn operator*(const RatFn& a, const RatFn& b);
RatFn operator/(const RatFn& a, const RatFn& b);
RatFn operator*(double s, const RatFn& f);
inline RatFn operator*(const RatFn& f, double s) { return s * f; }
inline RatFn operator+(const RatFn& f, double s) { return f + RatFn::constant(s); }
inline RatFn operator+(double s, const RatFn& f) { return f + s; }
inline RatFn operator-(const RatFn& f, double s) { return f - RatFn::constant(s); }
inline RatFn operator-(double s, const RatFn& f) { return RatFn::constant(s) - f; }

/// Multiply by z^{+k} (k may be negative).
RatFn shift_z(const RatFn& f, int k);

struct Classification {
    bool stable = false;
    bool minimum_phase = false;
    bool proper = false;
    bool marginal_poles = false;  // denominator roots on the unit circle
    bool marginal_zeros = false;  // numerator roots on the unit circle
};

/// Pole/zero classification of a canonical rational function. Stability and
/// minimum phase are strict: marginal (on-circle) roots fail both and are
/// reported through the marginal_* flags.
Classification classify(const RatFn& f);

/// First `count` coefficients of the formal power series of f in z^{-1},
/// by long division. Requires proper f and count >= 1.
Eigen::VectorXd impulse_prefix(const RatFn& f, int count);

}  // namespace msnet
