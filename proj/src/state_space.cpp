#include "msnet/state_space.hpp"

#include "msnet/errors.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace msnet {

namespace {

constexpr double kSteinUpdateTol = 1e-14;
constexpr double kSteinRadiusGuard = 1e-9;
constexpr double kCondLimit = 1e12;

// Pad backward-shift coefficients to a fixed length (shared z-power scaling).
Eigen::VectorXd padded(const Poly& p, int len) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(len);
    out.head(p.coeffs().size()) = p.coeffs();
    return out;
}

}  // namespace

std::complex<double> StateSpace::eval_z(std::complex<double> z) const {
    if (order() == 0) return D;
    const Eigen::MatrixXcd M =
        z * Eigen::MatrixXcd::Identity(order(), order()) - A.cast<std::complex<double>>();
    const Eigen::VectorXcd x = M.partialPivLu().solve(B.cast<std::complex<double>>());
    return (C.cast<std::complex<double>>() * x).value() + D;
}

StateSpace realize(const RatFn& f) {
    if (!f.is_zero() && f.relative_degree() < 0)
        throw std::invalid_argument("realize: improper transfer function");
    StateSpace s;
    if (f.is_zero()) {
        s.A.resize(0, 0);
        s.B.resize(0);
        s.C.resize(0);
        s.D = 0.0;
        return s;
    }
    const int n = std::max(f.num().degree(), f.den().degree());
    const Eigen::VectorXd b = padded(f.num(), n + 1);
    const Eigen::VectorXd a = padded(f.den(), n + 1);  // a[0] == 1 in canonical form
    s.A = Eigen::MatrixXd::Zero(n, n);
    s.B = Eigen::VectorXd::Zero(n);
    s.C = Eigen::RowVectorXd::Zero(n);
    s.D = b[0];
    if (n > 0) {
        s.A.row(0) = -a.tail(n).transpose();
        s.A.block(1, 0, n - 1, n - 1).setIdentity();
        s.B[0] = 1.0;
        for (int i = 1; i <= n; ++i) s.C[i - 1] = b[i] - b[0] * a[i];
    }
    return s;
}

ResolventForm resolvent_form(const StateSpace& s) {
    const int n = s.order();
    ResolventForm out;
    out.num_desc = Eigen::VectorXd::Zero(n + 1);
    out.den_desc = Eigen::VectorXd::Zero(n + 1);
    out.den_desc[0] = 1.0;
    // Leverrier-Faddeev: adj(sI - A) = sum_k R_k s^{n-1-k} with
    // R_0 = I, a_k = -tr(A R_{k-1})/k, R_k = A R_{k-1} + a_k I.
    Eigen::MatrixXd R = Eigen::MatrixXd::Identity(n, n);
    for (int k = 1; k <= n; ++k) {
        out.num_desc[k] = (s.C * R * s.B).value();
        const Eigen::MatrixXd AR = s.A * R;
        out.den_desc[k] = -AR.trace() / k;
        R = AR + out.den_desc[k] * Eigen::MatrixXd::Identity(n, n);
    }
    out.num_desc += s.D * out.den_desc;
    return out;
}

RatFn transfer_function(const StateSpace& s) {
    if (s.order() == 0) return RatFn::constant(s.D);
    const ResolventForm r = resolvent_form(s);
    return RatFn::from_z_form(
        std::vector<double>(r.num_desc.data(), r.num_desc.data() + r.num_desc.size()),
        std::vector<double>(r.den_desc.data(), r.den_desc.data() + r.den_desc.size()));
}

double spectral_radius_estimate(const Eigen::MatrixXd& A) {
    const int n = static_cast<int>(A.rows());
    if (n == 0) return 0.0;
    Eigen::VectorXd v = Eigen::VectorXd::Ones(n);
    for (int i = 0; i < n; ++i) v[i] += 0.01 * (i + 1);  // break symmetry deterministically
    v.normalize();
    double estimate = 0.0;
    // Geometric mean of the last few growth factors handles complex
    // dominant pairs whose per-step ratios oscillate.
    double log_acc = 0.0;
    int acc_count = 0;
    for (int it = 0; it < 256; ++it) {
        Eigen::VectorXd w = A * v;
        const double g = w.norm();
        if (g == 0.0) return 0.0;
        v = w / g;
        if (it >= 240) {
            log_acc += std::log(g);
            ++acc_count;
        }
        estimate = g;
    }
    return acc_count > 0 ? std::exp(log_acc / acc_count) : estimate;
}

Eigen::MatrixXd stein_solve(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Q) {
    if (A.rows() != A.cols() || Q.rows() != Q.cols() || A.rows() != Q.rows())
        throw std::invalid_argument("stein_solve: dimension mismatch");
    if (Q.rows() == 0) return Q;
    if ((Q - Q.transpose()).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + Q.cwiseAbs().maxCoeff()))
        throw std::invalid_argument("stein_solve: Q is not symmetric");
    if (spectral_radius_estimate(A) >= 1.0 - kSteinRadiusGuard)
        throw InfeasibleError("stein_solve: marginally stable A");

    Eigen::MatrixXd X = Q;
    Eigen::MatrixXd Ak = A;
    for (int it = 0; it < 128; ++it) {
        const Eigen::MatrixXd update = Ak * X * Ak.transpose();
        X += update;
        if (update.norm() <= kSteinUpdateTol * std::max(1.0, X.norm())) return X;
        Ak = (Ak * Ak).eval();
        if (!Ak.allFinite() || Ak.norm() > 1e12)
            throw InfeasibleError("stein_solve: marginally stable A");
    }
    throw InfeasibleError("stein_solve: doubling iteration did not converge");
}

double h2_norm_sq(const StateSpace& s) {
    if (s.order() == 0) return s.D * s.D;
    const Eigen::MatrixXd X = stein_solve(s.A, s.B * s.B.transpose());
    return (s.C * X * s.C.transpose()).value() + s.D * s.D;
}

double h2_norm_sq(const RatFn& f) {
    const Classification c = classify(f);
    if (!c.proper) throw std::invalid_argument("h2_norm_sq: improper function");
    if (!c.stable)
        throw std::invalid_argument(c.marginal_poles ? "h2_norm_sq: marginally stable function"
                                                     : "h2_norm_sq: unstable function");
    return h2_norm_sq(realize(f));
}

namespace {

StateSpace cascade(const StateSpace& first, const StateSpace& second) {
    StateSpace s;
    const int n1 = first.order();
    const int n2 = second.order();
    s.A = Eigen::MatrixXd::Zero(n1 + n2, n1 + n2);
    s.A.topLeftCorner(n1, n1) = first.A;
    s.A.bottomLeftCorner(n2, n1) = second.B * first.C;
    s.A.bottomRightCorner(n2, n2) = second.A;
    s.B.resize(n1 + n2);
    s.B.head(n1) = first.B;
    s.B.tail(n2) = second.B * first.D;
    s.C.resize(n1 + n2);
    s.C.head(n1) = second.D * first.C;
    s.C.tail(n2) = second.C;
    s.D = second.D * first.D;
    return s;
}

StateSpace real_pole_section(double lambda) {
    StateSpace s;
    const double root = std::sqrt(lambda * lambda - 1.0);
    s.A = Eigen::MatrixXd::Constant(1, 1, 1.0 / lambda);
    s.B = Eigen::VectorXd::Constant(1, root / lambda);
    s.C = Eigen::RowVectorXd::Constant(1, root / lambda);
    s.D = -1.0 / lambda;
    return s;
}

StateSpace conjugate_pair_section(std::complex<double> lambda) {
    // (z - lambda)(z - conj lambda) / ((1 - conj(lambda) z)(1 - lambda z)),
    // realized real and balanced so the Gramians become identity.
    const double a = lambda.real();
    const double m2 = std::norm(lambda);
    const RatFn section(Poly{1.0, -2.0 * a, m2}, Poly{m2, -2.0 * a, 1.0});
    const StateSpace raw = realize(section);

    const Eigen::MatrixXd P = stein_solve(raw.A, raw.B * raw.B.transpose());
    const Eigen::MatrixXd Q = stein_solve(raw.A.transpose(), raw.C.transpose() * raw.C);
    const Eigen::MatrixXd Lc = Eigen::LLT<Eigen::MatrixXd>(P).matrixL();
    const Eigen::MatrixXd Lo = Eigen::LLT<Eigen::MatrixXd>(Q).matrixL();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(Lo.transpose() * Lc,
                                          Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::VectorXd sigma_inv_sqrt = svd.singularValues().cwiseSqrt().cwiseInverse();
    const Eigen::MatrixXd T =
        sigma_inv_sqrt.asDiagonal() * svd.matrixU().transpose() * Lo.transpose();
    const Eigen::MatrixXd Tinv = Lc * svd.matrixV() * sigma_inv_sqrt.asDiagonal();

    StateSpace s;
    s.A = T * raw.A * Tinv;
    s.B = T * raw.B;
    s.C = raw.C * Tinv;
    s.D = raw.D;
    return s;
}

}  // namespace

StateSpace balanced_allpass(const RootSet& mirrored_poles) {
    StateSpace acc;
    acc.A.resize(0, 0);
    acc.B.resize(0);
    acc.C.resize(0);
    acc.D = 1.0;

    std::vector<std::complex<double>> poles = mirrored_poles.flat();
    for (const auto& p : poles) {
        if (classify_against_unit_circle(p) != CircleSide::Outside)
            throw InfeasibleError("balanced_allpass: pole on or inside the unit circle");
    }
    std::sort(poles.begin(), poles.end(), [](const auto& x, const auto& y) {
        if (x.real() != y.real()) return x.real() < y.real();
        return x.imag() < y.imag();
    });

    std::vector<bool> used(poles.size(), false);
    for (size_t i = 0; i < poles.size(); ++i) {
        if (used[i]) continue;
        used[i] = true;
        if (poles[i].imag() == 0.0) {
            acc = cascade(acc, real_pole_section(poles[i].real()));
            continue;
        }
        bool paired = false;
        for (size_t j = i + 1; j < poles.size(); ++j) {
            if (used[j]) continue;
            if (std::abs(poles[j] - std::conj(poles[i])) <=
                1e-9 * (1.0 + std::abs(poles[i]))) {
                used[j] = true;
                paired = true;
                break;
            }
        }
        if (!paired)
            throw std::invalid_argument("balanced_allpass: complex poles must come in conjugate pairs");
        acc = cascade(acc, conjugate_pair_section(poles[i]));
    }

    const int n = acc.order();
    Eigen::MatrixXd S(n + 1, n + 1);
    S.topLeftCorner(n, n) = acc.A;
    S.topRightCorner(n, 1) = acc.B;
    S.bottomLeftCorner(1, n) = acc.C;
    S(n, n) = acc.D;
    const double defect = (S * S.transpose() - Eigen::MatrixXd::Identity(n + 1, n + 1))
                              .cwiseAbs()
                              .maxCoeff();
    if (defect > 1e-10)
        throw std::runtime_error("balanced_allpass: orthogonality identity violated");
    return acc;
}

StateSpace inverse_realization(const StateSpace& s) {
    if (s.D == 0.0) throw std::invalid_argument("inverse_realization: D is zero");
    StateSpace inv;
    inv.A = s.A - s.B * (s.C / s.D);
    inv.B = -s.B / s.D;
    inv.C = s.C / s.D;
    inv.D = 1.0 / s.D;
    return inv;
}

Eigen::MatrixXd guarded_solve(const Eigen::MatrixXd& M, const Eigen::MatrixXd& rhs,
                              const char* label) {
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(M);
    const double rc = lu.rcond();
    if (!(rc > 1.0 / kCondLimit))
        throw InfeasibleError(std::string(label) + ": matrix numerically singular");
    return lu.solve(rhs);
}

Eigen::MatrixXd eval_at_matrix(const RatFn& f, const Eigen::MatrixXd& M) {
    if (M.rows() != M.cols()) throw std::invalid_argument("eval_at_matrix: square matrix required");
    const int n = static_cast<int>(M.rows());
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
    if (f.is_zero()) return Eigen::MatrixXd::Zero(n, n);

    const int len = std::max(f.num().degree(), f.den().degree()) + 1;
    const Eigen::VectorXd nc = padded(f.num(), len);
    const Eigen::VectorXd dc = padded(f.den(), len);
    // Shared scaling z^{len-1}: both coefficient lists read as descending
    // z-polynomials of the same degree.
    Eigen::MatrixXd num_m = nc[0] * I;
    Eigen::MatrixXd den_m = dc[0] * I;
    for (int k = 1; k < len; ++k) {
        num_m = num_m * M + nc[k] * I;
        den_m = den_m * M + dc[k] * I;
    }
    return guarded_solve(den_m, num_m, "eval_at_matrix denominator");
}

}  // namespace msnet
