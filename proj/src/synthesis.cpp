#include "msnet/synthesis.hpp"

#include "msnet/errors.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace msnet {

namespace {

constexpr int kCircleSamples = 64;
constexpr double kInnerTol = 1e-9;
constexpr double kBezoutTol = 1e-8;

std::complex<double> unit_circle(int k, int total) {
    const double theta = 2.0 * std::numbers::pi * k / total;
    return {std::cos(theta), std::sin(theta)};
}

RatFn allpass_from_poles(const RootSet& poles) {
    RatFn m = RatFn::constant(1.0);
    std::vector<std::complex<double>> flat = poles.flat();
    std::vector<bool> used(flat.size(), false);
    for (size_t i = 0; i < flat.size(); ++i) {
        if (used[i]) continue;
        used[i] = true;
        const std::complex<double> lam = flat[i];
        if (std::abs(lam.imag()) == 0.0) {
            // (z - lambda) / (1 - lambda z) scaled by z^{-1} on both sides
            m = m * RatFn(Poly{1.0, -lam.real()}, Poly{-lam.real(), 1.0});
            continue;
        }
        bool paired = false;
        for (size_t j = i + 1; j < flat.size(); ++j) {
            if (!used[j] && std::abs(flat[j] - std::conj(lam)) <= 1e-9 * (1.0 + std::abs(lam))) {
                used[j] = true;
                paired = true;
                break;
            }
        }
        if (!paired)
            throw std::invalid_argument("coprime_factorize: complex poles must be conjugate-closed");
        const double a = lam.real();
        const double m2 = std::norm(lam);
        m = m * RatFn(Poly{1.0, -2.0 * a, m2}, Poly{m2, -2.0 * a, 1.0});
    }
    return m;
}

RatFn derivative_w(const RatFn& f) {
    return RatFn(f.num().derivative() * f.den() - f.num() * f.den().derivative(),
                 f.den() * f.den());
}

double binomial(int n, int k) {
    double acc = 1.0;
    for (int i = 0; i < k; ++i) acc = acc * (n - i) / (i + 1);
    return acc;
}

double falling_factorial(int k, int s) {
    double acc = 1.0;
    for (int i = 0; i < s; ++i) acc *= (k - i);
    return acc;
}

// Minimal-degree backward-shift polynomial Y with N*Y - 1 vanishing to the
// multiplicity order at each unstable pole (conditions taken in w = 1/z).
Poly interpolate_bezout_y(const RatFn& n_fn, const RootSet& poles) {
    const int q = poles.total_multiplicity();
    if (q == 0) return Poly();

    int max_mult = 1;
    for (const auto& e : poles.entries) max_mult = std::max(max_mult, e.multiplicity);
    std::vector<RatFn> n_derivs{n_fn};
    for (int s = 1; s < max_mult; ++s) n_derivs.push_back(derivative_w(n_derivs.back()));

    Eigen::MatrixXcd mat = Eigen::MatrixXcd::Zero(q, q);
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(q);
    int row = 0;
    for (const auto& e : poles.entries) {
        const std::complex<double> w = 1.0 / e.z;
        if (std::abs(n_fn.eval_w(w)) < 1e-12)
            throw InfeasibleError(
                "coprime_factorize: plant zero coincides with an unstable pole");
        for (int j = 0; j < e.multiplicity; ++j, ++row) {
            rhs[row] = (j == 0) ? 1.0 : 0.0;
            for (int k = 0; k < q; ++k) {
                std::complex<double> acc(0.0, 0.0);
                for (int s = 0; s <= std::min(j, k); ++s) {
                    acc += binomial(j, s) * n_derivs[j - s].eval_w(w) *
                           falling_factorial(k, s) * std::pow(w, k - s);
                }
                mat(row, k) = acc;
            }
        }
    }

    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(mat, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const double cond = svd.singularValues()(0) / svd.singularValues()(q - 1);
    if (!(cond < 1e12)) {
        std::ostringstream os;
        os << "coprime_factorize: interpolation system singular (condition " << cond << ")";
        throw InfeasibleError(os.str());
    }
    const Eigen::VectorXcd y = svd.solve(rhs);

    Eigen::VectorXd coeffs(q);
    for (int k = 0; k < q; ++k) {
        if (std::abs(y[k].imag()) > 1e-7 * (1.0 + std::abs(y[k])))
            throw std::runtime_error("coprime_factorize: interpolation lost realness");
        coeffs[k] = y[k].real();
    }
    return Poly(std::move(coeffs));
}

void check_inner(const RatFn& m) {
    for (int k = 0; k < kCircleSamples; ++k) {
        const double mag = std::abs(m.eval_z(unit_circle(k, kCircleSamples)));
        if (std::abs(mag - 1.0) > kInnerTol)
            throw std::runtime_error("coprime_factorize: M failed the all-pass check");
    }
}

void check_bezout(const CoprimePair& pair) {
    for (int k = 0; k < kCircleSamples; ++k) {
        const std::complex<double> z = unit_circle(k, kCircleSamples);
        const std::complex<double> residual =
            pair.M.eval_z(z) * pair.X.eval_z(z) + pair.N.eval_z(z) * pair.Y.eval_z(z) - 1.0;
        if (std::abs(residual) > kBezoutTol)
            throw std::runtime_error("coprime_factorize: Bezout residual too large");
    }
}

void require_stable_proper(const RatFn& f, const char* name) {
    const Classification c = classify(f);
    if (!c.stable || !c.proper) {
        std::ostringstream os;
        os << name << " is not in the stable proper class (stable=" << c.stable
           << ", proper=" << c.proper << ", marginal_poles=" << c.marginal_poles << ")";
        throw std::runtime_error(os.str());
    }
}

}  // namespace

CoprimePair coprime_factorize(const RatFn& hp) {
    if (hp.is_zero() || hp.relative_degree() < 1)
        throw std::invalid_argument("coprime_factorize: loop transfer must be strictly proper");
    const RootSet poles = roots_in_z(hp.den());
    if (poles.any(CircleSide::On))
        throw InfeasibleError("coprime_factorize: pole on the unit circle");
    const RootSet unstable = poles.filtered(CircleSide::Outside);

    CoprimePair pair;
    pair.M = allpass_from_poles(unstable);
    pair.N = hp * pair.M;
    require_stable_proper(pair.N, "N");

    const Poly y = interpolate_bezout_y(pair.N, unstable);
    pair.Y = RatFn(y, Poly::constant(1.0));
    pair.X = (1.0 - pair.N * pair.Y) / pair.M;
    require_stable_proper(pair.X, "X");

    check_inner(pair.M);
    check_bezout(pair);
    return pair;
}

Poly inner_expansion_prefix(const StateSpace& inner, int tau) {
    if (tau < 1) throw std::invalid_argument("inner_expansion_prefix: tau must be >= 1");
    const StateSpace inv = inverse_realization(inner);
    Eigen::VectorXd coeffs(tau);
    coeffs[0] = inv.D;
    Eigen::VectorXd x = inv.B;
    for (int k = 1; k < tau; ++k) {
        coeffs[k] = inv.order() > 0 ? (inv.C * x).value() : 0.0;
        x = inv.A * x;
    }
    return Poly(std::move(coeffs));
}

double stabilizability_index(const RootSet& unstable_poles, const RatFn& W, int tau) {
    if (tau < 1) throw std::invalid_argument("stabilizability_index: tau must be >= 1");
    if (!W.is_zero()) {
        const Classification cw = classify(W);
        if (!cw.stable || !cw.proper)
            throw std::invalid_argument("stabilizability_index: W must be stable and proper");
    }
    const StateSpace inner = balanced_allpass(unstable_poles);
    const int n = inner.order();
    if (n == 0) return 0.0;

    // v = W(A^{-1}) A^{-(tau-1)} C^T D^{-1}, accumulated by repeated solves.
    Eigen::VectorXd v = inner.C.transpose() / inner.D;
    for (int k = 1; k < tau; ++k)
        v = guarded_solve(inner.A, v, "stabilizability_index: A_in");
    const Eigen::MatrixXd a_inv = guarded_solve(
        inner.A, Eigen::MatrixXd::Identity(n, n), "stabilizability_index: A_in");
    const Eigen::MatrixXd w_at = eval_at_matrix(W, a_inv);
    v = (w_at * v).eval();
    return v.squaredNorm();
}

DropoutCheck dropout_stabilizability(double p, const RootSet& unstable_poles) {
    if (p < 0.0 || p >= 1.0)
        throw std::invalid_argument("dropout_stabilizability: p must lie in [0, 1)");
    DropoutCheck out;
    out.threshold = 1.0;
    for (const auto& e : unstable_poles.entries)
        for (int i = 0; i < e.multiplicity; ++i) out.threshold /= std::norm(e.z);
    out.stabilizable = p < out.threshold;
    return out;
}

SinglePoleCheck single_pole_stabilizability(double lambda, const RatFn& W) {
    if (std::abs(lambda) <= 1.0)
        throw std::invalid_argument("single_pole_stabilizability: |lambda| must exceed 1");
    SinglePoleCheck out;
    const double w_val = W.is_zero() ? 0.0 : W.eval_z(lambda).real();
    out.lhs = (lambda * lambda - 1.0) * w_val * w_val;
    out.stabilizable = out.lhs < 1.0;
    return out;
}

StabilizabilityReport assess_stabilizability(const RatFn& plant, const ChannelSpec& spec,
                                             const ChannelStats& stats) {
    validate_plant_channel(plant, stats.H);
    const RatFn hp = stats.H * plant;
    const int tau = hp.relative_degree();
    if (tau < 1) throw std::invalid_argument("loop transfer must be strictly proper");

    StabilizabilityReport report;
    report.relative_degree_tau = tau;
    if (tau != plant.relative_degree())
        report.notes.push_back("loop relative degree differs from the plant's (mean channel "
                               "has no direct tap)");

    const RootSet poles = roots_in_z(hp.den());
    if (poles.any(CircleSide::On))
        throw InfeasibleError("stabilizability: pole on the unit circle");
    report.unstable_poles = poles.filtered(CircleSide::Outside);
    for (const auto& e : report.unstable_poles.entries) {
        if (e.z.imag() != 0.0) {
            report.notes.push_back(
                "complex conjugate unstable poles handled via real second-order sections");
            break;
        }
    }

    report.index = stabilizability_index(report.unstable_poles, stats.W, tau);
    report.stabilizable = report.index < 1.0;

    const bool dropout_only =
        spec.delay_bound() >= 1 && spec.weights.tail(spec.delay_bound()).isZero(0.0);
    if (dropout_only && tau == 1)
        report.dropout_check = dropout_stabilizability(1.0 - spec.pmf[0], report.unstable_poles);
    if (tau == 1 && report.unstable_poles.entries.size() == 1 &&
        report.unstable_poles.entries[0].multiplicity == 1 &&
        report.unstable_poles.entries[0].z.imag() == 0.0)
        report.single_pole_check =
            single_pole_stabilizability(report.unstable_poles.entries[0].z.real(), stats.W);
    return report;
}

namespace {

// The expansion steps guarantee vanishing leading numerator coefficients in
// exact arithmetic; zero out the rounding residue they leave behind so the
// backward-shift cancellations stay exact.
RatFn with_zeroed_heads(const RatFn& f, int count) {
    if (f.is_zero()) return f;
    Eigen::VectorXd n = f.num().coeffs();
    const double scale = n.cwiseAbs().maxCoeff();
    bool changed = false;
    for (int k = 0; k < count && k < n.size(); ++k) {
        if (std::abs(n[k]) > 1e-7 * scale) break;
        if (n[k] != 0.0) {
            n[k] = 0.0;
            changed = true;
        }
    }
    if (!changed) return f;
    return RatFn(Poly(std::move(n)), f.den());
}

// A difference of two expressions for the same half of the splitting is
// mathematically zero; recognize the rounding residue as zero by comparing
// against the operand scale.
RatFn zero_if_negligible(const RatFn& f, double operand_scale) {
    if (f.is_zero()) return f;
    if (f.num().max_abs_coeff() <= 1e-9 * std::max(1.0, operand_scale)) return RatFn();
    return f;
}

// Strictly anticausal half of the model-matching error, as a rational
// function: Z2 = sum_{k>=1} (v^T (A^T)^k B D^{-1}) z^k.
RatFn anticausal_residual(const StateSpace& inner, const Eigen::VectorXd& v) {
    const int n = inner.order();
    if (n == 0) return RatFn();
    StateSpace aux;
    aux.A = inner.A.transpose();
    aux.B = inner.B / inner.D;
    aux.C = (inner.A * v).transpose();
    aux.D = 0.0;
    const ResolventForm form = resolvent_form(aux);
    // The resolvent variable here is w = z^{-1}: reverse into ascending form.
    return RatFn(Poly(Eigen::VectorXd(form.num_desc.reverse())),
                 Poly(Eigen::VectorXd(form.den_desc.reverse())));
}

double anticausal_energy(const StateSpace& inner, const Eigen::VectorXd& v) {
    const int n = inner.order();
    if (n == 0) return 0.0;
    double acc = 0.0;
    Eigen::VectorXd x = inner.B / inner.D;
    for (int k = 1; k <= 100000; ++k) {
        x = (inner.A.transpose() * x).eval();
        const double term = v.dot(x);
        acc += term * term;
        if (k > n && term * term <= 1e-12 * std::max(acc, 1e-300)) break;
    }
    return acc;
}

}  // namespace

SynthesisResult synthesize(const RatFn& plant, const ChannelStats& stats) {
    validate_plant_channel(plant, stats.H);
    const RatFn hp = stats.H * plant;
    const Classification hp_class = classify(hp);
    if (!hp_class.minimum_phase)
        throw InfeasibleError("synthesize: plant (with mean channel) must be minimum phase");
    if (!stats.W.is_zero()) {
        const Classification w_class = classify(stats.W);
        if (!w_class.minimum_phase)
            throw InfeasibleError("synthesize: spectral factor is not strictly minimum phase");
        if (!w_class.proper)
            throw InfeasibleError("synthesize: variation response is improper");
    }

    SynthesisResult out;
    out.relative_degree_tau = hp.relative_degree();
    const int tau = out.relative_degree_tau;
    out.pair = coprime_factorize(hp);

    const RootSet unstable = roots_in_z(hp.den()).filtered(CircleSide::Outside);
    out.index = stabilizability_index(unstable, stats.W, tau);
    if (out.index >= 1.0)
        throw InfeasibleError("synthesize: not mean-square input-output stabilizable (index >= 1)");

    const StateSpace inner = balanced_allpass(unstable);
    const Poly prefix = inner_expansion_prefix(inner, tau);

    // v = W(A^{-1}) A^{-(tau-1)} C^T D^{-1} drives both the index and the
    // anticausal residual.
    Eigen::VectorXd v = Eigen::VectorXd::Zero(inner.order());
    if (inner.order() > 0) {
        v = inner.C.transpose() / inner.D;
        for (int k = 1; k < tau; ++k) v = guarded_solve(inner.A, v, "synthesize: A_in");
        const Eigen::MatrixXd a_inv = guarded_solve(
            inner.A, Eigen::MatrixXd::Identity(inner.order(), inner.order()), "synthesize: A_in");
        v = (eval_at_matrix(stats.W, a_inv) * v).eval();
    }

    const RatFn z2 = anticausal_residual(inner, v);
    out.z2_norm_sq = anticausal_energy(inner, v);

    const RatFn expansion_error = with_zeroed_heads(
        out.pair.M.inverse() - RatFn(prefix, Poly::constant(1.0)), tau);
    const RatFn causal_shifted = stats.W * shift_z(expansion_error, tau);
    const RatFn z1 = zero_if_negligible(
        causal_shifted - z2,
        std::max(causal_shifted.num().max_abs_coeff(), z2.num().max_abs_coeff()));
    if (!z1.is_zero()) require_stable_proper(z1, "synthesize: causal part Z1");

    RatFn correction;  // W^{-1} Z1 z^{-tau}
    if (!z1.is_zero()) correction = stats.W.inverse() * shift_z(z1, -tau);
    const double numerator_scale =
        std::max({out.pair.X.num().max_abs_coeff(), prefix.max_abs_coeff(),
                  correction.num().max_abs_coeff()});
    const RatFn numerator = zero_if_negligible(
        with_zeroed_heads(out.pair.X - RatFn(prefix, Poly::constant(1.0)) - correction, tau),
        numerator_scale);
    out.q_opt = numerator / out.pair.N;
    require_stable_proper(out.q_opt, "synthesize: optimal parameter Q");

    out.k_opt = youla_controller(out.pair, out.q_opt);

    const RatFn hkp = hp * out.k_opt;
    const RatFn t = hkp / (1.0 - hkp);
    out.achieved_margin = h2_norm_sq(stats.W * t);
    return out;
}

RatFn youla_controller(const CoprimePair& pair, const RatFn& q) {
    if (!q.is_zero()) {
        const Classification c = classify(q);
        if (!c.stable || !c.proper)
            throw std::invalid_argument("youla_controller: Q must be stable and proper");
    }
    const RatFn denom = pair.X - pair.N * q;
    if (denom.is_zero()) throw std::invalid_argument("youla_controller: X - N Q vanishes");
    return -(pair.Y + pair.M * q) / denom;
}

double margin_at_kappa(const SynthesisResult& synth, const RatFn& qtilde, double kappa,
                       const ChannelStats& stats) {
    if (kappa == 0.0) return synth.index;
    const RatFn direction = shift_z(stats.W * qtilde * synth.pair.N, synth.relative_degree_tau);
    return synth.index + kappa * kappa * h2_norm_sq(direction);
}

double kappa_for_margin(const SynthesisResult& synth, const RatFn& qtilde, double target_margin,
                        const ChannelStats& stats) {
    if (target_margin < synth.index)
        throw std::invalid_argument("kappa_for_margin: target below the achievable minimum");
    const RatFn direction = shift_z(stats.W * qtilde * synth.pair.N, synth.relative_degree_tau);
    const double energy = h2_norm_sq(direction);
    if (energy <= 0.0) throw std::invalid_argument("kappa_for_margin: direction has no effect");
    return std::sqrt((target_margin - synth.index) / energy);
}

}  // namespace msnet
