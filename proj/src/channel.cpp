#include "msnet/channel.hpp"

#include "msnet/errors.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace msnet {

namespace {
constexpr double kPmfSumTol = 1e-12;
constexpr int kSpectrumSamples = 1024;
constexpr double kSpectrumNegativeTol = -1e-10;
// Spectrum factor roots this close to the unit circle make W^{-1} useless.
constexpr double kFactorCircleBand = 1e-6;
}  // namespace

ChannelSpec::ChannelSpec(Eigen::VectorXd pmf_in, Eigen::VectorXd weights_in)
    : pmf(std::move(pmf_in)), weights(std::move(weights_in)) {
    if (pmf.size() == 0 || pmf.size() != weights.size())
        throw std::invalid_argument("channel: pmf and weights must have equal nonzero length");
    if (!pmf.allFinite() || !weights.allFinite())
        throw std::invalid_argument("channel: pmf and weights must be finite");
    for (int i = 0; i < pmf.size(); ++i) {
        if (pmf[i] < -kPmfSumTol || pmf[i] > 1.0 + kPmfSumTol)
            throw std::invalid_argument("channel: pmf entries must lie in [0, 1]");
    }
    const double total = pmf.sum();
    if (std::abs(total - 1.0) > kPmfSumTol)
        throw std::invalid_argument("channel: pmf must sum to 1 within 1e-12");
    pmf /= total;  // exact renormalization of config-file rounding
    if (delay_bound() >= 1 && weights[delay_bound()] != 0.0)
        warnings.push_back(
            "weight at the delay bound is nonzero; the dropout convention sets it to zero");
}

double LaurentSpectrum::at_angle(double theta) const {
    double acc = r.size() > 0 ? r[0] : 0.0;
    for (int l = 1; l < r.size(); ++l) acc += 2.0 * r[l] * std::cos(l * theta);
    return acc;
}

Eigen::VectorXd LaurentSpectrum::descending_z_coeffs() const {
    const int L = range();
    Eigen::VectorXd out(2 * L + 1);
    for (int l = -L; l <= L; ++l) out[L + l] = r[std::abs(l)];
    return out;
}

RatFn mean_channel(const ChannelSpec& spec) {
    Eigen::VectorXd taps = spec.weights.cwiseProduct(spec.pmf);
    Poly h(std::move(taps));
    if (h.is_zero()) throw InfeasibleError("zero mean channel: the loop cannot be closed");
    return RatFn(std::move(h), Poly::constant(1.0));
}

Eigen::VectorXd uncertainty_autocorrelation(const ChannelSpec& spec) {
    const int L = spec.delay_bound();
    const Eigen::VectorXd& p = spec.pmf;
    const Eigen::VectorXd& a = spec.weights;
    Eigen::VectorXd r = Eigen::VectorXd::Zero(L + 1);
    for (int i = 0; i <= L; ++i) r[0] += a[i] * a[i] * p[i] * (1.0 - p[i]);
    for (int l = 1; l <= L; ++l)
        for (int i = 0; i + l <= L; ++i) r[l] -= a[i] * a[i + l] * p[i] * p[i + l];
    return r;
}

LaurentSpectrum uncertainty_spectrum(const ChannelSpec& spec) {
    return LaurentSpectrum{uncertainty_autocorrelation(spec)};
}

Poly spectral_factor(const LaurentSpectrum& S) {
    const int L = S.range();
    if (L < 0) throw std::invalid_argument("spectral_factor: empty spectrum");
    const double scale = S.r.cwiseAbs().maxCoeff();
    if (scale == 0.0) return Poly();  // no uncertainty at all

    for (int k = 0; k < kSpectrumSamples; ++k) {
        const double theta = 2.0 * std::numbers::pi * k / kSpectrumSamples;
        if (S.at_angle(theta) < kSpectrumNegativeTol * std::max(1.0, scale))
            throw std::invalid_argument("spectral_factor: spectrum negative on the unit circle");
    }

    // Roots of z^L S(z) come in (rho, 1/rho) pairs; the inside members form
    // the minimum-phase factor. Zero roots reflect lag-range deficit and
    // carry no factor content.
    std::vector<std::complex<double>> roots = polynomial_roots(S.descending_z_coeffs());
    std::vector<std::complex<double>> inside;
    int effective_degree = 0;
    for (const auto& rho : roots) {
        if (std::abs(rho) < 1e-9) continue;
        ++effective_degree;
        const double dist = std::abs(std::abs(rho) - 1.0);
        if (dist <= kFactorCircleBand)
            throw InfeasibleError("spectral_factor: marginal spectral factor (root on the unit circle)");
        if (std::abs(rho) < 1.0) inside.push_back(rho);
    }
    if (static_cast<int>(inside.size()) * 2 != effective_degree)
        throw std::runtime_error("spectral_factor: root pairing failed");

    Poly unit = Poly::from_z_roots(inside, 1.0, 0);
    const double gain = std::sqrt(S.r[0] / unit.coeffs().squaredNorm());
    Poly phi = gain * unit;

    // Reconstruction check: coefficients of Phi(z^{-1}) Phi(z) match S.
    const Eigen::VectorXd& c = phi.coeffs();
    for (int l = 0; l <= L; ++l) {
        double acc = 0.0;
        for (int k = 0; k + l < c.size(); ++k) acc += c[k] * c[k + l];
        if (std::abs(acc - S.r[l]) > 1e-9 * std::max(1.0, scale))
            throw std::runtime_error("spectral_factor: reconstruction check failed");
    }
    return phi;
}

ChannelStats channel_stats(const ChannelSpec& spec) {
    ChannelStats stats;
    stats.warnings = spec.warnings;
    stats.H = mean_channel(spec);
    stats.r = uncertainty_autocorrelation(spec);
    stats.S = LaurentSpectrum{stats.r};
    stats.phi = spectral_factor(stats.S);

    const RootSet h_zeros =
        stats.H.num().degree() > 0 ? roots_in_z(stats.H.num()) : RootSet{};
    if (h_zeros.any(CircleSide::On))
        throw InfeasibleError("marginal mean channel: zero on the unit circle");
    if (stats.H.num().valuation() > 0)
        stats.warnings.push_back(
            "mean channel has no direct tap; loop relative degree is raised accordingly");

    stats.W = RatFn(stats.phi, stats.H.num());
    return stats;
}

RatFn variation_response(const ChannelSpec& spec) { return channel_stats(spec).W; }

std::vector<SnrSample> snr_profile(const ChannelStats& stats, int angles) {
    if (angles < 1) throw std::invalid_argument("snr_profile: need at least one angle");
    std::vector<SnrSample> out(angles);
    for (int k = 0; k < angles; ++k) {
        const double theta = 2.0 * std::numbers::pi * k / angles;
        out[k].theta = theta;
        const std::complex<double> z(std::cos(theta), std::sin(theta));
        if (stats.W.is_zero()) {
            out[k].unbounded = true;
            continue;
        }
        const double mag2 = std::norm(stats.W.eval_z(z));
        if (mag2 < 1e-300) {
            out[k].unbounded = true;
        } else {
            out[k].snr = 1.0 / mag2;
        }
    }
    return out;
}

}  // namespace msnet
