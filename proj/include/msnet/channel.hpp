#pragma once

#include "msnet/rational.hpp"

#include <string>
#include <vector>

namespace msnet {

/// An i.i.d. integer-delay channel with a weighted receiver: pmf[i] is the
/// probability that a packet takes i steps, weights[i] the receiver gain
/// applied to data arriving with delay stamp i. Both lists share length
/// delay_bound() + 1.
struct ChannelSpec {
    Eigen::VectorXd pmf;
    Eigen::VectorXd weights;
    std::vector<std::string> warnings;

    ChannelSpec(Eigen::VectorXd pmf_in, Eigen::VectorXd weights_in);
    int delay_bound() const { return static_cast<int>(pmf.size()) - 1; }
};

/// Two-sided spectrum sum_{l=-L}^{L} r(l) z^{-l} stored through its
/// nonnegative-lag coefficients (symmetric by construction).
struct LaurentSpectrum {
    Eigen::VectorXd r;  // r[l], l = 0..L

    int range() const { return static_cast<int>(r.size()) - 1; }
    double at_angle(double theta) const;
    /// Coefficients [r(L), ..., r(0), ..., r(L)] in descending powers of z
    /// after scaling by z^L.
    Eigen::VectorXd descending_z_coeffs() const;
};

/// Mean (expected) finite impulse response of channel plus receiver:
/// sum_i weights[i] pmf[i] z^{-i}.
RatFn mean_channel(const ChannelSpec& spec);

/// Autocorrelation r(0..delay_bound) of the zero-mean channel uncertainty:
/// r(0) = sum a_i^2 p_i (1 - p_i), r(l) = -sum a_i a_{i+l} p_i p_{i+l}.
Eigen::VectorXd uncertainty_autocorrelation(const ChannelSpec& spec);

/// Energy spectral density of the channel uncertainty.
LaurentSpectrum uncertainty_spectrum(const ChannelSpec& spec);

/// Minimum-phase real polynomial Phi with Phi(z^{-1}) Phi(z) = S, leading
/// coefficient positive. Errors on a negative spectrum sample or a root
/// pair on the unit circle (marginal factor).
Poly spectral_factor(const LaurentSpectrum& S);

/// Everything derived from a channel spec: mean channel H, uncertainty
/// autocorrelation r, spectrum, spectral factor Phi and the frequency
/// response of variation W = Phi / H.
struct ChannelStats {
    RatFn H;
    Eigen::VectorXd r;
    LaurentSpectrum S;
    Poly phi;
    RatFn W;
    std::vector<std::string> warnings;
};

ChannelStats channel_stats(const ChannelSpec& spec);

/// W = Phi * H^{-1} in canonical reduced form.
RatFn variation_response(const ChannelSpec& spec);

struct SnrSample {
    double theta = 0.0;
    double snr = 0.0;
    bool unbounded = false;
};

/// Channel signal-to-noise factor 1/|W|^2 sampled at `angles` points of the
/// unit circle (normalized input spectrum factored out).
std::vector<SnrSample> snr_profile(const ChannelStats& stats, int angles);

}  // namespace msnet
