#pragma once

#include "msnet/channel.hpp"
#include "msnet/loop.hpp"
#include "msnet/rational.hpp"
#include "msnet/state_space.hpp"

#include <optional>
#include <string>
#include <vector>

namespace msnet {

/// Coprime factorization HP = N M^{-1} with stable proper N, M, X, Y
/// satisfying MX + NY = 1; M is chosen inner (all-pass), so its magnitude
/// is 1 on the unit circle and N absorbs the rest.
struct CoprimePair {
    RatFn N;
    RatFn M;
    RatFn X;
    RatFn Y;
};

/// Builds the pair for a strictly proper loop transfer function HP. Y is
/// the minimal-degree backward-shift polynomial interpolating 1/N at the
/// unstable poles (with derivative conditions at repeated poles); X is
/// recovered by exact division.
CoprimePair coprime_factorize(const RatFn& hp);

/// First tau coefficients (powers z^0 .. z^{-(tau-1)}) of the formal causal
/// expansion of the inverse of a balanced all-pass realization, from the
/// inverse realization's Markov parameters.
Poly inner_expansion_prefix(const StateSpace& inner, int tau);

/// The scalar D^{-1} C (A^{-*})^{tau-1} W(A^{-*}) W(A^{-1}) A^{-(tau-1)} C^* D^{-*}
/// for the balanced all-pass built on the given unstable poles; the loop is
/// mean-square stabilizable iff this is < 1.
double stabilizability_index(const RootSet& unstable_poles, const RatFn& W, int tau);

struct DropoutCheck {
    bool stabilizable = false;
    double threshold = 1.0;  // dropout probability must stay below this
};

/// Closed form for a pure packet-dropout channel with unit relative degree:
/// stabilizable iff p < prod |lambda_i|^{-2}.
DropoutCheck dropout_stabilizability(double p, const RootSet& unstable_poles);

struct SinglePoleCheck {
    bool stabilizable = false;
    double lhs = 0.0;  // (lambda^2 - 1) W(lambda)^2
};

/// Closed form for one real unstable pole with unit relative degree.
SinglePoleCheck single_pole_stabilizability(double lambda, const RatFn& W);

struct StabilizabilityReport {
    double index = 0.0;
    bool stabilizable = false;
    RootSet unstable_poles;
    int relative_degree_tau = 1;
    std::optional<DropoutCheck> dropout_check;      // when the channel is dropout-only
    std::optional<SinglePoleCheck> single_pole_check;  // when one real unstable pole, tau = 1
    std::vector<std::string> notes;
};

StabilizabilityReport assess_stabilizability(const RatFn& plant, const ChannelSpec& spec,
                                             const ChannelStats& stats);

struct SynthesisResult {
    CoprimePair pair;
    RatFn q_opt;
    RatFn k_opt;
    double index = 0.0;
    double achieved_margin = 0.0;  // ||W T||_2^2 under k_opt
    double z2_norm_sq = 0.0;       // series evaluation of the optimal residual
    int relative_degree_tau = 1;
};

/// H2-optimal stabilizing controller through the Youla parameter: splits
/// W (M_in^{-1} - prefix) z^tau into causal and anticausal parts, solves the
/// model-matching step in closed form and assembles K. Requires a
/// minimum-phase plant and index < 1.
SynthesisResult synthesize(const RatFn& plant, const ChannelStats& stats);

/// K = -(Y + M Q)(X - N Q)^{-1} for any stable proper parameter Q.
RatFn youla_controller(const CoprimePair& pair, const RatFn& Q);

/// Margin reached by the parameter Q_opt + kappa * Qtilde: the minimum plus
/// kappa^2 times the H2 energy of W Qtilde N z^tau. Used to place sweep
/// points at prescribed margins.
double margin_at_kappa(const SynthesisResult& synth, const RatFn& qtilde, double kappa,
                       const ChannelStats& stats);

/// Inverse of margin_at_kappa for margin targets above the index.
double kappa_for_margin(const SynthesisResult& synth, const RatFn& qtilde, double target_margin,
                        const ChannelStats& stats);

}  // namespace msnet
