#include "msnet/polynomial.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace msnet {

namespace {

constexpr int kAberthMaxIter = 200;
constexpr double kAberthStepTol = 1e-13;
// Residual acceptance for a computed root, relative to the evaluated
// magnitude of the coefficient sum at that root.
constexpr double kRootResidualTol = 1e-9;
// Converged roots closer than this (relative) always belong to one cluster:
// below any separation the finder could resolve.
constexpr double kClusterFineTol = 1e-6;
// Candidate range for merging clusters into a multiple root; a merge is
// accepted only when the member spread matches the attainable accuracy
// O(eps^{1/m}) of a multiplicity-m root.
constexpr double kClusterCoarseTol = 2e-4;

std::complex<double> horner(const Eigen::VectorXd& desc, std::complex<double> z) {
    std::complex<double> acc(0.0, 0.0);
    for (int i = 0; i < desc.size(); ++i) acc = acc * z + desc[i];
    return acc;
}

std::complex<double> horner_derivative(const Eigen::VectorXd& desc, std::complex<double> z) {
    const int n = static_cast<int>(desc.size()) - 1;
    std::complex<double> acc(0.0, 0.0);
    for (int i = 0; i < n; ++i) acc = acc * z + desc[i] * static_cast<double>(n - i);
    return acc;
}

std::string describe(const Eigen::VectorXd& c) {
    std::ostringstream os;
    os << "[";
    for (int i = 0; i < c.size(); ++i) os << (i ? ", " : "") << c[i];
    os << "]";
    return os.str();
}

// Pair up conjugates and snap near-real roots so that a real-coefficient
// source yields an exactly conjugate-closed result.
void symmetrize_conjugates(std::vector<std::complex<double>>& roots) {
    std::vector<bool> used(roots.size(), false);
    for (size_t i = 0; i < roots.size(); ++i) {
        if (used[i]) continue;
        const double scale = 1.0 + std::abs(roots[i]);
        if (std::abs(roots[i].imag()) <= kClusterFineTol * scale) {
            roots[i] = {roots[i].real(), 0.0};
            used[i] = true;
            continue;
        }
        size_t best = i;
        double best_dist = std::numeric_limits<double>::infinity();
        for (size_t j = i + 1; j < roots.size(); ++j) {
            if (used[j]) continue;
            const double d = std::abs(roots[j] - std::conj(roots[i]));
            if (d < best_dist) {
                best_dist = d;
                best = j;
            }
        }
        if (best != i && best_dist <= 1e-4 * scale) {
            const std::complex<double> avg = 0.5 * (roots[i] + std::conj(roots[best]));
            roots[i] = avg;
            roots[best] = std::conj(avg);
            used[i] = used[best] = true;
        } else {
            used[i] = true;  // genuinely unpaired (should not happen for real input)
        }
    }
}

}  // namespace

void Poly::trim() {
    if (coeffs_.size() == 0) return;
    const double floor = kCoeffNoiseFloor * coeffs_.cwiseAbs().maxCoeff();
    int last = static_cast<int>(coeffs_.size()) - 1;
    while (last >= 0 && std::abs(coeffs_[last]) <= floor) --last;
    if (last < 0) {
        coeffs_.resize(0);
    } else if (last + 1 < coeffs_.size()) {
        coeffs_ = coeffs_.head(last + 1).eval();
    }
}

Poly::Poly(Eigen::VectorXd coeffs) : coeffs_(std::move(coeffs)) {
    if (!coeffs_.allFinite()) throw std::invalid_argument("polynomial coefficients must be finite");
    trim();
}

Poly::Poly(std::initializer_list<double> coeffs)
    : Poly(Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(coeffs.begin(),
                                                             static_cast<Eigen::Index>(coeffs.size())))) {}

Poly Poly::constant(double c) {
    Eigen::VectorXd v(1);
    v << c;
    return Poly(std::move(v));
}

Poly Poly::delay(int k) {
    if (k < 0) throw std::invalid_argument("delay power must be nonnegative");
    Eigen::VectorXd v = Eigen::VectorXd::Zero(k + 1);
    v[k] = 1.0;
    return Poly(std::move(v));
}

Poly Poly::from_z_roots(const std::vector<std::complex<double>>& z_roots, double scale,
                        int valuation) {
    // p(w) = scale * w^valuation * prod (1 - rho w), expanded with complex
    // accumulation; conjugate-closed input keeps the result real.
    std::vector<std::complex<double>> acc{1.0};
    for (const auto& rho : z_roots) {
        std::vector<std::complex<double>> next(acc.size() + 1, 0.0);
        for (size_t i = 0; i < acc.size(); ++i) {
            next[i] += acc[i];
            next[i + 1] -= acc[i] * rho;
        }
        acc = std::move(next);
    }
    Eigen::VectorXd out = Eigen::VectorXd::Zero(valuation + static_cast<int>(acc.size()));
    for (size_t i = 0; i < acc.size(); ++i) out[valuation + static_cast<int>(i)] = scale * acc[i].real();
    return Poly(std::move(out));
}

int Poly::valuation() const {
    if (is_zero()) return 0;
    const double floor = kCoeffNoiseFloor * max_abs_coeff();
    for (int i = 0; i < coeffs_.size(); ++i) {
        if (std::abs(coeffs_[i]) > floor) return i;
    }
    return 0;
}

double Poly::max_abs_coeff() const { return is_zero() ? 0.0 : coeffs_.cwiseAbs().maxCoeff(); }

std::complex<double> Poly::eval_w(std::complex<double> w) const {
    std::complex<double> acc(0.0, 0.0);
    for (int i = static_cast<int>(coeffs_.size()) - 1; i >= 0; --i) acc = acc * w + coeffs_[i];
    return acc;
}

std::complex<double> Poly::eval_z(std::complex<double> z) const {
    if (z == std::complex<double>(0.0, 0.0))
        throw std::invalid_argument("eval_z at z = 0; use eval_w");
    return eval_w(1.0 / z);
}

Poly Poly::derivative() const {
    if (coeffs_.size() <= 1) return Poly();
    Eigen::VectorXd d(coeffs_.size() - 1);
    for (int k = 1; k < coeffs_.size(); ++k) d[k - 1] = k * coeffs_[k];
    return Poly(std::move(d));
}

Poly Poly::operator-() const {
    if (is_zero()) return *this;
    return Poly(Eigen::VectorXd(-coeffs_));
}

Poly operator+(const Poly& a, const Poly& b) {
    const Eigen::Index n = std::max(a.coeffs_.size(), b.coeffs_.size());
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
    out.head(a.coeffs_.size()) += a.coeffs_;
    out.head(b.coeffs_.size()) += b.coeffs_;
    return Poly(std::move(out));
}

Poly operator-(const Poly& a, const Poly& b) { return a + (-b); }

Poly operator*(const Poly& a, const Poly& b) {
    if (a.is_zero() || b.is_zero()) return Poly();
    Eigen::VectorXd out = Eigen::VectorXd::Zero(a.coeffs_.size() + b.coeffs_.size() - 1);
    for (Eigen::Index i = 0; i < a.coeffs_.size(); ++i)
        for (Eigen::Index j = 0; j < b.coeffs_.size(); ++j) out[i + j] += a.coeffs_[i] * b.coeffs_[j];
    return Poly(std::move(out));
}

Poly operator*(double s, const Poly& p) {
    if (p.is_zero()) return p;
    return Poly(Eigen::VectorXd(s * p.coeffs_));
}

int RootSet::total_multiplicity() const {
    int n = 0;
    for (const auto& e : entries) n += e.multiplicity;
    return n;
}

std::vector<std::complex<double>> RootSet::flat() const {
    std::vector<std::complex<double>> out;
    for (const auto& e : entries)
        for (int i = 0; i < e.multiplicity; ++i) out.push_back(e.z);
    return out;
}

RootSet RootSet::filtered(CircleSide side) const {
    RootSet out;
    for (const auto& e : entries)
        if (e.side == side) out.entries.push_back(e);
    return out;
}

bool RootSet::any(CircleSide side) const {
    return std::any_of(entries.begin(), entries.end(),
                       [side](const Entry& e) { return e.side == side; });
}

CircleSide classify_against_unit_circle(std::complex<double> z) {
    const double m = std::abs(z);
    if (m > 1.0 + kCircleTol) return CircleSide::Outside;
    if (m < 1.0 - kCircleTol) return CircleSide::Inside;
    return CircleSide::On;
}

std::vector<std::complex<double>> polynomial_roots(const Eigen::VectorXd& descending_z_coeffs,
                                                   double* terminal_step) {
    Eigen::VectorXd c = descending_z_coeffs;
    if (terminal_step != nullptr) *terminal_step = 0.0;
    if (c.size() == 0) throw std::invalid_argument("root finding on the zero polynomial");
    const double floor = kCoeffNoiseFloor * c.cwiseAbs().maxCoeff();

    int lead = 0;
    while (lead < c.size() && std::abs(c[lead]) <= floor) ++lead;
    if (lead == c.size()) throw std::invalid_argument("root finding on the zero polynomial");

    int tail = static_cast<int>(c.size()) - 1;
    std::vector<std::complex<double>> roots;
    while (tail > lead && std::abs(c[tail]) <= floor) {
        roots.emplace_back(0.0, 0.0);  // root at the origin
        --tail;
    }
    Eigen::VectorXd p = c.segment(lead, tail - lead + 1);
    const int n = static_cast<int>(p.size()) - 1;
    if (n == 0) return roots;

    const Eigen::VectorXd monic = p / p[0];
    double cauchy = 0.0;
    for (int i = 1; i <= n; ++i) cauchy = std::max(cauchy, std::abs(monic[i]));
    const double radius = 1.0 + cauchy;

    std::vector<std::complex<double>> x(n);
    for (int i = 0; i < n; ++i) {
        const double angle = 2.0 * std::numbers::pi * i / n + 0.4;
        x[i] = radius * std::complex<double>(std::cos(angle), std::sin(angle));
    }

    bool converged = false;
    double best_step = std::numeric_limits<double>::infinity();
    int stalled = 0;
    for (int iter = 0; iter < kAberthMaxIter && !converged; ++iter) {
        double max_step = 0.0;
        for (int i = 0; i < n; ++i) {
            const std::complex<double> pv = horner(monic, x[i]);
            const std::complex<double> dv = horner_derivative(monic, x[i]);
            std::complex<double> newton;
            if (std::abs(dv) > 0.0) {
                newton = pv / dv;
            } else {
                newton = pv;  // flat spot: fall back to a plain residual step
            }
            std::complex<double> repulsion(0.0, 0.0);
            for (int j = 0; j < n; ++j) {
                if (j == i) continue;
                const std::complex<double> diff = x[i] - x[j];
                if (std::abs(diff) > 0.0) repulsion += 1.0 / diff;
            }
            const std::complex<double> denom = 1.0 - newton * repulsion;
            const std::complex<double> step = (std::abs(denom) > 0.0) ? newton / denom : newton;
            x[i] -= step;
            max_step = std::max(max_step, std::abs(step) / (1.0 + std::abs(x[i])));
        }
        converged = max_step <= kAberthStepTol;
        if (terminal_step != nullptr) *terminal_step = max_step;
        if (!converged) {
            // Multiple roots are attainable only to O(eps^{1/m}): the steps
            // plateau there instead of shrinking further. Accept a sustained
            // plateau at small magnitude; the residual check below still
            // guards the result, and the terminal step reports the achieved
            // accuracy to the clustering stage.
            if (max_step < 0.9 * best_step) {
                best_step = max_step;
                stalled = 0;
            } else {
                ++stalled;
            }
            converged = stalled >= 15 && max_step <= 3e-5;
        }
    }
    if (!converged) {
        throw std::runtime_error("root iteration did not converge for polynomial " +
                                 describe(descending_z_coeffs));
    }

    for (const auto& r : x) {
        // Backward-error bound: compare |p(r)| against the coefficient sum
        // evaluated at |r|, so large roots are not penalized by growth of
        // the polynomial itself.
        double scale = 1.0 + c.cwiseAbs().maxCoeff();
        double power = 1.0;
        const double mag = std::abs(r);
        for (int k = static_cast<int>(p.size()) - 1; k >= 0; --k) {
            scale += std::abs(p[k]) * power;
            power *= mag;
        }
        if (std::abs(horner(p, r)) > kRootResidualTol * scale) {
            throw std::runtime_error("root residual check failed for polynomial " +
                                     describe(descending_z_coeffs));
        }
    }

    symmetrize_conjugates(x);
    roots.insert(roots.end(), x.begin(), x.end());
    return roots;
}

namespace {

Eigen::VectorXd differentiate_descending(const Eigen::VectorXd& desc) {
    const int n = static_cast<int>(desc.size()) - 1;
    Eigen::VectorXd out(std::max(n, 1));
    if (n == 0) {
        out[0] = 0.0;
        return out;
    }
    for (int i = 0; i < n; ++i) out[i] = desc[i] * (n - i);
    return out;
}

// A cluster of multiplicity m is a zero of the (m-1)-th derivative; a few
// Newton steps there sharpen the center far below the cluster radius.
std::complex<double> polish_multiple_root(const Eigen::VectorXd& desc, int multiplicity,
                                          std::complex<double> center) {
    Eigen::VectorXd d = desc;
    for (int k = 1; k < multiplicity; ++k) d = differentiate_descending(d);
    std::complex<double> z = center;
    for (int it = 0; it < 5; ++it) {
        const std::complex<double> value = horner(d, z);
        const std::complex<double> slope = horner_derivative(d, z);
        if (std::abs(slope) == 0.0) break;
        const std::complex<double> step = value / slope;
        z -= step;
        if (std::abs(step) <= 1e-15 * (1.0 + std::abs(z))) break;
    }
    // reject a polish that ran away from the cluster
    if (std::abs(z - center) > kClusterCoarseTol * (1.0 + std::abs(center))) return center;
    return z;
}

// Largest distance from the true root at which the finder can land for a
// multiplicity-m root at c: (backward error * m! / |p^(m)(c)|)^{1/m}.
double attainable_radius(const Eigen::VectorXd& desc, int m, std::complex<double> c) {
    const int n = static_cast<int>(desc.size()) - 1;
    double backward = 0.0;
    double power = 1.0;
    const double mag = std::abs(c);
    for (int k = n; k >= 0; --k) {
        backward += std::abs(desc[k]) * power;
        power *= mag;
    }
    backward *= 64.0 * std::numeric_limits<double>::epsilon();
    Eigen::VectorXd d = desc;
    double mfact = 1.0;
    for (int k = 1; k <= m; ++k) {
        d = differentiate_descending(d);
        mfact *= k;
    }
    const double lead = std::abs(horner(d, c)) / mfact;
    if (lead <= 1e-300) return std::numeric_limits<double>::infinity();
    return std::pow(backward / lead, 1.0 / m);
}

struct RootCluster {
    std::vector<std::complex<double>> members;
    std::complex<double> center;
};

std::complex<double> cluster_mean(const std::vector<std::complex<double>>& v) {
    std::complex<double> sum(0.0, 0.0);
    for (const auto& z : v) sum += z;
    return sum / static_cast<double>(v.size());
}

}  // namespace

RootSet roots_in_z(const Poly& p) {
    if (p.is_zero()) throw std::invalid_argument("roots_in_z of the zero polynomial");
    RootSet out;
    if (p.degree() == 0) return out;
    // The coefficient list read in order is the z-polynomial z^deg * p in
    // descending powers of z.
    double terminal_step = 0.0;
    const std::vector<std::complex<double>> flat = polynomial_roots(p.coeffs(), &terminal_step);

    // Stage one: group roots below any resolvable separation.
    std::vector<RootCluster> clusters;
    std::vector<bool> used(flat.size(), false);
    for (size_t i = 0; i < flat.size(); ++i) {
        if (used[i]) continue;
        RootCluster c;
        c.members.push_back(flat[i]);
        used[i] = true;
        for (size_t j = i + 1; j < flat.size(); ++j) {
            if (used[j]) continue;
            if (std::abs(flat[j] - flat[i]) <= kClusterFineTol * (1.0 + std::abs(flat[i]))) {
                c.members.push_back(flat[j]);
                used[j] = true;
            }
        }
        c.center = cluster_mean(c.members);
        if (c.members.size() > 1)
            c.center =
                polish_multiple_root(p.coeffs(), static_cast<int>(c.members.size()), c.center);
        clusters.push_back(std::move(c));
    }

    // Stage two: merge nearby clusters when the union is consistent with one
    // multiple root at working precision; genuinely distinct roots separated
    // by more than the attainable radius stay apart.
    bool merged = true;
    while (merged) {
        merged = false;
        for (size_t i = 0; i < clusters.size() && !merged; ++i) {
            for (size_t j = i + 1; j < clusters.size() && !merged; ++j) {
                const double scale = 1.0 + std::abs(clusters[i].center);
                if (std::abs(clusters[i].center - clusters[j].center) >
                    kClusterCoarseTol * scale)
                    continue;
                std::vector<std::complex<double>> union_members = clusters[i].members;
                union_members.insert(union_members.end(), clusters[j].members.begin(),
                                     clusters[j].members.end());
                const int m = static_cast<int>(union_members.size());
                const std::complex<double> center =
                    polish_multiple_root(p.coeffs(), m, cluster_mean(union_members));
                // Admit as one multiple root anything within the larger of
                // the theoretical attainable radius and the accuracy the
                // iteration actually reached.
                const double radius =
                    std::max({4.0 * attainable_radius(p.coeffs(), m, center),
                              6.0 * terminal_step * scale, 1e-11 * scale});
                bool consistent = true;
                for (const auto& z : union_members)
                    consistent = consistent && std::abs(z - center) <= radius;
                if (consistent) {
                    clusters[i].members = std::move(union_members);
                    clusters[i].center = center;
                    clusters.erase(clusters.begin() + static_cast<long>(j));
                    merged = true;
                }
            }
        }
    }

    for (const auto& c : clusters) {
        RootSet::Entry e;
        e.multiplicity = static_cast<int>(c.members.size());
        e.z = c.center;
        if (std::abs(e.z.imag()) <= kClusterFineTol * (1.0 + std::abs(e.z)))
            e.z = {e.z.real(), 0.0};
        e.side = classify_against_unit_circle(e.z);
        e.uncertainty = attainable_radius(p.coeffs(), e.multiplicity, e.z);
        out.entries.push_back(e);
    }
    return out;
}

}  // namespace msnet
