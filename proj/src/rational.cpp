#include "msnet/rational.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace msnet {

namespace {

// A group of roots that the finder resolved as one (possibly multiple) root:
// members are the raw roots, the center their mean. Roots of multiplicity m
// are only determined to O(eps^{1/m}) individually but their mean is sharp,
// so matching and partial cancellation work on centers.
struct Cluster {
    std::complex<double> center;
    std::vector<std::complex<double>> members;
    double uncertainty = 0.0;
    int cancelled = 0;
    int remaining() const { return static_cast<int>(members.size()) - cancelled; }
};

struct Factored {
    std::vector<Cluster> clusters;
    double scale = 0.0;
    int valuation = 0;
};

Factored factor(const Poly& p) {
    Factored f;
    f.valuation = p.valuation();
    f.scale = p.coeffs()[f.valuation];
    if (p.degree() - f.valuation > 0) {
        for (const auto& entry : roots_in_z(p).entries) {
            Cluster c;
            c.center = entry.z;
            c.members.assign(entry.multiplicity, entry.z);
            c.uncertainty = entry.uncertainty;
            f.clusters.push_back(c);
        }
    }
    return f;
}

bool on_circle(const std::complex<double>& z) {
    return classify_against_unit_circle(z) == CircleSide::On;
}

std::vector<std::complex<double>> surviving_roots(const Factored& f) {
    std::vector<std::complex<double>> out;
    for (const auto& c : f.clusters)
        for (int i = 0; i < c.remaining(); ++i) out.push_back(c.center);
    return out;
}

}  // namespace

RatFn::RatFn(Poly num, Poly den) : num_(std::move(num)), den_(std::move(den)) {
    if (den_.is_zero()) throw std::invalid_argument("rational function with zero denominator");
    if (num_.is_zero()) {
        den_ = Poly::constant(1.0);
        return;
    }

    Factored n = factor(num_);
    Factored d = factor(den_);

    // Shared backward-shift powers cancel exactly.
    const int common_val = std::min(n.valuation, d.valuation);
    n.valuation -= common_val;
    d.valuation -= common_val;

    // Match denominator clusters against numerator clusters; matching
    // off-circle pairs cancel at the root-distance tolerance, multiplicity
    // by multiplicity.
    bool cancelled = common_val > 0;
    for (auto& dc : d.clusters) {
        if (on_circle(dc.center)) continue;
        Cluster* best = nullptr;
        double best_dist = std::numeric_limits<double>::infinity();
        for (auto& nc : n.clusters) {
            if (nc.remaining() == 0 || on_circle(nc.center)) continue;
            const double dist = std::abs(nc.center - dc.center);
            if (dist < best_dist) {
                best_dist = dist;
                best = &nc;
            }
        }
        // Cancellation tolerance, widened when the computed roots themselves
        // carry more numerical uncertainty than the nominal tolerance (deep
        // product chains with clustered roots), capped to stay far from any
        // genuine data-level distinction.
        const double scale = std::max(1.0, std::abs(dc.center));
        const double uncertainty =
            best != nullptr ? 4.0 * (dc.uncertainty + best->uncertainty) : 0.0;
        const double tol = std::min(std::max(kCancelTol * scale, uncertainty), 1e-5 * scale);
        if (best != nullptr && best_dist <= tol) {
            const int count = std::min(best->remaining(), dc.remaining());
            best->cancelled += count;
            dc.cancelled += count;
            cancelled = cancelled || count > 0;
        }
    }

    if (cancelled) {
        num_ = Poly::from_z_roots(surviving_roots(n), n.scale, n.valuation);
        den_ = Poly::from_z_roots(surviving_roots(d), d.scale, d.valuation);
    }

    const double lead = den_.coeffs()[den_.valuation()];
    if (lead != 1.0) {
        num_ = Poly(Eigen::VectorXd(num_.coeffs() / lead));
        den_ = Poly(Eigen::VectorXd(den_.coeffs() / lead));
    }
}

RatFn RatFn::constant(double c) { return RatFn(Poly::constant(c), Poly::constant(1.0)); }

RatFn RatFn::delay(int k) {
    if (k >= 0) return RatFn(Poly::delay(k), Poly::constant(1.0));
    return RatFn(Poly::constant(1.0), Poly::delay(-k));
}

RatFn RatFn::from_z_form(const std::vector<double>& num_desc, const std::vector<double>& den_desc) {
    if (num_desc.empty() || den_desc.empty())
        throw std::invalid_argument("empty coefficient list");
    // Multiply both by z^{-max(dn, dd)}: descending z coefficients become
    // backward-shift coefficients, the shorter list padded in front.
    const int dn = static_cast<int>(num_desc.size()) - 1;
    const int dd = static_cast<int>(den_desc.size()) - 1;
    const int m = std::max(dn, dd);
    Eigen::VectorXd nw = Eigen::VectorXd::Zero(m + 1);
    Eigen::VectorXd dw = Eigen::VectorXd::Zero(m + 1);
    for (int i = 0; i <= dn; ++i) nw[m - dn + i] = num_desc[i];
    for (int i = 0; i <= dd; ++i) dw[m - dd + i] = den_desc[i];
    return RatFn(Poly(std::move(nw)), Poly(std::move(dw)));
}

int RatFn::relative_degree() const {
    if (is_zero()) throw std::invalid_argument("relative degree of the zero function");
    return num_.valuation() - den_.valuation();
}

std::complex<double> RatFn::eval_w(std::complex<double> w) const {
    return num_.eval_w(w) / den_.eval_w(w);
}

std::complex<double> RatFn::eval_z(std::complex<double> z) const {
    if (z == std::complex<double>(0.0, 0.0))
        throw std::invalid_argument("eval_z at z = 0; use eval_w");
    return eval_w(1.0 / z);
}

RatFn RatFn::inverse() const {
    if (is_zero()) throw std::invalid_argument("inverse of the zero function");
    return RatFn(den_, num_);
}

RatFn RatFn::operator-() const {
    RatFn out = *this;
    out.num_ = -out.num_;
    return out;
}

RatFn operator+(const RatFn& a, const RatFn& b) {
    return RatFn(a.num() * b.den() + b.num() * a.den(), a.den() * b.den());
}

RatFn operator-(const RatFn& a, const RatFn& b) { return a + (-b); }

RatFn operator*(const RatFn& a, const RatFn& b) {
    return RatFn(a.num() * b.num(), a.den() * b.den());
}

RatFn operator/(const RatFn& a, const RatFn& b) {
    if (b.is_zero()) throw std::invalid_argument("division by the zero rational function");
    return RatFn(a.num() * b.den(), a.den() * b.num());
}

RatFn operator*(double s, const RatFn& f) { return RatFn(s * f.num(), f.den()); }

RatFn shift_z(const RatFn& f, int k) {
    if (k == 0 || f.is_zero()) return f;
    if (k > 0) return RatFn(f.num(), f.den() * Poly::delay(k));
    return RatFn(f.num() * Poly::delay(-k), f.den());
}

Classification classify(const RatFn& f) {
    Classification c;
    if (f.is_zero()) {
        c.stable = c.minimum_phase = c.proper = true;
        return c;
    }
    const RootSet poles = roots_in_z(f.den());
    const RootSet zeros = f.num().degree() > 0 ? roots_in_z(f.num()) : RootSet{};
    c.marginal_poles = poles.any(CircleSide::On);
    c.marginal_zeros = zeros.any(CircleSide::On);
    c.stable = !poles.any(CircleSide::On) && !poles.any(CircleSide::Outside);
    c.minimum_phase = !zeros.any(CircleSide::On) && !zeros.any(CircleSide::Outside);
    c.proper = f.relative_degree() >= 0;
    return c;
}

Eigen::VectorXd impulse_prefix(const RatFn& f, int count) {
    if (count < 1) throw std::invalid_argument("impulse_prefix needs count >= 1");
    if (f.is_zero()) return Eigen::VectorXd::Zero(count);
    if (f.den().valuation() != 0)
        throw std::invalid_argument("impulse_prefix of an improper function");

    const Eigen::VectorXd& n = f.num().coeffs();
    const Eigen::VectorXd& d = f.den().coeffs();
    Eigen::VectorXd h = Eigen::VectorXd::Zero(count);
    for (int k = 0; k < count; ++k) {
        double acc = (k < n.size()) ? n[k] : 0.0;
        for (int j = 1; j <= k && j < d.size(); ++j) acc -= d[j] * h[k - j];
        h[k] = acc / d[0];
    }
    return h;
}

}  // namespace msnet
