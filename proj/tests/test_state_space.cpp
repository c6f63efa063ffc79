#include "msnet/random.hpp"
#include "msnet/state_space.hpp"

#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>

using namespace msnet;

namespace {

Eigen::MatrixXd random_matrix(Rng& rng, int n, double scale) {
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = scale * (2.0 * rng.next_uniform() - 1.0);
    return m;
}

// Independent oracle: truncated series sum_{k} A^k Q A^T^k.
Eigen::MatrixXd stein_series(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Q, int terms) {
    Eigen::MatrixXd x = Q;
    Eigen::MatrixXd ak = A;
    for (int k = 1; k < terms; ++k) {
        x += ak * Q * ak.transpose();
        ak = (A * ak).eval();
    }
    return x;
}

// Independent oracle: trapezoid quadrature of |f|^2 on the unit circle.
double h2_quadrature(const RatFn& f, int samples) {
    double acc = 0.0;
    for (int k = 0; k < samples; ++k) {
        const double theta = 2.0 * std::numbers::pi * k / samples;
        acc += std::norm(f.eval_z({std::cos(theta), std::sin(theta)}));
    }
    return acc / samples;
}

RatFn random_stable_ratfn(Rng& rng, int degree) {
    std::vector<std::complex<double>> poles;
    int left = degree;
    while (left > 0) {
        if (left >= 2 && rng.next_uniform() < 0.4) {
            const double r = 0.85 * rng.next_uniform();
            const double a = std::numbers::pi * rng.next_uniform();
            poles.emplace_back(r * std::cos(a), r * std::sin(a));
            poles.emplace_back(r * std::cos(a), -r * std::sin(a));
            left -= 2;
        } else {
            poles.emplace_back(1.7 * rng.next_uniform() - 0.85, 0.0);
            left -= 1;
        }
    }
    Eigen::VectorXd num(degree + 1);
    for (int i = 0; i <= degree; ++i) num[i] = 2.0 * rng.next_uniform() - 1.0;
    return RatFn(Poly(num), Poly::from_z_roots(poles, 1.0, 0));
}

RootSet make_poles(const std::vector<std::complex<double>>& poles) {
    RootSet out;
    for (const auto& p : poles)
        out.entries.push_back({p, 1, classify_against_unit_circle(p)});
    return out;
}

Eigen::MatrixXd system_matrix(const StateSpace& s) {
    const int n = s.order();
    Eigen::MatrixXd m(n + 1, n + 1);
    m.topLeftCorner(n, n) = s.A;
    m.topRightCorner(n, 1) = s.B;
    m.bottomLeftCorner(1, n) = s.C;
    m(n, n) = s.D;
    return m;
}

}  // namespace

TEST_CASE("realization of a one-pole lag") {
    const StateSpace s = realize(RatFn::from_z_form({1.0}, {1.0, -0.5}));
    REQUIRE(s.order() == 1);
    CHECK(s.A(0, 0) == doctest::Approx(0.5));
    CHECK(s.D == doctest::Approx(0.0));
}

TEST_CASE("realization of a constant is zero-state") {
    const StateSpace s = realize(RatFn::constant(3.25));
    CHECK(s.order() == 0);
    CHECK(s.D == doctest::Approx(3.25));
}

TEST_CASE("realization of the benchmark variation response has its pole at -1/3") {
    const RatFn w = RatFn::from_z_form({0.8856, -0.37638}, {1.0, 0.3333});
    const StateSpace s = realize(w);
    REQUIRE(s.order() == 1);
    CHECK(s.A(0, 0) == doctest::Approx(-0.3333));
}

TEST_CASE("realization matches the transfer function off the unit circle") {
    Rng rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        const RatFn f = random_stable_ratfn(rng, 1 + trial % 5);
        const StateSpace s = realize(f);
        for (int k = 0; k < 20; ++k) {
            const double theta = 2.0 * std::numbers::pi * (k + 0.3) / 20.0;
            const std::complex<double> z =
                1.1 * std::complex<double>(std::cos(theta), std::sin(theta));
            const std::complex<double> want = f.eval_z(z);
            CHECK(std::abs(s.eval_z(z) - want) <= 1e-8 * (1.0 + std::abs(want)));
        }
    }
}

TEST_CASE("round trip realization to transfer function") {
    Rng rng(37);
    for (int trial = 0; trial < 10; ++trial) {
        const RatFn f = random_stable_ratfn(rng, 2 + trial % 4);
        const RatFn back = transfer_function(realize(f));
        for (int k = 0; k < 8; ++k) {
            const std::complex<double> z =
                1.2 * std::complex<double>(std::cos(0.5 + k), std::sin(0.5 + k));
            CHECK(std::abs(back.eval_z(z) - f.eval_z(z)) <= 1e-8 * (1.0 + std::abs(f.eval_z(z))));
        }
    }
}

TEST_CASE("stein solve scalar cases") {
    Eigen::MatrixXd a(1, 1), q(1, 1);
    a << 0.5;
    q << 1.0;
    CHECK(stein_solve(a, q)(0, 0) == doctest::Approx(4.0 / 3.0));
    a << 0.0;
    CHECK(stein_solve(a, q)(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("stein solve matches the truncated series on random stable systems") {
    Rng rng(53);
    for (int trial = 0; trial < 10; ++trial) {
        Eigen::MatrixXd a = random_matrix(rng, 4, 0.45);
        Eigen::MatrixXd g = random_matrix(rng, 4, 1.0);
        Eigen::MatrixXd q = g * g.transpose();
        const Eigen::MatrixXd x = stein_solve(a, q);
        const Eigen::MatrixXd oracle = stein_series(a, q, 10000);
        CHECK((x - oracle).norm() <= 1e-9 * (1.0 + oracle.norm()));
        const Eigen::MatrixXd residual = x - a * x * a.transpose() - q;
        CHECK(residual.norm() <= 1e-10 * (1.0 + q.norm()));
    }
}

TEST_CASE("stein solve rejects marginally stable dynamics") {
    Eigen::MatrixXd a(1, 1), q(1, 1);
    a << 1.0 - 1e-12;
    q << 1.0;
    CHECK_THROWS(stein_solve(a, q));
}

TEST_CASE("h2 norm of pure delay and geometric lag") {
    CHECK(h2_norm_sq(RatFn::delay(1)) == doctest::Approx(1.0));
    CHECK(h2_norm_sq(RatFn(Poly({1.0}), Poly({1.0, -0.5}))) == doctest::Approx(4.0 / 3.0));
}

TEST_CASE("h2 norm rejects unstable and marginal functions") {
    CHECK_THROWS_AS((void)h2_norm_sq(RatFn::from_z_form({1.0}, {1.0, -1.1})),
                    std::invalid_argument);
    CHECK_THROWS_AS((void)h2_norm_sq(RatFn::from_z_form({1.0}, {1.0, -1.0})),
                    std::invalid_argument);
}

TEST_CASE("h2 norm agrees with quadrature on random stable systems") {
    Rng rng(71);
    for (int trial = 0; trial < 20; ++trial) {
        const RatFn f = random_stable_ratfn(rng, 1 + trial % 8);
        const double lyap = h2_norm_sq(f);
        const double quad = h2_quadrature(f, 1 << 14);
        CHECK(lyap == doctest::Approx(quad).epsilon(1e-6));
    }
}

TEST_CASE("balanced all-pass over the benchmark pole pair") {
    const StateSpace s = balanced_allpass(make_poles({{1.1, 0.0}, {1.2, 0.0}}));
    REQUIRE(s.order() == 2);
    CHECK(std::abs(s.D) == doctest::Approx(0.7576).epsilon(1e-3));
    const Eigen::MatrixXd sm = system_matrix(s);
    CHECK((sm * sm.transpose() - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() <=
          1e-10);
}

TEST_CASE("single real pole section matches its closed form") {
    const double lambda = 1.4;
    const StateSpace s = balanced_allpass(make_poles({{lambda, 0.0}}));
    CHECK(s.A(0, 0) == doctest::Approx(1.0 / lambda));
    CHECK(s.D == doctest::Approx(-1.0 / lambda));
    for (int k = 0; k < 8; ++k) {
        const std::complex<double> z(1.5 * std::cos(0.4 * k + 0.2),
                                     1.5 * std::sin(0.4 * k + 0.2));
        const std::complex<double> want = (z - lambda) / (1.0 - lambda * z);
        CHECK(std::abs(s.eval_z(z) - want) <= 1e-10 * (1.0 + std::abs(want)));
    }
}

TEST_CASE("empty pole set gives the unit gain") {
    const StateSpace s = balanced_allpass(RootSet{});
    CHECK(s.order() == 0);
    CHECK(s.D == doctest::Approx(1.0));
}

TEST_CASE("balanced all-pass rejects poles on or inside the circle") {
    CHECK_THROWS(balanced_allpass(make_poles({{0.9, 0.0}})));
    CHECK_THROWS(balanced_allpass(make_poles({{1.0, 0.0}})));
}

TEST_CASE("orthogonality and modulus for random pole sets with complex pairs") {
    Rng rng(83);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<std::complex<double>> poles;
        const int n_real = 1 + static_cast<int>(rng.next_uniform() * 2.0);
        for (int i = 0; i < n_real; ++i) {
            const double sign = rng.next_uniform() < 0.5 ? -1.0 : 1.0;
            poles.emplace_back(sign * (1.05 + rng.next_uniform()), 0.0);
        }
        if (trial % 2 == 0) {
            const double re = 0.9 + rng.next_uniform();
            const double im = 0.5 + rng.next_uniform();
            poles.emplace_back(re, im);
            poles.emplace_back(re, -im);
        }
        const StateSpace s = balanced_allpass(make_poles(poles));
        const int n = s.order();
        const Eigen::MatrixXd sm = system_matrix(s);
        CHECK((sm * sm.transpose() - Eigen::MatrixXd::Identity(n + 1, n + 1))
                  .cwiseAbs()
                  .maxCoeff() <= 1e-10);
        double dmag = 1.0;
        for (const auto& p : poles) dmag /= std::abs(p);
        CHECK(std::abs(s.D) == doctest::Approx(dmag).epsilon(1e-9));
        for (int k = 0; k < 64; ++k) {
            const double theta = 2.0 * std::numbers::pi * k / 64;
            const std::complex<double> z(std::cos(theta), std::sin(theta));
            CHECK(std::abs(s.eval_z(z)) == doctest::Approx(1.0).epsilon(1e-9));
        }
    }
}

TEST_CASE("inverse realization identities") {
    SUBCASE("unit gain") {
        StateSpace id;
        id.A.resize(0, 0);
        id.B.resize(0);
        id.C.resize(0);
        id.D = 1.0;
        const StateSpace inv = inverse_realization(id);
        CHECK(inv.D == doctest::Approx(1.0));
    }
    SUBCASE("first-order direct substitution") {
        StateSpace s;
        s.A = Eigen::MatrixXd::Constant(1, 1, 0.5);
        s.B = Eigen::VectorXd::Constant(1, 1.0);
        s.C = Eigen::RowVectorXd::Constant(1, 1.0);
        s.D = 2.0;
        const StateSpace inv = inverse_realization(s);
        CHECK(inv.A(0, 0) == doctest::Approx(0.0));
        CHECK(inv.B(0) == doctest::Approx(-0.5));
        CHECK(inv.C(0) == doctest::Approx(0.5));
        CHECK(inv.D == doctest::Approx(0.5));
    }
    SUBCASE("cascade with the inverse is the identity at samples") {
        const StateSpace s = balanced_allpass(make_poles({{1.1, 0.0}, {1.2, 0.0}}));
        const StateSpace inv = inverse_realization(s);
        const Eigen::MatrixXd want = s.A.transpose().inverse();
        CHECK((inv.A - want).cwiseAbs().maxCoeff() <= 1e-10);
        for (int k = 0; k < 12; ++k) {
            const std::complex<double> z(1.7 * std::cos(0.5 * k + 0.1),
                                         1.7 * std::sin(0.5 * k + 0.1));
            CHECK(std::abs(s.eval_z(z) * inv.eval_z(z) - 1.0) <= 1e-9);
        }
    }
    SUBCASE("zero feedthrough is rejected") {
        StateSpace s;
        s.A = Eigen::MatrixXd::Constant(1, 1, 0.5);
        s.B = Eigen::VectorXd::Constant(1, 1.0);
        s.C = Eigen::RowVectorXd::Constant(1, 1.0);
        s.D = 0.0;
        CHECK_THROWS_AS(inverse_realization(s), std::invalid_argument);
    }
}

TEST_CASE("matrix evaluation of rational functions") {
    const RatFn w = RatFn::from_z_form({0.8856, -0.37638}, {1.0, 0.3333});

    SUBCASE("constants map to scaled identity") {
        Eigen::MatrixXd m = Eigen::MatrixXd::Random(3, 3);
        const Eigen::MatrixXd got = eval_at_matrix(RatFn::constant(2.5), m);
        CHECK((got - 2.5 * Eigen::MatrixXd::Identity(3, 3)).norm() <= 1e-12);
    }
    SUBCASE("scalar argument reduces to scalar evaluation") {
        Eigen::MatrixXd m = Eigen::MatrixXd::Constant(1, 1, 1.7);
        CHECK(eval_at_matrix(w, m)(0, 0) ==
              doctest::Approx(w.eval_z(1.7).real()).epsilon(1e-12));
    }
    SUBCASE("eigenvalues transform through the function") {
        const StateSpace s = balanced_allpass(make_poles({{1.1, 0.0}, {1.2, 0.0}}));
        const Eigen::MatrixXd a_inv = s.A.inverse();
        const Eigen::MatrixXd got = eval_at_matrix(w, a_inv);
        const double trace_want = w.eval_z(1.1).real() + w.eval_z(1.2).real();
        const double det_want = w.eval_z(1.1).real() * w.eval_z(1.2).real();
        CHECK(got.trace() == doctest::Approx(trace_want).epsilon(1e-9));
        CHECK(got.determinant() == doctest::Approx(det_want).epsilon(1e-9));
    }
    SUBCASE("commutes with similarity transforms") {
        Rng rng(17);
        for (int trial = 0; trial < 10; ++trial) {
            Eigen::MatrixXd m = random_matrix(rng, 3, 0.4);
            m.diagonal().array() += 2.0;  // keep away from the poles of w
            Eigen::MatrixXd t = random_matrix(rng, 3, 0.5);
            t.diagonal().array() += 2.0;
            const Eigen::MatrixXd lhs = eval_at_matrix(w, t * m * t.inverse());
            const Eigen::MatrixXd rhs = t * eval_at_matrix(w, m) * t.inverse();
            CHECK((lhs - rhs).cwiseAbs().maxCoeff() <=
                  1e-8 * (1.0 + rhs.cwiseAbs().maxCoeff()));
        }
    }
    SUBCASE("singular denominator is refused") {
        Eigen::MatrixXd m = Eigen::MatrixXd::Constant(1, 1, -0.3333);
        CHECK_THROWS(eval_at_matrix(w, m));
    }
}
