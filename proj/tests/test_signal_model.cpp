#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "jcaswave/signal_model.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace jcaswave;

TEST_CASE("sample_channel shape and distribution") {
    Rng rng(0);
    Channel h = sample_channel(4, 8, rng);
    CHECK(h.users() == 4);
    CHECK(h.antennas() == 8);

    // Empirical complex variance over 1e5 entries should sit within 2% of 1.
    Rng rng2(0);
    const Eigen::Index k = 100, n = 1000;
    Channel big = sample_channel(k, n, rng2);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < k; ++i)
        for (Eigen::Index j = 0; j < n; ++j) acc += std::norm(big.entries(i, j));
    const double var = acc / static_cast<double>(k * n);
    CHECK(var == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("sample_channel determinism and shape cases") {
    Rng a(42), b(42);
    Channel ha = sample_channel(3, 5, a);
    Channel hb = sample_channel(3, 5, b);
    CHECK((ha.entries - hb.entries).cwiseAbs().maxCoeff() == 0.0);

    Rng c(7);
    Channel h1 = sample_channel(1, 1, c);
    CHECK(h1.users() == 1);
    CHECK(h1.antennas() == 1);
    CHECK(std::isfinite(h1.entries(0, 0).real()));
    CHECK(std::isfinite(h1.entries(0, 0).imag()));

    Rng d(1);
    CHECK_THROWS_AS(sample_channel(0, 4, d), DimensionError);
    CHECK_THROWS_AS(sample_channel(4, 0, d), DimensionError);
}

TEST_CASE("sample_qpsk_frame alphabet and uniformity") {
    Rng rng(3);
    SymbolFrame f = sample_qpsk_frame(4, 20, rng);
    CHECK(f.users() == 4);
    CHECK(f.frame_length() == 20);
    const double a = std::sqrt(2.0) / 2.0;
    for (Eigen::Index i = 0; i < f.users(); ++i)
        for (Eigen::Index j = 0; j < f.frame_length(); ++j) {
            const Complex e = f.entries(i, j);
            CHECK(std::abs(std::abs(e) - 1.0) < 1e-14);
            CHECK(std::abs(std::abs(e.real()) - a) < 1e-15);
            CHECK(std::abs(std::abs(e.imag()) - a) < 1e-15);
        }

    // Uniform multinomial check over 1e5 draws.
    Rng rng2(5);
    SymbolFrame big = sample_qpsk_frame(100, 1000, rng2);
    int counts[4] = {0, 0, 0, 0};
    for (Eigen::Index i = 0; i < big.users(); ++i)
        for (Eigen::Index j = 0; j < big.frame_length(); ++j) {
            const Complex e = big.entries(i, j);
            const int idx = (e.real() > 0 ? 0 : 1) + (e.imag() > 0 ? 0 : 2);
            ++counts[idx];
        }
    for (int q = 0; q < 4; ++q) {
        const double freq = counts[q] / 1e5;
        CHECK(freq > 0.23);
        CHECK(freq < 0.27);
    }
}

TEST_CASE("sample_qpsk_frame determinism and errors") {
    Rng a(9), b(9);
    SymbolFrame fa = sample_qpsk_frame(2, 7, a);
    SymbolFrame fb = sample_qpsk_frame(2, 7, b);
    CHECK((fa.entries - fb.entries).cwiseAbs().maxCoeff() == 0.0);

    Rng c(1);
    CHECK_THROWS_AS(sample_qpsk_frame(0, 3, c), DimensionError);
    CHECK_THROWS_AS(sample_qpsk_frame(3, 0, c), DimensionError);
}

TEST_CASE("chirp_benchmark orthogonality and modulus") {
    const Eigen::Index n = 8, m = 20;
    const double p_t = 1.0;
    BenchmarkWaveform x0 = chirp_benchmark(n, m, p_t);
    CHECK(x0.antennas() == n);
    CHECK(x0.frame_length() == m);

    const double amp = std::sqrt(p_t / static_cast<double>(n));
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < m; ++j)
            CHECK(std::abs(std::abs(x0.entries(i, j)) - amp) < 1e-12 * amp);

    const CMat gram = x0.entries * x0.entries.adjoint();
    const double diag_target = static_cast<double>(m) * p_t / static_cast<double>(n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
            const double expected = i == j ? diag_target : 0.0;
            CHECK(std::abs(gram(i, j) - expected) < 1e-9 * diag_target);
        }
}

TEST_CASE("chirp_benchmark directional variant") {
    const Eigen::Index n = 4, m = 8;
    BenchmarkWaveform orth = chirp_benchmark(n, m, 2.0);
    BenchmarkWaveform dir0 = chirp_benchmark(n, m, 2.0, 0.0, 0.5, ChirpVariant::Directional);
    CHECK((orth.entries - dir0.entries).cwiseAbs().maxCoeff() == 0.0);

    // Orthogonal variant requires M >= N; directional has no such precondition.
    CHECK_THROWS_AS(chirp_benchmark(8, 4, 1.0), ConfigError);
    BenchmarkWaveform dir = chirp_benchmark(8, 4, 1.0, 0.3, 0.5, ChirpVariant::Directional);
    CHECK(dir.antennas() == 8);

    CHECK_THROWS_AS(chirp_benchmark(4, 8, 0.0), ParameterError);
}

TEST_CASE("steering_vector") {
    SteeringVector v0 = steering_vector(0.0, 8, 0.5);
    for (Eigen::Index i = 0; i < 8; ++i) {
        CHECK(v0.entries[i].real() == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(std::abs(v0.entries[i].imag()) < 1e-15);
    }
    CHECK(v0.entries[0] == Complex(1.0, 0.0));

    SteeringVector v90 = steering_vector(std::numbers::pi / 2.0, 2, 0.5);
    CHECK(std::abs(v90.entries[0] - Complex(1.0, 0.0)) < 1e-15);
    CHECK(std::abs(v90.entries[1] - Complex(-1.0, 0.0)) < 1e-12);

    SteeringVector v = steering_vector(0.7, 5, 0.5);
    CHECK(v.entries.squaredNorm() == doctest::Approx(5.0).epsilon(1e-12));

    CHECK_THROWS_AS(steering_vector(0.0, 0, 0.5), DimensionError);
}

TEST_CASE("expand_real block structure") {
    {
        Channel h(CMat::Constant(1, 1, Complex(1.0, 0.0)));
        CVec s = CVec::Constant(1, Complex(1.0, 0.0));
        CVec x0 = CVec::Constant(1, Complex(1.0, 0.0));
        RealExpansion e = expand_real(h, s, x0);
        RMat expected(2, 2);
        expected << 1, 0, 0, 1;
        CHECK((e.hbar - expected).cwiseAbs().maxCoeff() == 0.0);
    }
    {
        Channel h(CMat::Constant(1, 1, Complex(0.0, 1.0)));
        CVec s = CVec::Constant(1, Complex(1.0, 0.0));
        CVec x0 = CVec::Constant(1, Complex(1.0, 0.0));
        RealExpansion e = expand_real(h, s, x0);
        RMat expected(2, 2);
        expected << 0, -1, 1, 0;
        CHECK((e.hbar - expected).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("expand_real matches complex arithmetic") {
    Rng rng(11);
    Channel h = sample_channel(4, 6, rng);
    std::normal_distribution<double> dist(0.0, 1.0);
    CVec v(6);
    for (Eigen::Index i = 0; i < 6; ++i) v[i] = Complex(dist(rng), dist(rng));

    RMat hbar = expand_matrix(h.entries);
    RVec vbar = expand_vector(v);
    RVec lhs = hbar * vbar;
    RVec rhs = expand_vector(h.entries * v);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);

    CVec bad(5);
    bad.setZero();
    CVec x0 = CVec::Constant(6, Complex(1.0, 0.0));
    CHECK_THROWS_AS(expand_real(h, bad, x0), DimensionError);
}

TEST_CASE("expand_matrix is a ring homomorphism") {
    Rng rng(13);
    Channel h1 = sample_channel(4, 4, rng);
    Channel h2 = sample_channel(4, 4, rng);
    RMat lhs = expand_matrix(h1.entries) * expand_matrix(h2.entries);
    RMat rhs = expand_matrix(h1.entries * h2.entries);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("collapse_complex") {
    RVec a(2);
    a << 1, 0;
    CHECK(collapse_complex(a)[0] == Complex(1.0, 0.0));
    RVec b(2);
    b << 0, 1;
    CHECK(collapse_complex(b)[0] == Complex(0.0, 1.0));

    Rng rng(17);
    std::normal_distribution<double> dist(0.0, 1.0);
    RVec x(10);
    for (Eigen::Index i = 0; i < 10; ++i) x[i] = dist(rng);
    RVec back = expand_vector(collapse_complex(x));
    CHECK((back - x).cwiseAbs().maxCoeff() == 0.0);

    RVec odd(3);
    odd.setZero();
    CHECK_THROWS_AS(collapse_complex(odd), DimensionError);
}
