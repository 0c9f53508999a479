#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "moyal/dynamics.hpp"
#include "moyal/gaussian.hpp"
#include "moyal/observables.hpp"
#include "moyal/rng.hpp"
#include "oracle.hpp"

using namespace moyal;

namespace {

ModelParams unit_params(int cutoff, std::uint64_t seed = 42) {
    ModelParams p;
    p.theta = 1.0;
    p.mass_sq = 1.0;
    p.cutoff = cutoff;
    p.seed = seed;
    return p;
}

TimeSeries make_series(const std::vector<double>& vals, double dt = 1.0, double burn_in = 0.0) {
    TimeSeries ts;
    ts.name = "test";
    ts.burn_in = burn_in;
    for (std::size_t i = 0; i < vals.size(); ++i) {
        ts.times.push_back(i * dt);
        ts.values.push_back(vals[i]);
    }
    return ts;
}

} // namespace

TEST_CASE("time average") {
    SUBCASE("constant series") {
        std::vector<double> vals(640, 3.25);
        auto r = time_average(make_series(vals));
        CHECK(r.mean == doctest::Approx(3.25));
        CHECK(r.se == doctest::Approx(0.0));
    }

    SUBCASE("iid normals obey the CLT") {
        std::mt19937 gen(5);
        std::normal_distribution<double> normal;
        std::vector<double> vals(10000);
        for (auto& v : vals) v = normal(gen);
        auto r = time_average(make_series(vals));
        CHECK(std::abs(r.mean) <= 3.0 * r.se);
        // for iid data the batch-means SE estimates 1/sqrt(n)
        CHECK(r.se == doctest::Approx(1.0 / std::sqrt(10000.0)).epsilon(0.4));
    }

    SUBCASE("correlated OU series inflates the SE by the autocorrelation time") {
        // scalar OU with rate a sampled at dt: tau_int = 1/(2a) in time,
        // so var(mean) ~ 2 tau variance / T; check within a factor 2
        const double a = 1.0, dt = 0.05, t_total = 4000.0;
        const int n = static_cast<int>(t_total / dt);
        std::mt19937 gen(7);
        std::normal_distribution<double> normal;
        std::vector<double> vals(n);
        double z = normal(gen);
        double decay = std::exp(-a * dt);
        double kick = std::sqrt(1.0 - decay * decay);
        for (int i = 0; i < n; ++i) {
            vals[i] = z;
            z = decay * z + kick * normal(gen);
        }
        auto r = time_average(make_series(vals, dt));
        double predicted_se = std::sqrt(2.0 * (0.5 / a) / t_total); // variance 1
        CHECK(r.se > predicted_se / 2.0);
        CHECK(r.se < predicted_se * 2.0);
    }

    SUBCASE("insufficient data rejected") {
        std::vector<double> vals(10, 1.0);
        CHECK_THROWS_AS(time_average(make_series(vals)), std::invalid_argument);
        TimeSeries few = make_series(std::vector<double>(100, 1.0));
        few.n_batches = 8; // below the 20-batch floor
        CHECK_THROWS_AS(time_average(few), std::invalid_argument);
    }

    SUBCASE("batch-means SE shrinks like T^{-1/2}") {
        // average the measured log-log slope over independent OU series;
        // a single series' SE estimate carries ~1/sqrt(2 n_batches)
        // relative noise
        const double a = 1.0, dt = 0.05;
        std::mt19937 gen(11);
        std::normal_distribution<double> normal;
        double slope_sum = 0.0;
        const int reps = 40;
        for (int r = 0; r < reps; ++r) {
            auto run = [&](double t_total) {
                int n = static_cast<int>(t_total / dt);
                std::vector<double> vals(n);
                double z = normal(gen);
                double decay = std::exp(-a * dt);
                double kick = std::sqrt(1.0 - decay * decay);
                for (int i = 0; i < n; ++i) {
                    vals[i] = z;
                    z = decay * z + kick * normal(gen);
                }
                return time_average(make_series(vals, dt)).se;
            };
            double se1 = run(500.0);
            double se4 = run(2000.0);
            slope_sum += std::log(se4 / se1) / std::log(4.0);
        }
        double slope = slope_sum / reps;
        CHECK(slope > -0.6);
        CHECK(slope < -0.4);
    }
}

TEST_CASE("renormalized trace phi^4") {
    ModelParams p = unit_params(4, 13);
    WeightTable w(p);

    SUBCASE("phi = 0 leaves only the constant counterterm") {
        HermitianField zero(4);
        double expected = 0.0;
        for (int m = 0; m <= 4; ++m) expected += 2.0 * w.tail1(m) * w.tail1(m);
        CHECK(renormalized_trace_phi4(zero, w) == doctest::Approx(expected).epsilon(1e-14));
    }

    SUBCASE("real for random Hermitian phi") {
        std::mt19937 gen(17);
        std::normal_distribution<double> normal;
        for (int trial = 0; trial < 20; ++trial) {
            HermitianField phi(4);
            for (int i = 0; i <= 4; ++i) {
                phi(i, i) = normal(gen);
                for (int j = i + 1; j <= 4; ++j) {
                    phi(i, j) = Complex(normal(gen), normal(gen));
                    phi(j, i) = std::conj(phi(i, j));
                }
            }
            // realness is structural: the implementation returns the real
            // part; verify against an explicitly complex evaluation
            CMatrix phi2 = phi.m * phi.m;
            Complex tr4 = trace_pair(phi2, phi2);
            CHECK(std::abs(tr4.imag()) < 1e-10);
        }
    }

    SUBCASE("diagonal-phase invariance") {
        std::mt19937 gen(19);
        std::normal_distribution<double> normal;
        HermitianField phi(4);
        for (int i = 0; i <= 4; ++i) {
            phi(i, i) = normal(gen);
            for (int j = i + 1; j <= 4; ++j) {
                phi(i, j) = Complex(normal(gen), normal(gen));
                phi(j, i) = std::conj(phi(i, j));
            }
        }
        double base = renormalized_trace_phi4(phi, w);
        CMatrix u = CMatrix::Zero(5, 5);
        for (int i = 0; i <= 4; ++i) u(i, i) = std::exp(Complex(0.0, 0.7 * i - 1.1));
        HermitianField rotated(CMatrix(u * phi.m * u.adjoint()));
        CHECK(renormalized_trace_phi4(rotated, w) == doctest::Approx(base).epsilon(1e-12));
    }

    SUBCASE("free-field mean at N = 1 from the pairing oracle") {
        ModelParams p1 = unit_params(1, 23);
        WeightTable w1(p1);
        // E[:tr(phi^4):] for phi = z: oracle evaluation of
        // E[tr z^4] - 4 E[tr(<z^2> z^2)] + 2 tr(<z^2>^2)
        double e_tr_z4 = 0.0;
        for (int m = 0; m <= 1; ++m)
            for (int n = 0; n <= 1; ++n) {
                std::vector<oracle::Factor> fs = {{0, 2}, {2, 1}, {1, 3}, {3, 0}};
                e_tr_z4 += oracle::summed_moment(fs, {m, n, -1, -1}, 1, p1);
            }
        double sum_tails = 0.0;
        for (int m = 0; m <= 1; ++m) sum_tails += w1.tail1(m) * w1.tail1(m);
        double expected = e_tr_z4 - 4.0 * sum_tails + 2.0 * sum_tails;

        const int n_samples = 20000;
        double acc = 0.0, accsq = 0.0;
        for (int i = 0; i < n_samples; ++i) {
            ModelParams ps = p1;
            ps.seed = mix64(p1.seed + 0x9e3779b97f4a7c15ull * (i + 1));
            OUState s = sample_stationary(ps, w1);
            double v = renormalized_trace_phi4(s.z, w1);
            acc += v;
            accsq += v * v;
        }
        double mean = acc / n_samples;
        double se = std::sqrt(((accsq - acc * acc / n_samples) / (n_samples - 1)) / n_samples);
        CHECK(std::abs(mean - expected) <= 4.0 * se);
        // analytic cross-check of the oracle route: the mean equals
        // sum_m 1/A_mm^2
        double closed = 0.0;
        for (int m = 0; m <= 1; ++m) closed += 1.0 / (w1(m, m) * w1(m, m));
        CHECK(expected == doctest::Approx(closed).epsilon(1e-12));
    }
}

TEST_CASE("stationarity test") {
    SUBCASE("iid halves pass at roughly the nominal rate") {
        std::mt19937 gen(29);
        std::normal_distribution<double> normal;
        int pass = 0;
        const int reps = 400;
        for (int r = 0; r < reps; ++r) {
            std::vector<double> vals(2000);
            for (auto& v : vals) v = normal(gen);
            if (stationarity_test(make_series(vals)).pass) ++pass;
        }
        // 1% level: expect ~99% passes; the asymptotic critical value is
        // slightly conservative
        CHECK(pass >= reps * 96 / 100);
    }

    SUBCASE("drifting series fails") {
        std::mt19937 gen(31);
        std::normal_distribution<double> normal;
        std::vector<double> vals(4000);
        for (std::size_t i = 0; i < vals.size(); ++i)
            vals[i] = normal(gen) + 3.0 * static_cast<double>(i) / vals.size();
        CHECK(!stationarity_test(make_series(vals)).pass);
    }

    SUBCASE("free trajectory of tr phi^2 passes") {
        ModelParams p = unit_params(3, 37);
        p.lambda = 0.0;
        p.dt = 0.05 / p.weight(3, 3);
        RunSettings s;
        s.t_final = 250.0 / p.a00();
        s.burn_in = 20.0 / p.a00();
        s.snapshot_stride = 5;
        SimulationResult r = simulate(p, s);
        REQUIRE(!r.aborted);
        TimeSeries ts;
        ts.name = "tr_phi2";
        ts.burn_in = s.burn_in;
        for (const auto& rec : r.series) {
            ts.times.push_back(rec.t);
            ts.values.push_back(rec.tr_phi2);
        }
        auto st = stationarity_test(ts);
        CHECK(st.pass);
    }

    SUBCASE("insufficient data rejected") {
        std::vector<double> vals(8, 0.0);
        CHECK_THROWS_AS(stationarity_test(make_series(vals)), std::invalid_argument);
    }
}

TEST_CASE("matrix basis functions") {
    const double theta = 1.3;

    SUBCASE("ground state values") {
        CHECK(basis_function(0, 0, 0.0, 0.0, theta).real() == doctest::Approx(2.0));
        CHECK(basis_function(0, 0, 0.0, 0.0, theta).imag() == doctest::Approx(0.0));
        // at ||x||^2 = theta the ground state is 2/e
        double r = std::sqrt(theta);
        CHECK(basis_function(0, 0, r, 0.0, theta).real() ==
              doctest::Approx(2.0 / std::exp(1.0)).epsilon(1e-13));
    }

    SUBCASE("conjugation relation") {
        Complex b12 = basis_function(1, 2, 0.4, -0.3, theta);
        Complex b21 = basis_function(2, 1, 0.4, -0.3, theta);
        CHECK(std::abs(b21 - std::conj(b12)) < 1e-14);
    }

    SUBCASE("orthonormality under quadrature") {
        const int n_max = 3;
        Eigen::MatrixXcd gram = basis_gram(n_max, theta);
        const int dim = (n_max + 1) * (n_max + 1);
        for (int pq = 0; pq < dim; ++pq)
            for (int rs = 0; rs < dim; ++rs) {
                double expected = (pq == rs) ? 1.0 : 0.0;
                CHECK(std::abs(gram(pq, rs) - expected) < 1e-6);
            }
    }
}

TEST_CASE("field reconstruction") {
    const double theta = 1.0;

    SUBCASE("single coefficient reproduces the ground state") {
        HermitianField c(2);
        c(0, 0) = 1.0;
        std::vector<std::pair<double, double>> grid = {{0.0, 0.0}, {0.5, 0.2}, {-1.0, 0.7}};
        auto rec = reconstruct_field(c, grid, theta);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            double r2 = grid[i].first * grid[i].first + grid[i].second * grid[i].second;
            CHECK(rec.values[i] == doctest::Approx(2.0 * std::exp(-r2 / theta)).epsilon(1e-12));
        }
        CHECK(rec.max_imag_residual < 1e-12);
    }

    SUBCASE("hermitian coefficients give a real field") {
        std::mt19937 gen(41);
        std::normal_distribution<double> normal;
        HermitianField c(3);
        for (int i = 0; i <= 3; ++i) {
            c(i, i) = normal(gen);
            for (int j = i + 1; j <= 3; ++j) {
                c(i, j) = Complex(normal(gen), normal(gen));
                c(j, i) = std::conj(c(i, j));
            }
        }
        std::vector<std::pair<double, double>> grid;
        for (int i = 0; i < 32; ++i)
            for (int j = 0; j < 32; ++j)
                grid.emplace_back(-3.0 + 6.0 * i / 31.0, -3.0 + 6.0 * j / 31.0);
        auto rec = reconstruct_field(c, grid, theta);
        CHECK(rec.max_imag_residual < 1e-10);
    }

    SUBCASE("linearity") {
        std::mt19937 gen(43);
        std::normal_distribution<double> normal;
        HermitianField a(2), b(2);
        for (int i = 0; i <= 2; ++i)
            for (int j = 0; j <= 2; ++j) {
                a(i, j) = Complex(normal(gen), normal(gen));
                b(i, j) = Complex(normal(gen), normal(gen));
            }
        HermitianField sum(2);
        sum.m = a.m + b.m;
        std::vector<std::pair<double, double>> grid = {{0.1, 0.2}, {1.0, -0.5}, {-0.3, 0.9}};
        auto ra = reconstruct_field(a, grid, theta);
        auto rb = reconstruct_field(b, grid, theta);
        auto rs = reconstruct_field(sum, grid, theta);
        for (std::size_t i = 0; i < grid.size(); ++i)
            CHECK(rs.values[i] == doctest::Approx(ra.values[i] + rb.values[i]).epsilon(1e-12));
    }

    SUBCASE("product rule at the coefficient level") {
        // b_kl * b_mn = delta_lm b_kn as matrix algebra of coefficients
        const int n = 3;
        for (int k = 0; k <= n; ++k)
            for (int l = 0; l <= n; ++l)
                for (int m = 0; m <= n; ++m)
                    for (int nn = 0; nn <= n; ++nn) {
                        CMatrix ekl = CMatrix::Zero(n + 1, n + 1);
                        ekl(k, l) = 1.0;
                        CMatrix emn = CMatrix::Zero(n + 1, n + 1);
                        emn(m, nn) = 1.0;
                        CMatrix prod = matmul(ekl, emn);
                        CMatrix expected = CMatrix::Zero(n + 1, n + 1);
                        if (l == m) expected(k, nn) = 1.0;
                        CHECK((prod - expected).norm() == 0.0);
                    }
    }
}

TEST_CASE("gauss-laguerre quadrature") {
    std::vector<double> u, wq;
    gauss_laguerre(24, u, wq);
    // int_0^inf u^k e^{-u} du = k!
    double total = 0.0, first = 0.0, fifth = 0.0;
    for (int i = 0; i < 24; ++i) {
        total += wq[i];
        first += wq[i] * u[i];
        fifth += wq[i] * std::pow(u[i], 5);
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(first == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fifth == doctest::Approx(120.0).epsilon(1e-10));
}
