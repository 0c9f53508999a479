#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "moyal/gaussian.hpp"
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

// independent stationary draws via per-sample seeds
OUState draw(const ModelParams& base, const WeightTable& w, int i) {
    ModelParams p = base;
    p.seed = mix64(base.seed + 0x9e3779b97f4a7c15ull * (i + 1));
    return sample_stationary(p, w);
}

struct Stat {
    double sum = 0.0, sumsq = 0.0;
    long long n = 0;
    void add(double x) {
        sum += x;
        sumsq += x * x;
        ++n;
    }
    double mean() const { return sum / n; }
    double se() const {
        double var = (sumsq - sum * sum / n) / (n - 1);
        return std::sqrt(std::max(var, 0.0) / n);
    }
    bool within(double expected, double n_se = 3.0, double abs_slack = 1e-12) const {
        return std::abs(mean() - expected) <= n_se * se() + abs_slack;
    }
};

} // namespace

TEST_CASE("covariance oracle") {
    ModelParams p = unit_params(3);
    WeightTable w(p);
    CHECK(covariance(0, 1, 1, 0, 0.0, w) == doctest::Approx(1.0 / w(0, 1)).epsilon(1e-14));
    CHECK(covariance(0, 1, 0, 1, 0.0, w) == 0.0);
    CHECK(covariance(0, 0, 0, 0, 0.25, w) ==
          doctest::Approx(std::exp(-0.25 * w(0, 0)) / w(0, 0)).epsilon(1e-14));
}

TEST_CASE("covariance vs scalar OU Monte Carlo") {
    // 1-d OU dz = -a z dt + sqrt(2) dB, exact transitions with std::mt19937;
    // fully independent of the library's sampler
    ModelParams p = unit_params(0);
    WeightTable w(p);
    const double a = w(0, 0);
    const double t = 0.5 / a;
    std::mt19937 gen(12345);
    std::normal_distribution<double> normal;
    Stat prod;
    for (int i = 0; i < 100000; ++i) {
        double z0 = normal(gen) / std::sqrt(a);
        double decay = std::exp(-a * t);
        double z1 = decay * z0 + std::sqrt((1.0 - decay * decay) / a) * normal(gen);
        prod.add(z0 * z1);
    }
    CHECK(prod.within(covariance(0, 0, 0, 0, t, w)));
}

TEST_CASE("stationary sampling statistics") {
    ModelParams p = unit_params(3);
    WeightTable w(p);
    const int n_samples = 10000;
    Stat re01, im01, abs2_01, zz_re, zz_im, diag_var;
    for (int i = 0; i < n_samples; ++i) {
        OUState s = draw(p, w, i);
        REQUIRE(s.z.hermiticity_defect() < 1e-12);
        re01.add(s.z(0, 1).real());
        im01.add(s.z(0, 1).imag());
        abs2_01.add(std::norm(s.z(0, 1)));
        Complex zz = s.z(0, 1) * s.z(0, 1); // no conjugate: expect 0
        zz_re.add(zz.real());
        zz_im.add(zz.imag());
        diag_var.add(s.z(2, 2).real() * s.z(2, 2).real());
    }
    CHECK(re01.within(0.0));
    CHECK(im01.within(0.0));
    CHECK(abs2_01.within(1.0 / w(0, 1)));
    CHECK(zz_re.within(0.0));
    CHECK(zz_im.within(0.0));
    CHECK(diag_var.within(1.0 / w(2, 2)));
}

TEST_CASE("conjugation consistency: only (k,l) = (n,m) pairing survives") {
    ModelParams p = unit_params(3, 101);
    WeightTable w(p);
    const int n_samples = 4000;
    const int dim = 4;
    std::vector<Stat> stats_re(dim * dim * dim * dim), stats_im(dim * dim * dim * dim);
    for (int i = 0; i < n_samples; ++i) {
        OUState s = draw(p, w, i);
        int idx = 0;
        for (int m = 0; m < dim; ++m)
            for (int n = 0; n < dim; ++n)
                for (int k = 0; k < dim; ++k)
                    for (int l = 0; l < dim; ++l, ++idx) {
                        Complex v = s.z(m, n) * s.z(k, l);
                        stats_re[idx].add(v.real());
                        stats_im[idx].add(v.imag());
                    }
    }
    int idx = 0;
    int failures = 0;
    for (int m = 0; m < dim; ++m)
        for (int n = 0; n < dim; ++n)
            for (int k = 0; k < dim; ++k)
                for (int l = 0; l < dim; ++l, ++idx) {
                    double expected = covariance(m, n, k, l, 0.0, w);
                    if (!stats_re[idx].within(expected, 4.0)) ++failures;
                    if (!stats_im[idx].within(0.0, 4.0)) ++failures;
                }
    // 512 four-SE checks; allow a lone statistical fluke
    CHECK(failures <= 1);
}

TEST_CASE("advance") {
    ModelParams p = unit_params(2);
    WeightTable w(p);
    OUState s0 = sample_stationary(p, w);

    SUBCASE("dt = 0 is the identity") {
        OUState s1 = advance(s0, 0.0, w);
        CHECK((s1.z.m - s0.z.m).norm() == 0.0);
    }

    SUBCASE("negative dt rejected") {
        CHECK_THROWS_AS(advance(s0, -0.1, w), std::invalid_argument);
    }

    SUBCASE("lagged covariance") {
        const double lag = 0.1 / w(0, 1);
        const int n_samples = 10000;
        Stat lag_re;
        for (int i = 0; i < n_samples; ++i) {
            OUState s = draw(p, w, i);
            OUState t = advance(s, lag, w);
            lag_re.add((t.z(0, 1) * std::conj(s.z(0, 1))).real());
        }
        CHECK(lag_re.within(std::exp(-lag * w(0, 1)) / w(0, 1)));
    }

    SUBCASE("exact transition preserves the stationary law") {
        const int n_samples = 8000;
        const double dt = 0.37 / w(0, 0);
        Stat before, after;
        for (int i = 0; i < n_samples; ++i) {
            OUState s = draw(p, w, i);
            before.add(std::norm(s.z(1, 2)));
            OUState t = s;
            for (int k = 0; k < 10; ++k) t = advance(t, dt, w);
            after.add(std::norm(t.z(1, 2)));
        }
        // two-sample comparison at 3 combined SE
        double diff = std::abs(before.mean() - after.mean());
        double se = std::hypot(before.se(), after.se());
        CHECK(diff <= 3.0 * se);
    }
}

TEST_CASE("determinism") {
    ModelParams p = unit_params(4, 777);
    WeightTable w(p);
    OUState a = sample_stationary(p, w);
    OUState b = sample_stationary(p, w);
    CHECK((a.z.m - b.z.m).norm() == 0.0);
    OUState a1 = advance(a, 0.01, w);
    OUState b1 = advance(b, 0.01, w);
    for (int m = 0; m <= 4; ++m)
        for (int n = 0; n <= 4; ++n) {
            CHECK(a1.z(m, n).real() == b1.z(m, n).real());
            CHECK(a1.z(m, n).imag() == b1.z(m, n).imag());
        }
    ModelParams q = p;
    q.seed = 778;
    OUState c = sample_stationary(q, w);
    CHECK((a.z.m - c.z.m).norm() > 0.0);
}

TEST_CASE("wick2") {
    SUBCASE("N = 0 scalar case") {
        ModelParams p = unit_params(0, 5);
        WeightTable w(p);
        const double a = w(0, 0);
        Stat mean, var;
        for (int i = 0; i < 10000; ++i) {
            OUState s = draw(p, w, i);
            HermitianField z2 = wick2(s.z, w);
            CHECK(std::abs(z2(0, 0) - (s.z(0, 0) * s.z(0, 0) - 1.0 / a)) < 1e-14);
            mean.add(z2(0, 0).real());
            var.add(z2(0, 0).real() * z2(0, 0).real());
        }
        CHECK(mean.within(0.0));
        CHECK(var.within(2.0 / (a * a)));
    }

    SUBCASE("covariance formula at N = 3, cross-checked by the pairing oracle") {
        ModelParams p = unit_params(3, 6);
        WeightTable w(p);
        const int dim = 4;
        // closed form delta_mn / A_mm^2 + sum_k 1/(A_mk A_kn) equals the
        // raw-moment oracle value E[(z^2)_mn (z^2)_nm] - delta_mn T_m^2
        for (int m = 0; m < dim; ++m)
            for (int n = 0; n < dim; ++n) {
                // factors z_mk z_kn z_nl z_lm with k, l summed
                std::vector<oracle::Factor> fs = {{0, 2}, {2, 1}, {1, 3}, {3, 0}};
                double raw = oracle::summed_moment(fs, {m, n, -1, -1}, 3, p);
                double centered = raw - (m == n ? w.tail1(m) * w.tail1(m) : 0.0);
                double formula = (m == n ? 1.0 / (w(m, m) * w(m, m)) : 0.0);
                for (int k = 0; k < dim; ++k) formula += 1.0 / (w(m, k) * w(k, n));
                CHECK(centered == doctest::Approx(formula).epsilon(1e-12));
            }

        // and the sampler agrees within a few SE
        const int n_samples = 10000;
        std::vector<Stat> cov(dim * dim);
        std::vector<Stat> means(dim * dim);
        for (int i = 0; i < n_samples; ++i) {
            OUState s = draw(p, w, i);
            HermitianField z2 = wick2(s.z, w);
            CHECK(z2.hermiticity_defect() < 1e-12);
            for (int m = 0; m < dim; ++m)
                for (int n = 0; n < dim; ++n) {
                    cov[m * dim + n].add((z2(m, n) * z2(n, m)).real());
                    means[m * dim + n].add(z2(m, n).real());
                }
        }
        int failures = 0;
        for (int m = 0; m < dim; ++m)
            for (int n = 0; n < dim; ++n) {
                double formula = (m == n ? 1.0 / (w(m, m) * w(m, m)) : 0.0);
                for (int k = 0; k < dim; ++k) formula += 1.0 / (w(m, k) * w(k, n));
                if (!cov[m * dim + n].within(formula, 4.0)) ++failures;
                if (!means[m * dim + n].within(0.0, 4.0)) ++failures;
            }
        CHECK(failures == 0);
    }
}

TEST_CASE("wick3") {
    SUBCASE("N = 0 adjacent subtraction and centering") {
        ModelParams p = unit_params(0, 7);
        WeightTable w(p);
        const double a = w(0, 0);
        Stat mean;
        for (int i = 0; i < 10000; ++i) {
            OUState s = draw(p, w, i);
            HermitianField z3 = wick3(s.z, w, WickConvention::adjacent);
            Complex z = s.z(0, 0);
            CHECK(std::abs(z3(0, 0) - (z * z * z - 2.0 * z / a)) < 1e-13);
            mean.add(z3(0, 0).real());
        }
        CHECK(mean.within(0.0));
    }

    SUBCASE("full minus adjacent identity, exact per sample") {
        ModelParams p = unit_params(4, 8);
        WeightTable w(p);
        for (int i = 0; i < 50; ++i) {
            OUState s = draw(p, w, i);
            HermitianField adj = wick3(s.z, w, WickConvention::adjacent);
            HermitianField full = wick3(s.z, w, WickConvention::full);
            CHECK(adj.hermiticity_defect() < 1e-12);
            CHECK(full.hermiticity_defect() < 1e-12);
            for (int m = 0; m <= 4; ++m)
                for (int n = 0; n <= 4; ++n) {
                    Complex expected = 0.0;
                    if (m == n)
                        for (int k = 0; k <= 4; ++k) expected -= s.z(k, k) / w(m, k);
                    CHECK(std::abs((full(m, n) - adj(m, n)) - expected) < 1e-12);
                }
        }
    }

    SUBCASE("E[:z^3:_mn z_nm] equals the unsubtracted outer contraction") {
        ModelParams p = unit_params(2, 9);
        WeightTable w(p);
        const int dim = 3;
        // pairing-oracle value: E[(z^3)_mn z_nm] - (T_m + T_n) E[z_mn z_nm]
        for (int m = 0; m < dim; ++m)
            for (int n = 0; n < dim; ++n) {
                std::vector<oracle::Factor> fs = {{0, 2}, {2, 3}, {3, 1}, {1, 0}};
                double raw = oracle::summed_moment(fs, {m, n, -1, -1}, 2, p);
                double centered = raw - (w.tail1(m) + w.tail1(n)) / w(m, n);
                double expected = (m == n ? 1.0 / (w(m, m) * w(m, m)) : 0.0);
                CHECK(centered == doctest::Approx(expected).epsilon(1e-12));
            }

        const int n_samples = 20000;
        std::vector<Stat> cross_adj(dim * dim), cross_full(dim * dim);
        for (int i = 0; i < n_samples; ++i) {
            OUState s = draw(p, w, i);
            HermitianField adj = wick3(s.z, w, WickConvention::adjacent);
            HermitianField full = wick3(s.z, w, WickConvention::full);
            for (int m = 0; m < dim; ++m)
                for (int n = 0; n < dim; ++n) {
                    cross_adj[m * dim + n].add((adj(m, n) * s.z(n, m)).real());
                    cross_full[m * dim + n].add((full(m, n) * s.z(n, m)).real());
                }
        }
        int failures = 0;
        for (int m = 0; m < dim; ++m)
            for (int n = 0; n < dim; ++n) {
                double expected = (m == n ? 1.0 / (w(m, m) * w(m, m)) : 0.0);
                if (!cross_adj[m * dim + n].within(expected, 4.0)) ++failures;
                if (!cross_full[m * dim + n].within(0.0, 4.0)) ++failures;
            }
        CHECK(failures == 0);
    }
}

TEST_CASE("gamma tensor") {
    ModelParams p = unit_params(3, 10);
    WeightTable w(p);
    const double beta = 0.2;
    const int dim = 4;

    SUBCASE("hermitian symmetry and centering") {
        const int n_samples = 4000;
        std::vector<Stat> mean_re(dim * dim * dim);
        for (int i = 0; i < n_samples; ++i) {
            OUState s = draw(p, w, i);
            GammaTensor g = gamma_tensor(s.z, beta, w);
            for (int n = 0; n < dim; ++n)
                for (int l = 0; l < dim; ++l)
                    for (int lp = 0; lp < dim; ++lp) {
                        CHECK(std::abs(g(n, l, lp) - std::conj(g(n, lp, l))) < 1e-13);
                        mean_re[(n * dim + l) * dim + lp].add(g(n, l, lp).real());
                    }
        }
        int failures = 0;
        for (auto& st : mean_re)
            if (!st.within(0.0, 4.0)) ++failures;
        CHECK(failures == 0);
    }

    SUBCASE("variance formula") {
        // E[|Gamma^n_{l,l}|^2] = 1/(A_nl^{4 beta} A_ll^2)
        //                        + sum_m 1/(A_mn^{4 beta} A_ml A_ml)
        const int n_samples = 20000;
        std::vector<Stat> var(dim * dim);
        for (int i = 0; i < n_samples; ++i) {
            OUState s = draw(p, w, i);
            GammaTensor g = gamma_tensor(s.z, beta, w);
            for (int n = 0; n < dim; ++n)
                for (int l = 0; l < dim; ++l) var[n * dim + l].add(std::norm(g(n, l, l)));
        }
        int failures = 0;
        for (int n = 0; n < dim; ++n)
            for (int l = 0; l < dim; ++l) {
                double expected = 1.0 / (std::pow(w(n, l), 4.0 * beta) * w(l, l) * w(l, l));
                for (int m = 0; m < dim; ++m)
                    expected += 1.0 / (std::pow(w(m, n), 4.0 * beta) * w(m, l) * w(m, l));
                if (!var[n * dim + l].within(expected, 4.0)) ++failures;
            }
        CHECK(failures == 0);
    }
}

TEST_CASE("wick bundle consistency") {
    ModelParams p = unit_params(5, 11);
    WeightTable w(p);
    OUState s = sample_stationary(p, w);
    WickBundle b = WickBundle::from(s.z, w);
    CHECK((b.z2.m - wick2(s.z, w).m).norm() == 0.0);
    CHECK((b.z3_adj.m - wick3(s.z, w, WickConvention::adjacent).m).norm() == 0.0);
    CHECK((b.z3_full.m - wick3(s.z, w, WickConvention::full).m).norm() < 1e-14);
    for (int m = 0; m <= 5; ++m) CHECK(b.tail1[m] == doctest::Approx(w.tail1(m)));
}
