#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "classgen/info.hpp"
#include "classgen/rng.hpp"

using namespace classgen;
using Catch::Approx;

namespace {

// closed-form oracle for the MI of a 2 x V joint, written independently of
// the estimators under test
double mi_oracle(const std::vector<double>& p_minus, const std::vector<double>& p_plus) {
    double pu0 = 0, pu1 = 0;
    std::vector<double> pv(p_minus.size(), 0.0);
    for (std::size_t v = 0; v < p_minus.size(); ++v) {
        pu0 += p_minus[v];
        pu1 += p_plus[v];
        pv[v] = p_minus[v] + p_plus[v];
    }
    double mi = 0;
    for (std::size_t v = 0; v < p_minus.size(); ++v) {
        if (p_minus[v] > 0) mi += p_minus[v] * std::log(p_minus[v] / (pu0 * pv[v]));
        if (p_plus[v] > 0) mi += p_plus[v] * std::log(p_plus[v] / (pu1 * pv[v]));
    }
    return mi;
}

JointCounts sample_counts(const JointPmf& pmf, std::size_t n, Seed seed) {
    Rng rng(seed);
    std::vector<double> flat;
    for (double p : pmf.p_minus) flat.push_back(p);
    for (double p : pmf.p_plus) flat.push_back(p);
    JointCounts counts;
    const std::size_t nv = pmf.num_v();
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t cell = rng.categorical(flat);
        counts.add(cell < nv ? -1 : +1, static_cast<int>(cell % nv));
    }
    return counts;
}

}  // namespace

TEST_CASE("plugin_mi on exactly independent counts is exactly zero") {
    JointCounts c;
    // product structure: counts(u,v) = row(u) * col(v)
    c.add(-1, 0, 6);
    c.add(-1, 1, 9);
    c.add(+1, 0, 4);
    c.add(+1, 1, 6);
    CHECK(plugin_mi(c) == 0.0);
}

TEST_CASE("plugin_mi of perfectly correlated fair binaries is ln 2") {
    JointCounts c;
    c.add(+1, 1, 50);
    c.add(-1, 0, 50);
    CHECK(plugin_mi(c) == Approx(0.6931471805599453).epsilon(1e-12));
}

TEST_CASE("plugin_mi matches the closed form on the 0.4/0.1 joint at 10^6 counts") {
    JointCounts c;
    c.add(+1, 1, 400000);
    c.add(+1, 0, 100000);
    c.add(-1, 1, 100000);
    c.add(-1, 0, 400000);
    CHECK(plugin_mi(c) == Approx(0.19274475702175753).margin(0.002));
}

TEST_CASE("plugin_mi rejects empty counts") {
    JointCounts c;
    CHECK_THROWS_AS(plugin_mi(c), std::invalid_argument);
}

TEST_CASE("miller_madow subtracts the first-order bias and clamps at zero") {
    JointCounts c;
    c.add(-1, 0, 5);
    c.add(-1, 1, 5);
    c.add(+1, 0, 5);
    c.add(+1, 1, 5);
    // plug-in is 0 here; the correction cannot push below 0
    CHECK(plugin_mi(c, MiCorrection::miller_madow) == 0.0);

    JointCounts d;
    d.add(-1, 0, 7);
    d.add(-1, 1, 3);
    d.add(+1, 0, 2);
    d.add(+1, 1, 8);
    const double plain = plugin_mi(d, MiCorrection::none);
    const double corrected = plugin_mi(d, MiCorrection::miller_madow);
    CHECK(corrected == Approx(std::max(plain - 1.0 / 40.0, 0.0)).epsilon(1e-12));
}

TEST_CASE("exact_mi closed forms") {
    SECTION("product pmf gives zero") {
        JointPmf p{{0.3, 0.2}, {0.3, 0.2}};
        CHECK(exact_mi(p) == Approx(0.0).margin(1e-15));
    }
    SECTION("0.4/0.1 joint") {
        JointPmf p{{0.4, 0.1}, {0.1, 0.4}};
        CHECK(exact_mi(p) == Approx(0.19274475702175753).epsilon(1e-12));
    }
    SECTION("degenerate single cell") {
        JointPmf p{{1.0, 0.0}, {0.0, 0.0}};
        CHECK(exact_mi(p) == Approx(0.0).margin(1e-15));
    }
    SECTION("unnormalized pmf is rejected") {
        JointPmf p{{0.4, 0.1}, {0.1, 0.3}};
        CHECK_THROWS_AS(exact_mi(p), std::invalid_argument);
    }
}

TEST_CASE("plugin_mi converges to exact_mi at rate 5/sqrt(total)") {
    Rng meta(555);
    for (int rep = 0; rep < 4; ++rep) {
        // random binary x ternary joint
        std::vector<double> cells(6);
        double total = 0;
        for (auto& c : cells) {
            c = meta.uniform(0.05, 1.0);
            total += c;
        }
        for (auto& c : cells) c /= total;
        JointPmf pmf{{cells[0], cells[1], cells[2]}, {cells[3], cells[4], cells[5]}};
        const double truth = exact_mi(pmf);
        for (std::size_t n : {std::size_t(1000), std::size_t(10000), std::size_t(100000)}) {
            const double est = plugin_mi(sample_counts(pmf, n, derive_seed(rep, n)));
            CHECK(std::abs(est - truth) <= 5.0 / std::sqrt(static_cast<double>(n)));
        }
    }
}

TEST_CASE("mi is symmetric in u") {
    JointCounts a, b;
    a.add(-1, 0, 3);
    a.add(-1, 1, 9);
    a.add(+1, 0, 5);
    a.add(+1, 1, 2);
    b.add(+1, 0, 3);
    b.add(+1, 1, 9);
    b.add(-1, 0, 5);
    b.add(-1, 1, 2);
    CHECK(plugin_mi(a) == Approx(plugin_mi(b)).epsilon(1e-15));
}

TEST_CASE("kl_divergence closed forms and errors") {
    SECTION("identical distributions") {
        const std::vector<double> p = {0.25, 0.75};
        CHECK(kl_divergence(p, p) == 0.0);
    }
    SECTION("point mass against fair coin is ln 2") {
        const std::vector<double> p = {1.0, 0.0};
        const std::vector<double> q = {0.5, 0.5};
        CHECK(kl_divergence(p, q) == Approx(0.6931471805599453).epsilon(1e-12));
    }
    SECTION("(0.7,0.3) vs fair coin") {
        const std::vector<double> p = {0.7, 0.3};
        const std::vector<double> q = {0.5, 0.5};
        CHECK(kl_divergence(p, q) == Approx(0.08228287850505178).epsilon(1e-12));
    }
    SECTION("support violation is its own error type") {
        const std::vector<double> p = {0.5, 0.5};
        const std::vector<double> q = {1.0, 0.0};
        CHECK_THROWS_AS(kl_divergence(p, q), DivergenceInfinite);
    }
    SECTION("size mismatch is invalid input, not divergence") {
        const std::vector<double> p = {1.0};
        const std::vector<double> q = {0.5, 0.5};
        CHECK_THROWS_AS(kl_divergence(p, q), std::invalid_argument);
    }
}

TEST_CASE("kl_divergence is nonnegative, zero only at equality") {
    Rng rng(808);
    for (int rep = 0; rep < 200; ++rep) {
        std::vector<double> p(4), q(4);
        double sp = 0, sq = 0;
        for (int i = 0; i < 4; ++i) {
            p[i] = rng.uniform(0.01, 1.0);
            q[i] = rng.uniform(0.01, 1.0);
            sp += p[i];
            sq += q[i];
        }
        for (int i = 0; i < 4; ++i) {
            p[i] /= sp;
            q[i] /= sq;
        }
        const double kl = kl_divergence(p, q);
        CHECK(kl >= -1e-15);
        double linf = 0;
        for (int i = 0; i < 4; ++i) linf = std::max(linf, std::abs(p[i] - q[i]));
        if (linf > 1e-3) CHECK(kl > 0.0);
    }
}

TEST_CASE("quantize maps [-1,1] to codes with +1 in the last bin") {
    SECTION("bins=3 endpoints and center") {
        const std::vector<double> s = {-1.0, 0.0, 1.0};
        CHECK(quantize(s, 3) == std::vector<int>{0, 1, 2});
    }
    SECTION("bins=2 negative half") { CHECK(quantize_one(-0.5, 2) == 0); }
    SECTION("tolerance band clamps, beyond it rejects") {
        CHECK(quantize_one(1.0 + 5e-10, 5) == 4);
        CHECK_THROWS_AS(quantize_one(1.1, 5), std::invalid_argument);
        CHECK_THROWS_AS(quantize_one(-1.1, 5), std::invalid_argument);
    }
    SECTION("bins < 2 rejected") {
        CHECK_THROWS_AS(quantize(std::vector<double>{0.0}, 1), std::invalid_argument);
    }
}

TEST_CASE("coarser quantization never increases plug-in MI") {
    // 7 bins refine into 21: merging bins is data processing on v
    Rng rng(31);
    std::vector<double> samples;
    std::vector<int> us;
    for (int k = 0; k < 400; ++k) {
        const int u = rng.rademacher();
        us.push_back(u);
        samples.push_back(std::clamp(0.4 * u + rng.normal() * 0.5, -1.0, 1.0));
    }
    const auto fine = quantize(samples, 21);
    const auto coarse = quantize(samples, 7);
    JointCounts cf, cc;
    for (std::size_t k = 0; k < samples.size(); ++k) {
        cf.add(us[k], fine[k]);
        cc.add(us[k], coarse[k]);
    }
    CHECK(plugin_mi(cc) <= plugin_mi(cf) + 1e-12);
}

TEST_CASE("nats_to_bits rescales by ln 2") {
    CHECK(nats_to_bits(0.6931471805599453) == Approx(1.0).epsilon(1e-12));
}
