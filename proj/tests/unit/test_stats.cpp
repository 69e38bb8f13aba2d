#include <doctest.h>

#include "censoring/errors.hpp"
#include "censoring/stats/aggregate.hpp"
#include "censoring/stats/metrics.hpp"
#include "censoring/stats/probe.hpp"
#include "censoring/stats/ttest.hpp"
#include "censoring/synth/generator.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/beta.hpp>

#include <cmath>

using namespace censoring;
using namespace censoring::stats;
using nn::Matrix;
using nn::RngStream;

TEST_CASE("balanced_accuracy examples") {
    ConfusionCounts perfect(3);
    for (int c = 0; c < 3; ++c) perfect.add(c, c, 5 + static_cast<std::uint64_t>(c));
    CHECK(balanced_accuracy(perfect) == 1.0);

    ConfusionCounts majority(2);
    majority.add(0, 0, 90);
    majority.add(1, 0, 10);
    CHECK(balanced_accuracy(majority) == 0.5);

    ConfusionCounts mixed(2);
    mixed.add(1, 1, 8);
    mixed.add(1, 0, 2);
    mixed.add(0, 0, 81);
    mixed.add(0, 1, 9);
    CHECK(balanced_accuracy(mixed) == doctest::Approx(0.85).epsilon(1e-15));
    CHECK(mixed.total() == 100);

    ConfusionCounts missing(2);
    missing.add(0, 0, 4);
    CHECK_THROWS_AS(balanced_accuracy(missing), ConfigError);
    CHECK_THROWS_AS(missing.add(2, 0), ConfigError);

    const std::vector<int> truth{0, 0, 1, 1, 1};
    const std::vector<int> pred{0, 1, 1, 1, 0};
    CHECK(balanced_accuracy(truth, pred, 2) == doctest::Approx((0.5 + 2.0 / 3.0) / 2.0));
}

TEST_CASE("balanced_accuracy ignores duplicating every trial of one class") {
    RngStream rng(1, 0);
    for (int trial = 0; trial < 50; ++trial) {
        const int classes = 2 + static_cast<int>(rng.below(4));
        ConfusionCounts base(classes);
        for (int t = 0; t < classes; ++t) {
            base.add(t, t, 1 + rng.below(20));
            for (int p = 0; p < classes; ++p) base.add(t, p, rng.below(10));
        }
        const int scaled_class = static_cast<int>(rng.below(static_cast<std::uint64_t>(classes)));
        const std::uint64_t factor = 2 + rng.below(5);
        ConfusionCounts scaled(classes);
        for (int t = 0; t < classes; ++t)
            for (int p = 0; p < classes; ++p) scaled.add(t, p, base.at(t, p) * (t == scaled_class ? factor : 1));
        CHECK(balanced_accuracy(scaled) == doctest::Approx(balanced_accuracy(base)).epsilon(1e-14));
    }
}

TEST_CASE("overfit_ratio") {
    CHECK(overfit_ratio(0.8, 0.8) == 1.0);
    CHECK(overfit_ratio(0.90, 0.72) == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(overfit_ratio(0.6, 0.75) == doctest::Approx(1.25));
    CHECK_THROWS_AS(overfit_ratio(0.0, 0.5), ConfigError);
}

TEST_CASE("incomplete beta and Student t against Boost") {
    for (double a : {0.5, 1.0, 2.5, 14.5, 49.5}) {
        for (double b : {0.5, 1.0, 3.0}) {
            for (double x : {0.001, 0.1, 0.37, 0.5, 0.9, 0.999}) {
                CAPTURE(a);
                CAPTURE(b);
                CAPTURE(x);
                CHECK(std::abs(regularized_incomplete_beta(a, b, x) - boost::math::ibeta(a, b, x)) < 1e-12);
            }
        }
    }
    for (double df : {1.0, 2.0, 5.0, 29.0, 99.0}) {
        const boost::math::students_t dist(df);
        for (double t : {-8.0, -2.5, -0.3, 0.0, 0.7, 1.96, 3.4641, 12.0}) {
            CAPTURE(df);
            CAPTURE(t);
            CHECK(std::abs(student_t_cdf(t, df) - boost::math::cdf(dist, t)) < 1e-10);
        }
    }
    CHECK_THROWS_AS(regularized_incomplete_beta(0.0, 1.0, 0.5), ConfigError);
    CHECK_THROWS_AS(regularized_incomplete_beta(1.0, 1.0, 1.5), ConfigError);
}

TEST_CASE("paired_t_test examples") {
    const std::vector<double> d{0.1, 0.2, 0.3};
    const std::vector<double> zero(3, 0.0);
    const auto r = paired_t_test(d, zero);
    CHECK(std::abs(r.t - 0.2 / (0.1 / std::sqrt(3.0))) < 1e-9);
    CHECK(std::abs(r.t - 3.4641) < 1e-4);
    CHECK(r.df == 2.0);
    const boost::math::students_t dist(2.0);
    CHECK(std::abs(r.p - 2.0 * boost::math::cdf(boost::math::complement(dist, r.t))) < 1e-10);
    CHECK(r.tier == Tier::none);

    const std::vector<double> same{0.5, 0.6, 0.7};
    CHECK_THROWS_AS(paired_t_test(same, same), ConfigError);
    CHECK_THROWS_AS(paired_t_test(std::vector<double>{1.0}, std::vector<double>{0.0}), ConfigError);
    CHECK_THROWS_AS(paired_t_test(d, std::vector<double>{0.0, 0.0}), ConfigError);
}

TEST_CASE("significance tiers follow the legend") {
    CHECK(significance_tier(1.0, 0.2) == Tier::none);
    CHECK(significance_tier(1.0, 0.0500001) == Tier::none);
    CHECK(significance_tier(1.0, 0.05) == Tier::p05);
    CHECK(significance_tier(1.0, 0.0100001) == Tier::p05);
    CHECK(significance_tier(1.0, 0.01) == Tier::p01);
    CHECK(significance_tier(1.0, 0.0010001) == Tier::p01);
    CHECK(significance_tier(1.0, 0.001) == Tier::p001);
    CHECK(significance_tier(1.0, 1e-12) == Tier::p001);
    CHECK(significance_tier(-4.0, 1e-12) == Tier::none);
    CHECK(significance_tier(0.0, 1e-12) == Tier::none);
    CHECK(symbol(Tier::none) == "−");
    CHECK(symbol(Tier::p05) == "*");
    CHECK(symbol(Tier::p01) == "†");
    CHECK(symbol(Tier::p001) == "‡");
}

TEST_CASE("paired_t_test antisymmetry and simulated strong effect") {
    RngStream rng(2, 0);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<double> a(10);
        std::vector<double> b(10);
        for (std::size_t i = 0; i < a.size(); ++i) {
            a[i] = rng.normal();
            b[i] = rng.normal();
        }
        const auto ab = paired_t_test(a, b);
        const auto ba = paired_t_test(b, a);
        CHECK(ab.t == -ba.t);
        CHECK(ab.p == doctest::Approx(ba.p).epsilon(1e-14));
    }
    int strongest = 0;
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> a(30);
        std::vector<double> b(30);
        for (std::size_t i = 0; i < a.size(); ++i) {
            b[i] = 0.7 + 0.05 * rng.normal();
            a[i] = b[i] + 0.05 + 0.01 * rng.normal();
        }
        strongest += paired_t_test(a, b).tier == Tier::p001;
    }
    CHECK(strongest == 100);
}

TEST_CASE("subject probe") {
    SUBCASE("independent features sit at chance") {
        RngStream rng(3, 0);
        synth::SynthParams p;
        p.variant = synth::Variant::A;
        p.subjects = 4;
        p.sessions_per_subject = 1;
        const auto spec = synth::make_spec(p, rng);
        const auto g = synth::generate(spec, 4000, rng);
        const double ba = probe_subject_accuracy(g.z_true, g.batch.s, rng);
        CHECK(std::abs(ba - 0.25) < 0.05);
    }
    SUBCASE("one-hot labels are perfectly separable") {
        RngStream rng(4, 0);
        std::vector<int> s(200);
        for (auto& v : s) v = 10 + static_cast<int>(rng.below(4));
        Matrix z(200, 4);
        for (std::size_t i = 0; i < s.size(); ++i) z(i, static_cast<std::size_t>(s[i] - 10)) = 1.0;
        CHECK(probe_subject_accuracy(z, s, rng) == 1.0);
    }
    SUBCASE("subject-bearing half of variant C") {
        RngStream rng(5, 0);
        synth::SynthParams p;
        p.variant = synth::Variant::C;
        p.input_dim = 12;
        p.subjects = 6;
        p.sessions_per_subject = 1;
        const auto spec = synth::make_spec(p, rng);
        const auto g = synth::generate(spec, 3000, rng);
        CHECK(probe_subject_accuracy(g.w_true, g.batch.s, rng) >= 0.9);
    }
    SUBCASE("deterministic given the stream") {
        RngStream data(6, 0);
        Matrix z(120, 3);
        std::vector<int> s(120);
        for (std::size_t i = 0; i < 120; ++i) {
            s[i] = static_cast<int>(data.below(3));
            for (std::size_t c = 0; c < 3; ++c) z(i, c) = data.normal() + 0.5 * s[i] * (c == 0);
        }
        RngStream a(7, 0);
        RngStream b(7, 0);
        CHECK(probe_subject_accuracy(z, s, a) == probe_subject_accuracy(z, s, b));
    }
    SUBCASE("too few trials") {
        RngStream rng(8, 0);
        Matrix z(25, 2, 1.0);
        std::vector<int> s(25, 0);
        for (std::size_t i = 0; i < 5; ++i) s[i] = 1;
        CHECK_THROWS_AS(probe_subject_accuracy(z, s, rng), ConfigError);
        std::vector<int> one(25, 0);
        CHECK_THROWS_AS(probe_subject_accuracy(z, one, rng), ConfigError);
    }
}

TEST_CASE("aggregate") {
    RunResult single;
    single.test_ba = 0.7;
    single.overfit_ratio = 0.9;
    const std::vector<RunResult> one{single};
    const auto rows = aggregate(one);
    REQUIRE(rows.size() == 1);
    const auto& d = rows[0].test_ba;
    CHECK(d.min == 0.7);
    CHECK(d.q1 == 0.7);
    CHECK(d.median == 0.7);
    CHECK(d.q3 == 0.7);
    CHECK(d.max == 0.7);
    CHECK(d.mean == 0.7);

    const std::vector<double> five{5, 1, 4, 2, 3};
    const auto q = describe(five);
    CHECK(q.median == 3.0);
    CHECK(q.q1 == 2.0);
    CHECK(q.q3 == 4.0);
    CHECK(quantile({1, 2, 3, 4}, 0.25) == doctest::Approx(1.75));
    CHECK_THROWS_AS(quantile({}, 0.5), ConfigError);

    RngStream rng(9, 0);
    std::vector<RunResult> many;
    for (int i = 0; i < 60; ++i) {
        RunResult r;
        r.seed = static_cast<std::uint64_t>(i % 5);
        r.fold = i % 3;
        r.lambda = std::vector<double>{0.0, 0.5, 10.0, 2.0}[static_cast<std::size_t>(i % 4)];
        r.method = i % 8 < 4 ? censor::Method::density_ratio : censor::Method::wasserstein;
        r.test_ba = rng.uniform();
        r.overfit_ratio = rng.uniform();
        many.push_back(r);
    }
    many[7].failed = true;
    const auto grouped = aggregate(many);
    std::size_t total = 0;
    for (const auto& row : grouped) total += row.n;
    CHECK(total == many.size() - 1);
    CHECK(grouped.size() == 8);
    for (std::size_t i = 1; i < grouped.size(); ++i) CHECK(group_less(grouped[i - 1].key, grouped[i].key, kGridCell));

    auto shuffled = many;
    rng.shuffle(std::span<RunResult>(shuffled));
    const auto again = aggregate(shuffled);
    REQUIRE(again.size() == grouped.size());
    for (std::size_t i = 0; i < grouped.size(); ++i) {
        CHECK(again[i].n == grouped[i].n);
        CHECK(again[i].key.lambda == grouped[i].key.lambda);
        CHECK(again[i].test_ba.median == grouped[i].test_ba.median);
        CHECK(again[i].overfit_ratio.q3 == grouped[i].overfit_ratio.q3);
        CHECK(again[i].test_ba.mean == doctest::Approx(grouped[i].test_ba.mean).epsilon(1e-14));
    }
}
