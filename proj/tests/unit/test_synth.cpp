#include <doctest.h>

#include "censoring/errors.hpp"
#include "censoring/synth/generator.hpp"
#include "censoring/synth/ground_truth.hpp"
#include "censoring/synth/splits.hpp"

#include <algorithm>
#include <cmath>
#include <set>

using namespace censoring;
using namespace censoring::synth;
using nn::Matrix;
using nn::RngStream;

namespace {

// Plug-in MI (nats) from paired integer codes.
double plugin_mi(std::span<const int> a, int na, std::span<const int> b, int nb) {
    Matrix joint(static_cast<std::size_t>(na), static_cast<std::size_t>(nb));
    for (std::size_t i = 0; i < a.size(); ++i) joint(static_cast<std::size_t>(a[i]), static_cast<std::size_t>(b[i])) += 1.0;
    nn::scale_in_place(joint, 1.0 / static_cast<double>(a.size()));
    double total = 0.0;
    for (double v : joint.data()) total += v;
    for (double& v : joint.data()) v /= total;
    return exact_discrete_mi(joint);
}

// Equiprobable bins under the standard normal.
int normal_bin(double v, int bins) {
    const double u = 0.5 * std::erfc(-v / std::sqrt(2.0));
    return std::clamp(static_cast<int>(u * bins), 0, bins - 1);
}

// Equal-width bins over the sample range.
std::vector<int> range_bins(std::span<const double> v, int bins) {
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    std::vector<int> out(v.size());
    const double width = (*hi - *lo) / bins;
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::clamp(static_cast<int>((v[i] - *lo) / width), 0, bins - 1);
    return out;
}

// 1-D W1 between discrete measures as the integral of |F - G|.
double cdf_w1(std::vector<std::pair<double, double>> mu, std::vector<std::pair<double, double>> nu) {
    std::vector<double> grid;
    for (auto& [x, m] : mu) grid.push_back(x);
    for (auto& [x, m] : nu) grid.push_back(x);
    std::sort(grid.begin(), grid.end());
    auto cdf = [](const auto& d, double t) {
        double acc = 0.0;
        for (auto& [x, m] : d) {
            if (x <= t) acc += m;
        }
        return acc;
    };
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        total += std::abs(cdf(mu, grid[i]) - cdf(nu, grid[i])) * (grid[i + 1] - grid[i]);
    }
    return total;
}

DiscreteMeasure random_measure(std::size_t n, std::size_t dim, RngStream& rng) {
    DiscreteMeasure m{Matrix(n, dim), std::vector<double>(n)};
    for (double& v : m.points.data()) v = std::round(rng.uniform(-3, 3) * 4) / 4;
    double total = 0.0;
    for (double& w : m.masses) total += (w = rng.uniform() + 0.05);
    for (double& w : m.masses) w /= total;
    return m;
}

GenModelSpec identity_spec() {
    GenModelSpec spec;
    spec.variant = Variant::A;
    spec.classes = 2;
    spec.nuisance = 3;
    spec.latent_dim = 3;
    spec.input_dim = 3;
    spec.label_prior = {0.5, 0.5};
    spec.class_means = Matrix{{-1, 0, 0}, {1, 0, 0}};
    spec.mixing = {Matrix{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
    return spec;
}

TrialBatch binary_batch(const std::vector<int>& per_s_targets, const std::vector<int>& per_s_nontargets) {
    TrialBatch b;
    b.classes = 2;
    b.nuisance = static_cast<int>(per_s_targets.size());
    b.channels = 1;
    std::vector<double> xs;
    for (std::size_t s = 0; s < per_s_targets.size(); ++s) {
        for (int i = 0; i < per_s_targets[s] + per_s_nontargets[s]; ++i) {
            b.y.push_back(i < per_s_targets[s] ? 1 : 0);
            b.s.push_back(static_cast<int>(s));
            xs.push_back(static_cast<double>(xs.size()));
        }
    }
    b.x = Matrix(xs.size(), 1, xs);
    return b;
}

}  // namespace

TEST_CASE("generate: noiseless identity mixing reproduces the latent") {
    RngStream rng(1, 0);
    auto g = generate(identity_spec(), 50, rng);
    CHECK(g.batch.x == g.z_true);
    g.batch.validate();
    CHECK(g.w_true.empty());
}

TEST_CASE("generate: invalid specs are rejected") {
    RngStream rng(2, 0);
    auto spec = identity_spec();
    spec.label_prior = {0.6, 0.6};
    CHECK_THROWS_AS(generate(spec, 5, rng), ConfigError);
    spec = identity_spec();
    spec.mixing = {Matrix{{1, 1, 0}, {1, 1, 0}, {0, 0, 1}}};
    CHECK_THROWS_AS(generate(spec, 5, rng), ConfigError);
    spec = identity_spec();
    spec.noise_scale = -1.0;
    CHECK_THROWS_AS(generate(spec, 5, rng), ConfigError);
    CHECK_THROWS_AS(generate(identity_spec(), 0, rng), ConfigError);
}

TEST_CASE("variant A: latent carries no nuisance information") {
    RngStream rng(3, 0);
    SynthParams p;
    p.subjects = 2;
    p.sessions_per_subject = 2;
    p.latent_dim = 4;
    p.input_dim = 4;
    p.offset_scale = 3.0;
    auto spec = make_spec(p, rng);
    auto g = generate(spec, 100000, rng);
    for (std::size_t c = 0; c < 4; ++c) {
        std::vector<double> col(g.z_true.rows());
        for (std::size_t i = 0; i < col.size(); ++i) col[i] = g.z_true(i, c);
        const double mi = plugin_mi(range_bins(col, 20), 20, g.batch.s, spec.nuisance);
        CHECK(mi < 0.02);
    }
    // The observed signal does depend on s.
    std::vector<double> x0(g.batch.x.rows());
    for (std::size_t i = 0; i < x0.size(); ++i) x0[i] = g.batch.x(i, 0);
    CHECK(plugin_mi(range_bins(x0, 20), 20, g.batch.s, spec.nuisance) > 0.05);
}

TEST_CASE("variant B: empirical I(Y;S) matches the configured table") {
    RngStream rng(4, 0);
    SynthParams p;
    p.variant = Variant::B;
    p.subjects = 3;
    p.sessions_per_subject = 1;
    p.classes = 3;
    p.latent_dim = 2;
    p.input_dim = 2;
    p.label_skew = 0.8;
    auto spec = make_spec(p, rng);
    Matrix joint = spec.label_given_nuisance;
    nn::scale_in_place(joint, 1.0 / spec.nuisance);
    const double exact = exact_discrete_mi(joint);
    CHECK(exact > 0.01);
    auto g = generate(spec, 100000, rng);
    const double empirical = plugin_mi(g.batch.y, spec.classes, g.batch.s, spec.nuisance);
    CHECK(std::abs(empirical - exact) < 0.02);
}

TEST_CASE("variant C and array-shaped trials") {
    RngStream rng(5, 0);
    SynthParams p;
    p.variant = Variant::C;
    p.latent_dim = 3;
    p.w_dim = 2;
    p.input_dim = 6;
    p.samples = 5;
    auto spec = make_spec(p, rng);
    auto g = generate(spec, 20, rng);
    g.batch.validate();
    CHECK(g.batch.x.cols() == 30);
    CHECK(g.w_true.rows() == 20);
    CHECK(g.w_true.cols() == 2);
    // [A B] has orthonormal columns.
    Matrix ab = nn::hconcat(std::vector<Matrix>{spec.mixing[0], spec.w_mixing});
    Matrix gram = nn::transposed_matmul(ab, ab);
    for (std::size_t i = 0; i < gram.rows(); ++i)
        for (std::size_t j = 0; j < gram.cols(); ++j) CHECK(std::abs(gram(i, j) - (i == j ? 1.0 : 0.0)) < 1e-12);
}

TEST_CASE("make_spec and generate are deterministic") {
    SynthParams p;
    RngStream r1(9, 1);
    RngStream r2(9, 1);
    auto a = generate(make_spec(p, r1), 30, r1);
    auto b = generate(make_spec(p, r2), 30, r2);
    CHECK(a.batch == b.batch);
    CHECK(a.z_true == b.z_true);
}

TEST_CASE("gaussian mutual information") {
    CHECK(closed_form_gaussian_mi(0.0) == 0.0);
    CHECK(closed_form_gaussian_mi(0.5) == doctest::Approx(0.143841).epsilon(1e-6));
    CHECK(closed_form_gaussian_mi(0.9) == doctest::Approx(0.830366).epsilon(1e-6));
    CHECK(closed_form_gaussian_mi(0.9) == doctest::Approx(-0.5 * std::log(0.19)).epsilon(1e-14));
    CHECK_THROWS_AS(closed_form_gaussian_mi(1.0), ConfigError);
    RngStream rng(6, 0);
    CHECK_THROWS_AS(gaussian_pair(-1.2, 10, rng), ConfigError);

    for (double rho : {0.0, 0.5, 0.9}) {
        auto pair = gaussian_pair(rho, 1000000, rng);
        const int bins = 60;
        std::vector<int> a(pair.a.size());
        std::vector<int> b(pair.b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            a[i] = normal_bin(pair.a[i], bins);
            b[i] = normal_bin(pair.b[i], bins);
        }
        CHECK(std::abs(plugin_mi(a, bins, b, bins) - closed_form_gaussian_mi(rho)) < 0.02);
    }
}

TEST_CASE("exact_discrete_mi examples and properties") {
    CHECK(exact_discrete_mi(Matrix{{0.25, 0.25}, {0.25, 0.25}}) == doctest::Approx(0.0));
    CHECK(exact_discrete_mi(Matrix{{0.5, 0.0}, {0.0, 0.5}}) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
    const double expected = 0.8 * std::log(1.6) + 0.2 * std::log(0.4);
    CHECK(expected == doctest::Approx(0.192745).epsilon(1e-6));
    CHECK(exact_discrete_mi(Matrix{{0.4, 0.1}, {0.1, 0.4}}) == doctest::Approx(expected).epsilon(1e-14));
    CHECK_THROWS_AS(exact_discrete_mi(Matrix{{0.4, 0.1}, {0.1, 0.3}}), ConfigError);
    CHECK_THROWS_AS(exact_discrete_mi(Matrix{{1.2, -0.2}}), ConfigError);

    RngStream rng(7, 0);
    for (int trial = 0; trial < 50; ++trial) {
        Matrix t(2 + rng.below(4), 2 + rng.below(4));
        double total = 0.0;
        for (double& v : t.data()) total += (v = rng.uniform() < 0.2 ? 0.0 : rng.uniform());
        nn::scale_in_place(t, 1.0 / total);
        const double mi = exact_discrete_mi(t);
        CHECK(mi >= 0.0);
        CHECK(std::abs(mi - exact_discrete_mi(nn::transpose(t))) < 1e-12);
    }
}

TEST_CASE("brute_force_w1 examples") {
    DiscreteMeasure zero{Matrix{{0.0}}, {1.0}};
    DiscreteMeasure one{Matrix{{1.0}}, {1.0}};
    CHECK(brute_force_w1(zero, zero) == 0.0);
    CHECK(brute_force_w1(zero, one) == doctest::Approx(1.0).epsilon(1e-12));

    DiscreteMeasure joint{Matrix{{0, 0}, {1, 1}}, {0.5, 0.5}};
    DiscreteMeasure product{Matrix{{0, 0}, {0, 1}, {1, 0}, {1, 1}}, {0.25, 0.25, 0.25, 0.25}};
    CHECK(brute_force_w1(joint, product) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(brute_force_w1(product, joint) == doctest::Approx(0.5).epsilon(1e-12));

    DiscreteMeasure bad{Matrix{{0.0}, {1.0}}, {0.5, 0.6}};
    CHECK_THROWS_AS(brute_force_w1(bad, zero), ConfigError);
}

TEST_CASE("brute_force_w1 agrees with the 1-D cdf formula") {
    RngStream rng(8, 0);
    for (int trial = 0; trial < 30; ++trial) {
        auto mu = random_measure(1 + rng.below(8), 1, rng);
        auto nu = random_measure(1 + rng.below(8), 1, rng);
        std::vector<std::pair<double, double>> a;
        std::vector<std::pair<double, double>> b;
        for (std::size_t i = 0; i < mu.masses.size(); ++i) a.emplace_back(mu.points(i, 0), mu.masses[i]);
        for (std::size_t i = 0; i < nu.masses.size(); ++i) b.emplace_back(nu.points(i, 0), nu.masses[i]);
        CHECK(std::abs(brute_force_w1(mu, nu) - cdf_w1(a, b)) < 1e-9);
    }
}

TEST_CASE("brute_force_w1 is a metric on random triples") {
    RngStream rng(9, 0);
    for (int trial = 0; trial < 30; ++trial) {
        auto a = random_measure(2 + rng.below(10), 2, rng);
        auto b = random_measure(2 + rng.below(10), 2, rng);
        auto c = random_measure(2 + rng.below(10), 2, rng);
        const double ab = brute_force_w1(a, b);
        const double bc = brute_force_w1(b, c);
        const double ac = brute_force_w1(a, c);
        CHECK(ac <= ab + bc + 1e-9);
        CHECK(std::abs(ab - brute_force_w1(b, a)) < 1e-9);
        CHECK(brute_force_w1(a, a) < 1e-12);
    }
}

TEST_CASE("brute_force_w1 handles a 200-point support") {
    RngStream rng(10, 0);
    auto a = random_measure(200, 2, rng);
    auto b = random_measure(200, 2, rng);
    const double w = brute_force_w1(a, b);
    CHECK(w > 0.0);
    CHECK(std::isfinite(w));
}

TEST_CASE("sorted_sample_w1 recovers a location shift") {
    RngStream rng(11, 0);
    std::vector<double> a(20000);
    std::vector<double> b(20000);
    for (auto& v : a) v = rng.normal();
    for (auto& v : b) v = rng.normal() + 1.5;
    CHECK(std::abs(sorted_sample_w1(a, b) - 1.5) < 0.03);
}

TEST_CASE("subsample_nontargets") {
    RngStream rng(12, 0);
    SUBCASE("ratio 10 keeps all targets") {
        auto b = binary_batch({100}, {5000});
        auto out = subsample_nontargets(b, 10, rng);
        CHECK(out.size() == 1100);
        CHECK(std::count(out.y.begin(), out.y.end(), 1) == 100);
    }
    SUBCASE("ratio 1 with equal counts keeps everything") {
        auto b = binary_batch({20, 10}, {20, 10});
        auto out = subsample_nontargets(b, 1, rng);
        CHECK(out.size() == b.size());
        std::multiset<double> lhs(b.x.data().begin(), b.x.data().end());
        std::multiset<double> rhs(out.x.data().begin(), out.x.data().end());
        CHECK(lhs == rhs);
    }
    SUBCASE("per-nuisance ratio and shortage warnings") {
        auto b = binary_batch({3, 5}, {100, 12});
        std::vector<std::string> warnings;
        auto out = subsample_nontargets(b, 4, rng, &warnings);
        CHECK(out.size() == 3 + 12 + 5 + 12);
        CHECK(warnings.size() == 1);
    }
    SUBCASE("deterministic under a fixed stream") {
        auto b = binary_batch({10, 10}, {300, 300});
        RngStream r1(5, 5);
        RngStream r2(5, 5);
        CHECK(subsample_nontarget_indices(b, 10, r1).indices == subsample_nontarget_indices(b, 10, r2).indices);
    }
    auto multiclass = binary_batch({1}, {1});
    multiclass.classes = 3;
    CHECK_THROWS_AS(subsample_nontargets(multiclass, 1, rng), ConfigError);
}

TEST_CASE("subject_split") {
    std::vector<int> subjects(32);
    for (int i = 0; i < 32; ++i) subjects[static_cast<std::size_t>(i)] = i;
    RngStream rng(13, 0);

    auto check_disjoint = [](const SubjectSplit& s) {
        std::set<int> all;
        for (auto* v : {&s.train, &s.val, &s.test}) all.insert(v->begin(), v->end());
        CHECK(all.size() == s.train.size() + s.val.size() + s.test.size());
    };
    auto a = subject_split(subjects, 28, 0, 4, 0, rng);
    CHECK(a.train.size() == 28);
    CHECK(a.val.empty());
    CHECK(a.test.size() == 4);
    check_disjoint(a);

    auto b = subject_split(subjects, 24, 4, 4, 1, rng);
    CHECK(b.train.size() == 24);
    CHECK(b.val.size() == 4);
    CHECK(b.test.size() == 4);
    check_disjoint(b);

    CHECK(subject_split(subjects, 24, 4, 4, 1, rng).test == b.test);
    CHECK(subject_split(subjects, 24, 4, 4, 2, rng).test != b.test);
    CHECK_THROWS_AS(subject_split(subjects, 30, 2, 4, 0, rng), ConfigError);

    // Sessions follow their subject.
    TrialBatch batch;
    batch.classes = 1;
    batch.nuisance = 64;
    batch.channels = 1;
    for (int s = 0; s < 64; ++s) {
        batch.y.push_back(0);
        batch.s.push_back(s);
    }
    batch.x = Matrix(64, 1);
    auto rows = rows_for_subjects(batch, a.test, 2);
    CHECK(rows.size() == 8);
    for (auto r : rows) CHECK(std::count(a.test.begin(), a.test.end(), batch.s[r] / 2) == 1);
}
