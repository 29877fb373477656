#include <catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include <mdag/mdag.hpp>

#include "helpers.hpp"

using namespace mdag;
using Catch::Approx;

namespace {

const double kNaN = std::numeric_limits<double>::quiet_NaN();

GaussianDag scalar(double mean, double var = 1.0) {
    return {DagStructure(1), Eigen::VectorXd::Constant(1, mean), {Eigen::VectorXd(0)}, Eigen::VectorXd::Constant(1, var)};
}

MdagModel two_bumps() { return MdagModel(Eigen::Vector2d(0.5, 0.5), {scalar(0.0), scalar(5.0)}); }

GaussianDag chain2() { return {DagStructure::from_arcs(2, {{0, 1}}), Eigen::Vector2d::Zero(), {Eigen::VectorXd(0), Eigen::VectorXd::Ones(1)}, Eigen::Vector2d::Ones()}; }

double relative_gap(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) { return (a - b).norm() / std::max(1.0, b.norm()); }

}  // namespace

TEST_CASE("complete-case statistics") {
    const auto s = complete_case_stats(Eigen::Vector2d(1, 2), 0, 2);
    CHECK(s.triples[0].count == 1.0);
    CHECK(s.triples[0].sum == Eigen::Vector2d(1, 2));
    Eigen::Matrix2d outer;
    outer << 1, 2, 2, 4;
    CHECK(s.triples[0].sum_outer == outer);
    CHECK(s.triples[1].count == 0.0);
    CHECK(s.triples[1].sum.isZero());
    CHECK(s.triples[1].sum_outer.isZero());

    const auto z = complete_case_stats(Eigen::Vector3d::Zero(), 1, 2);
    CHECK(z.triples[1].count == 1.0);
    CHECK(z.triples[1].sum.isZero());
    CHECK(z.triples[1].sum_outer.isZero());

    const auto both = merge(complete_case_stats(Eigen::Vector2d(1, 1), 0, 2), complete_case_stats(Eigen::Vector2d(2, 2), 1, 2));
    CHECK(both.counts() == Eigen::Vector2d(1, 1));

    CHECK_THROWS_AS(complete_case_stats(Eigen::Vector2d(1, 2), 2, 2), Error);
}

TEST_CASE("merge identities") {
    auto rng = make_stream(21, "stats-test");
    auto random_stats = [&] {
        Ecmss out = Ecmss::zero(2, 3);
        for (int r = 0; r < 5; ++r)
            out = merge(out, complete_case_stats(testutil::random_matrix(3, 1, rng), static_cast<int>(draw_uniform(rng, 0, 2)), 2));
        return out;
    };
    const auto a = random_stats(), b = random_stats(), c = random_stats();
    const auto zero = Ecmss::zero(2, 3);
    const auto az = merge(a, zero);
    const auto ab = merge(a, b), ba = merge(b, a);
    const auto left = merge(merge(a, b), c), right = merge(a, merge(b, c));
    for (int k = 0; k < 2; ++k) {
        CHECK(az.triples[k].sum_outer == a.triples[k].sum_outer);
        CHECK(relative_gap(ab.triples[k].sum_outer, ba.triples[k].sum_outer) < 1e-10);
        CHECK(relative_gap(left.triples[k].sum_outer, right.triples[k].sum_outer) < 1e-10);
        CHECK(relative_gap(left.triples[k].sum, right.triples[k].sum) < 1e-10);
    }
    CHECK_THROWS_AS(merge(a, Ecmss::zero(3, 3)), Error);
}

TEST_CASE("responsibilities") {
    CHECK(responsibilities(MdagModel(Eigen::VectorXd::Ones(1), {scalar(0.0)}), Eigen::VectorXd::Constant(1, 3.0))[0] == 1.0);

    const auto mid = responsibilities(two_bumps(), Eigen::VectorXd::Constant(1, 2.5));
    CHECK(mid[0] == Approx(0.5).epsilon(1e-12));
    CHECK(mid[1] == Approx(0.5).epsilon(1e-12));

    const auto at0 = responsibilities(two_bumps(), Eigen::VectorXd::Constant(1, 0.0));
    const double oracle = testutil::phi(0.0) / (testutil::phi(0.0) + testutil::phi(5.0));
    CHECK(at0[0] == Approx(oracle).epsilon(1e-12));

    // Nothing observed: prior weights.
    const MdagModel skew(Eigen::Vector2d(0.3, 0.7), {scalar(0.0), scalar(5.0)});
    const auto none = responsibilities(skew, Eigen::VectorXd::Constant(1, kNaN));
    CHECK(none[0] == Approx(0.3).epsilon(1e-12));

    const NoiseComponent box(Eigen::VectorXd::Constant(1, -1.0), Eigen::VectorXd::Constant(1, 1.0));
    const MdagModel only_noise(Eigen::Vector2d(1.0, 0.0), {scalar(0.0)}, box);
    CHECK_THROWS_MATCHES(responsibilities(only_noise, Eigen::VectorXd::Constant(1, 3.0)), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) { return e.code() == ErrorCode::AllComponentsZeroDensity; }));
}

TEST_CASE("responsibilities are a probability vector") {
    auto rng = make_stream(22, "stats-test");
    for (int t = 0; t < 30; ++t) {
        std::vector<GaussianDag> comps;
        for (int c = 0; c < 3; ++c) comps.push_back(testutil::random_gaussian_dag(testutil::random_dag(3, rng), rng));
        const MdagModel m(draw_dirichlet(rng, Eigen::Vector3d::Ones()), comps);
        Eigen::VectorXd y = 3.0 * testutil::random_matrix(3, 1, rng);
        if (t % 2) y[t % 3] = kNaN;
        const auto r = responsibilities(m, y);
        CHECK(r.minCoeff() >= 0.0);
        CHECK(std::abs(r.sum() - 1.0) < 1e-12);
    }
}

TEST_CASE("conditional moments") {
    const auto g = chain2();
    CHECK(conditional_moments(g, Eigen::Vector2d(1, 2)).mean.size() == 0);

    const auto none = conditional_moments(g, Eigen::Vector2d(kNaN, kNaN));
    const auto joint = to_multivariate_gaussian(g);
    CHECK(none.mean.isApprox(joint.mean));
    CHECK((none.covariance - joint.covariance).norm() < 1e-14);

    const auto given = conditional_moments(g, Eigen::Vector2d(1.0, kNaN));
    REQUIRE(given.missing == std::vector<int>{1});
    CHECK(given.mean[0] == Approx(1.0).epsilon(1e-14));
    CHECK(given.covariance(0, 0) == Approx(1.0).epsilon(1e-14));

    const auto back = conditional_moments(g, Eigen::Vector2d(kNaN, 2.0));
    CHECK(back.mean[0] == Approx(1.0).epsilon(1e-14));
    CHECK(back.covariance(0, 0) == Approx(0.5).epsilon(1e-14));
}

TEST_CASE("ecmss on complete labeled data equals exact statistics") {
    auto rng = make_stream(23, "stats-test");
    std::vector<GaussianDag> comps;
    for (int c = 0; c < 2; ++c) comps.push_back(testutil::random_gaussian_dag(testutil::random_dag(3, rng), rng));
    const MdagModel m(Eigen::Vector2d(0.4, 0.6), comps);
    const auto d = sample(m, 200, 24);
    const auto e = ecmss(d, m);
    for (int c = 0; c < 2; ++c) {
        std::vector<std::size_t> rows;
        for (std::size_t r = 0; r < d.labels.size(); ++r)
            if (d.labels[r] == c) rows.push_back(r);
        const auto exact = testutil::stats_of(d.subset(rows).values);
        CHECK(e.triples[c].count == exact.count);
        CHECK(relative_gap(e.triples[c].sum, exact.sum) < 1e-10);
        CHECK(relative_gap(e.triples[c].sum_outer, exact.sum_outer) < 1e-10);
    }
}

TEST_CASE("ecmss matches a brute-force enumeration") {
    const auto m = two_bumps();
    Eigen::MatrixXd x(2, 1);
    x << 1.0, 4.0;
    const auto e = ecmss(make_dataset(x), m);
    Eigen::Vector2d n = Eigen::Vector2d::Zero(), r = Eigen::Vector2d::Zero(), s = Eigen::Vector2d::Zero();
    for (int i = 0; i < 2; ++i) {
        const double p0 = 0.5 * testutil::phi(x(i, 0), 0.0), p1 = 0.5 * testutil::phi(x(i, 0), 5.0);
        const Eigen::Vector2d resp(p0 / (p0 + p1), p1 / (p0 + p1));
        n += resp;
        r += resp * x(i, 0);
        s += resp * x(i, 0) * x(i, 0);
    }
    for (int c = 0; c < 2; ++c) {
        CHECK(e.triples[c].count == Approx(n[c]).epsilon(1e-12));
        CHECK(e.triples[c].sum[0] == Approx(r[c]).epsilon(1e-12));
        CHECK(e.triples[c].sum_outer(0, 0) == Approx(s[c]).epsilon(1e-12));
    }
    CHECK(e.total_cases == 2.0);
}

TEST_CASE("ecmss adds the conditional covariance of missing values") {
    const MdagModel m(Eigen::VectorXd::Ones(1), {chain2()});
    Eigen::MatrixXd x(1, 2);
    x << 1.0, kNaN;
    const auto e = ecmss(make_dataset(x), m);
    const auto& t = e.triples[0];
    CHECK(t.sum[1] == Approx(1.0));
    // E[x1^2 | x0 = 1] = mean^2 + var = 2.
    CHECK(t.sum_outer(1, 1) == Approx(2.0).epsilon(1e-12));
    CHECK(t.sum_outer(0, 1) == Approx(1.0).epsilon(1e-12));
    CHECK(t.sum_outer(0, 0) == Approx(1.0).epsilon(1e-12));
}

TEST_CASE("ecmss invariants on incomplete data") {
    auto rng = make_stream(25, "stats-test");
    std::vector<GaussianDag> comps;
    for (int c = 0; c < 3; ++c) comps.push_back(testutil::random_gaussian_dag(testutil::random_dag(4, rng), rng));
    const NoiseComponent box(Eigen::VectorXd::Constant(4, -20.0), Eigen::VectorXd::Constant(4, 20.0));
    const MdagModel m(Eigen::Vector4d(0.05, 0.3, 0.3, 0.35), comps, box);
    auto d = sample(m, 300, 26).without_labels();
    for (Eigen::Index r = 0; r < d.cases(); ++r)
        for (Eigen::Index j = 0; j < 4; ++j)
            if (draw_uniform(rng, 0, 1) < 0.2) d.values(r, j) = kNaN;

    const auto e = ecmss(d, m);
    CHECK(std::abs(e.counts().sum() - static_cast<double>(d.cases())) < 1e-8);
    CHECK(e.triples[0].sum.isZero());
    for (int c = 1; c < 4; ++c) {
        const auto& t = e.triples[c];
        CHECK(t.sum_outer.isApprox(t.sum_outer.transpose()));
        if (t.count > 1e-6) CHECK(min_eigenvalue(t.centered()) >= -1e-8);
    }

    Ecmss merged = Ecmss::zero(4, 4);
    for (Eigen::Index r = 0; r < d.cases(); ++r) merged = merge(merged, ecmss(d.subset({static_cast<std::size_t>(r)}), m));
    for (int c = 0; c < 4; ++c) {
        CHECK(merged.triples[c].count == Approx(e.triples[c].count).epsilon(1e-10));
        CHECK(relative_gap(merged.triples[c].sum_outer, e.triples[c].sum_outer) < 1e-10);
    }
}
