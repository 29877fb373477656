#include <catch_amalgamated.hpp>

#include <cmath>
#include <numeric>

#include <mdag/mdag.hpp>

#include "helpers.hpp"

using namespace mdag;
using Catch::Approx;

namespace {

std::vector<int> all(int n) {
    std::vector<int> out(static_cast<std::size_t>(n));
    std::iota(out.begin(), out.end(), 0);
    return out;
}

}  // namespace

TEST_CASE("posterior update") {
    const auto p = NormalWishartPrior{1.0, Eigen::VectorXd::Zero(1), 1.0, Eigen::MatrixXd::Ones(1, 1)};
    const auto same = posterior_update(p, SuffStats::zero(1));
    CHECK(same.nu == p.nu);
    CHECK(same.tau == p.tau);

    const SuffStats one{1.0, Eigen::VectorXd::Constant(1, 2.0), Eigen::MatrixXd::Constant(1, 1, 4.0)};
    const auto post = posterior_update(p, one);
    CHECK(post.nu == 2.0);
    CHECK(post.mu0[0] == Approx(1.0));
    CHECK(post.alpha == 2.0);
    CHECK(post.tau(0, 0) == Approx(3.0));

    const SuffStats half{0.5, Eigen::VectorXd::Constant(1, 1.0), Eigen::MatrixXd::Constant(1, 1, 2.0)};
    const auto frac = posterior_update(p, half);
    const double xbar = 2.0;
    CHECK(frac.nu == 1.5);
    CHECK(frac.alpha == 1.5);
    CHECK(frac.mu0[0] == Approx(1.0 / 1.5));
    CHECK(frac.tau(0, 0) == Approx(1.0 + (2.0 - 0.5 * xbar * xbar) + (0.5 / 1.5) * xbar * xbar));

    const SuffStats bad{2.0, Eigen::VectorXd::Constant(1, 4.0), Eigen::MatrixXd::Constant(1, 1, 1.0)};
    CHECK_THROWS_MATCHES(posterior_update(p, bad), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) { return e.code() == ErrorCode::NonPsdScatter; }));
}

TEST_CASE("posterior updates compose") {
    auto rng = make_stream(31, "bayes-test");
    for (int t = 0; t < 20; ++t) {
        const auto p = testutil::random_prior(3, rng);
        const Eigen::MatrixXd a = testutil::random_matrix(4, 3, rng), b = testutil::random_matrix(6, 3, rng);
        Eigen::MatrixXd ab(10, 3);
        ab << a, b;
        const auto once = posterior_update(p, testutil::stats_of(ab));
        const auto twice = posterior_update(posterior_update(p, testutil::stats_of(a)), testutil::stats_of(b));
        CHECK(once.nu == Approx(twice.nu));
        CHECK((once.mu0 - twice.mu0).norm() < 1e-10 * std::max(1.0, once.mu0.norm()));
        CHECK((once.tau - twice.tau).norm() < 1e-10 * once.tau.norm());
    }
}

TEST_CASE("family marginal likelihood") {
    auto rng = make_stream(32, "bayes-test");
    const auto p = testutil::random_prior(2, rng);
    CHECK(family_marginal_loglik(p, SuffStats::zero(2), all(2)) == 0.0);
    CHECK_THROWS_AS(family_marginal_loglik(p, SuffStats::zero(2), std::vector<int>{}), Error);

    const auto p1 = testutil::random_prior(1, rng);
    const Eigen::MatrixXd x1 = testutil::random_matrix(1, 1, rng);
    CHECK(family_marginal_loglik(p1, testutil::stats_of(x1), all(1)) ==
          Approx(testutil::predictive_log_density(p1, x1.row(0).transpose())).epsilon(1e-10));
}

TEST_CASE("family marginal likelihood equals the sequential predictive product") {
    auto rng = make_stream(33, "bayes-test");
    for (int t = 0; t < 100; ++t) {
        const int n = 1 + static_cast<int>(draw_uniform(rng, 0, 4));
        const int cases = 1 + static_cast<int>(draw_uniform(rng, 0, 10));
        const auto p = testutil::random_prior(n, rng);
        const Eigen::MatrixXd x = 2.0 * testutil::random_matrix(cases, n, rng);
        const auto stats = testutil::stats_of(x);
        // Every nonempty subset, scored against the subset's own prior.
        for (int mask = 1; mask < (1 << n); ++mask) {
            std::vector<int> y;
            for (int j = 0; j < n; ++j)
                if (mask & (1 << j)) y.push_back(j);
            Eigen::MatrixXd xy(cases, static_cast<Eigen::Index>(y.size()));
            for (std::size_t a = 0; a < y.size(); ++a) xy.col(static_cast<Eigen::Index>(a)) = x.col(y[a]);
            const double oracle = testutil::sequential_oracle(p.restrict_to(y), xy);
            CHECK(family_marginal_loglik(p, stats, y) == Approx(oracle).epsilon(1e-8));
        }
    }
}

TEST_CASE("local score") {
    auto rng = make_stream(34, "bayes-test");
    const auto p = testutil::random_prior(3, rng);
    const auto stats = testutil::stats_of(testutil::random_matrix(8, 3, rng));
    CHECK(local_score(p, stats, 1, std::vector<int>{}) == family_marginal_loglik(p, stats, std::vector<int>{1}));
    CHECK(local_score(p, SuffStats::zero(3), 1, std::vector<int>{0}) == 0.0);
    CHECK(local_score(p, stats, 0, std::vector<int>{1, 2}) ==
          Approx(family_marginal_loglik(p, stats, all(3)) - family_marginal_loglik(p, stats, std::vector<int>{1, 2})));
    CHECK_THROWS_MATCHES(local_score(p, stats, 1, std::vector<int>{1}), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) { return e.code() == ErrorCode::ChildInParents; }));
}

TEST_CASE("score equivalence for two variables") {
    auto rng = make_stream(35, "bayes-test");
    for (int t = 0; t < 100; ++t) {
        const Eigen::MatrixXd cov = testutil::random_spd(2, rng);
        const auto p = NormalWishartPrior::from_prior_network(testutil::random_matrix(2, 1, rng), cov, draw_uniform(rng, 0.5, 4.0),
                                                              draw_uniform(rng, 3.5, 8.0));
        const auto stats = testutil::stats_of(testutil::random_matrix(1 + t % 15, 2, rng));
        const double forward = local_score(p, stats, 0, std::vector<int>{}) + local_score(p, stats, 1, std::vector<int>{0});
        const double backward = local_score(p, stats, 1, std::vector<int>{}) + local_score(p, stats, 0, std::vector<int>{1});
        CHECK(std::abs(forward - backward) <= 1e-8);
    }
}

TEST_CASE("dirichlet marginal likelihood") {
    const DirichletPrior flat{Eigen::Vector2d(1, 1)};
    CHECK(dirichlet_log_marglik(flat, Eigen::Vector2d::Zero()) == 0.0);
    CHECK(dirichlet_log_marglik(flat, Eigen::Vector2d(2, 1)) == Approx(std::log(1.0 / 12.0)).epsilon(1e-14));
    const double oracle = std::lgamma(2.0) - std::lgamma(3.0) + 2.0 * (std::lgamma(1.5) - std::lgamma(1.0));
    CHECK(dirichlet_log_marglik(flat, Eigen::Vector2d(0.5, 0.5)) == Approx(oracle).epsilon(1e-14));
    CHECK_THROWS_AS(dirichlet_log_marglik(flat, Eigen::Vector2d(-1, 1)), Error);
}

TEST_CASE("dirichlet map") {
    CHECK(dirichlet_map({Eigen::Vector2d(2, 2)}, Eigen::Vector2d::Zero()).isApprox(Eigen::Vector2d(0.5, 0.5)));
    CHECK(dirichlet_map({Eigen::Vector2d(1, 1)}, Eigen::Vector2d(3, 1)).isApprox(Eigen::Vector2d(0.75, 0.25)));
    CHECK(dirichlet_map({Eigen::VectorXd::Constant(1, 0.5)}, Eigen::VectorXd::Constant(1, 3.0))[0] == 1.0);
    // Mean fallback when a mode term is not positive.
    CHECK(dirichlet_map({Eigen::Vector2d(0.5, 0.5)}, Eigen::Vector2d(0.2, 3.0)).isApprox(Eigen::Vector2d(0.7, 3.5) / 4.2));

    const auto std_noise = DirichletPrior::standard(3, true);
    CHECK(std_noise.alphas[0] == 0.01);
    CHECK(std_noise.alphas[1] == Approx(0.33));
}

TEST_CASE("map parameters") {
    auto rng = make_stream(36, "bayes-test");
    Eigen::MatrixXd sym(4, 1);
    sym << -2, -1, 1, 2;
    const auto p0 = NormalWishartPrior::diffuse(Eigen::VectorXd::Zero(1));
    CHECK(std::abs(map_parameters(p0, testutil::stats_of(sym), DagStructure(1)).intercept()[0]) < 1e-15);

    Eigen::MatrixXd lin(2000, 2);
    for (Eigen::Index r = 0; r < lin.rows(); ++r) {
        lin(r, 0) = draw_normal(rng);
        lin(r, 1) = 2.0 * lin(r, 0);
    }
    const auto g = map_parameters(NormalWishartPrior::diffuse(Eigen::VectorXd::Zero(2), 0.01), testutil::stats_of(lin),
                                  DagStructure::from_arcs(2, {{0, 1}}));
    CHECK(std::abs(g.coefficients(1)[0] - 2.0) < 0.01);

    const auto prior = testutil::random_prior(3, rng);
    const auto none = map_parameters(prior, SuffStats::zero(3), DagStructure(3));
    for (int i = 0; i < 3; ++i) {
        CHECK(none.intercept()[i] == prior.mu0[i]);
        CHECK(none.variance()[i] == Approx(prior.tau(i, i) / (prior.alpha + 4.0)));
    }
}

TEST_CASE("map parameters maximize the map objective") {
    auto rng = make_stream(37, "bayes-test");
    for (int t = 0; t < 20; ++t) {
        const int n = 2 + t % 3;
        const auto prior = testutil::random_prior(n, rng);
        const auto stats = testutil::stats_of(testutil::random_matrix(5 + t, n, rng));
        const auto s = testutil::random_dag(n, rng, 0.6);
        const auto g = map_parameters(prior, stats, s);
        const auto post = posterior_update(prior, stats);
        const double best = map_objective(post, g);
        for (int i = 0; i < n; ++i) {
            auto nudge = [&](auto edit) {
                for (double h : {1e-4, -1e-4}) {
                    Eigen::VectorXd m = g.intercept(), v = g.variance();
                    std::vector<Eigen::VectorXd> b;
                    for (int k = 0; k < n; ++k) b.push_back(g.coefficients(k));
                    edit(m, b, v, h);
                    CHECK(map_objective(post, GaussianDag(s, m, b, v)) <= best + 1e-8);
                }
            };
            nudge([&](Eigen::VectorXd& m, auto&, Eigen::VectorXd&, double h) { m[i] += h; });
            nudge([&](Eigen::VectorXd&, auto&, Eigen::VectorXd& v, double h) { v[i] += h; });
            for (Eigen::Index a = 0; a < static_cast<Eigen::Index>(s.parents(i).size()); ++a)
                nudge([&](Eigen::VectorXd&, std::vector<Eigen::VectorXd>& b, Eigen::VectorXd&, double h) { b[i][a] += h; });
        }
    }
}

TEST_CASE("data-informed prior") {
    // Rows chosen so the sample mean is 0 and the ML covariance is I.
    Eigen::MatrixXd x(4, 2);
    x << 1, 1, -1, -1, 1, -1, -1, 1;
    const auto p = data_informed_prior(make_dataset(x), 200.0);
    CHECK(p.nu == 200.0);
    CHECK(p.mu0.isZero());
    CHECK((p.tau / mode_divisor(p) - Eigen::Matrix2d::Identity()).norm() < 1e-12);

    CHECK_THROWS_MATCHES(data_informed_prior(make_dataset(Eigen::MatrixXd::Ones(1, 2)), 200.0), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) { return e.code() == ErrorCode::InsufficientData; }));
}

TEST_CASE("prior draws concentrate as the equivalent sample size grows") {
    Eigen::MatrixXd x(4, 2);
    x << 1, 1, -1, -1, 1, -1, -1, 1;
    auto spread = [&](double ess) {
        const auto p = data_informed_prior(make_dataset(x), ess);
        auto rng = make_stream(38, "bayes-test");
        double sq = 0.0;
        const int draws = 4000;
        for (int t = 0; t < draws; ++t) sq += draw_parameters(p, rng).mean.squaredNorm();
        return std::sqrt(sq / draws);
    };
    const double low = spread(25.0), high = spread(400.0);
    // Four times the spread for sixteen times fewer cases.
    CHECK(low / high == Approx(4.0).epsilon(0.1));
}
