#include "betaar/errors.hpp"
#include "betaar/posterior.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace betaar;
using betaar::testing::bar_data;
using betaar::testing::interior_point;
using betaar::testing::rel_err;
using betaar::testing::vec;

namespace {

const std::vector<Vector>& benchmark_alphas()
{
    static const std::vector<Vector> v = {vec({0.32, 0.5}), vec({0.32, 0.5, 0.1}), vec({0.32, 0.5, 0.1, 0.03}),
                                          vec({0.32, 0.4, 0.1, 0.03, 0.1})};
    return v;
}

AlphaPrior default_prior(AlphaPriorKind kind, int k)
{
    AlphaPriorFamily fam;
    fam.kind = kind;
    return fam.for_order(k);
}

// zooming grid search for the maximizer of f over the open unit square part
// of Delta_2
Vector grid_argmax_k1(const std::function<double(const Vector&)>& f)
{
    Vector c = vec({1.0 / 3, 1.0 / 3});
    double width = 0.5;
    for (int level = 0; level < 40; ++level) {
        Vector best = c;
        double best_v = f(c);
        const int g = 10;
        for (int i = -g; i <= g; ++i)
            for (int j = -g; j <= g; ++j) {
                const Vector a = c + vec({width * i / g, width * j / g});
                const double v = f(a);
                if (v > best_v) {
                    best_v = v;
                    best = a;
                }
            }
        c = best;
        width *= 0.4;
    }
    return c;
}

} // namespace

TEST_CASE("log posterior decomposes into likelihood plus prior")
{
    const SeriesData data = bar_data(vec({0.3, 0.4, 0.1}), 60.0, 150, 3, 4);
    const AlphaPrior prior = default_prior(AlphaPriorKind::ModTruncGauss, 2);
    Rng rng(1);
    for (int i = 0; i < 20; ++i) {
        const Vector a = interior_point(2, rng), b = interior_point(2, rng);
        const double phi = 20 + 80 * rng.uniform();
        const double lhs = log_posterior_alpha(a, phi, data, prior) - log_posterior_alpha(b, phi, data, prior);
        const double rhs = log_likelihood(a, phi, data) + log_prior_alpha(prior, a, phi) - log_likelihood(b, phi, data)
                           - log_prior_alpha(prior, b, phi);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
    }
    CHECK(std::isinf(log_posterior_alpha(vec({0.0, 0.5, 0.2}), 50.0, data, prior)));
    CHECK(std::isinf(log_posterior_alpha(vec({0.3, 0.5, 0.2}), 50.0, data, prior)));
}

TEST_CASE("flat-prior posterior mode equals the likelihood maximizer")
{
    const SeriesData data = bar_data(vec({0.32, 0.5}), 30.0, 120, 1, 8);
    const AlphaPrior flat(TruncGauss{vec({0.3, 0.3}), 1e8 * Matrix::Identity(2, 2)});
    const double phi = 30.0;
    const Vector post = grid_argmax_k1([&](const Vector& a) { return log_posterior_alpha(a, phi, data, flat); });
    const Vector lik = grid_argmax_k1([&](const Vector& a) {
        return in_simplex(a) ? log_likelihood(a, phi, data) : -std::numeric_limits<double>::infinity();
    });
    CHECK((post - lik).cwiseAbs().maxCoeff() < 1e-6);
    // gradient at the grid-located mode
    CHECK(grad_alpha(post, phi, data, flat).norm() < 1e-4);
}

TEST_CASE("analytic posterior gradient and Hessian match finite differences")
{
    Rng rng(10);
    for (auto kind : {AlphaPriorKind::TruncGauss, AlphaPriorKind::ModTruncGauss, AlphaPriorKind::BetaType}) {
        for (int k = 1; k <= 4; ++k) {
            const SeriesData data = bar_data(benchmark_alphas()[k - 1], 100.0, 100, 4, 20 + k);
            const AlphaTarget target(data, k, default_prior(kind, k));
            for (int i = 0; i < 100; ++i) {
                const Vector a = interior_point(k, rng, 0.05);
                const double phi = 10.0 + 90.0 * rng.uniform();
                auto f = [&](const Vector& x) { return target.log_density(x, phi); };
                auto g = [&](const Vector& x) { return target.gradient(x, phi); };
                const Vector grad = target.gradient(a, phi);
                const Matrix hess = target.hessian(a, phi);
                const double gscale = std::max(1.0, grad.cwiseAbs().maxCoeff());
                const double hscale = std::max(1.0, hess.cwiseAbs().maxCoeff());
                CHECK((grad - betaar::testing::fd_gradient(f, a, 1e-6)).cwiseAbs().maxCoeff() / gscale < 1e-6);
                CHECK((hess - betaar::testing::fd_jacobian(g, a, 1e-6)).cwiseAbs().maxCoeff() / hscale < 1e-6);
                const auto d = target.derivatives(a, phi);
                CHECK(rel_err(d.gradient, grad) < 1e-12);
                CHECK(rel_err(d.hessian, hess) < 1e-12);
            }
        }
    }
}

TEST_CASE("likelihood Hessian is negative semidefinite")
{
    Rng rng(2);
    const SeriesData data = bar_data(vec({0.32, 0.5, 0.1}), 100.0, 300, 2, 3);
    const AlphaTarget target(data, 2, default_prior(AlphaPriorKind::TruncGauss, 2));
    for (int i = 0; i < 50; ++i) {
        const Matrix H = target.likelihood_hessian(interior_point(2, rng), 5 + 100 * rng.uniform());
        Eigen::SelfAdjointEigenSolver<Matrix> eig(H);
        CHECK(eig.eigenvalues().maxCoeff() <= 1e-10);
    }
}

TEST_CASE("Newton step on a quadratic log density lands on its maximizer")
{
    const AlphaPrior p(TruncGauss{vec({0.2, 0.3, 0.1}), Matrix::Identity(3, 3) * 0.5});
    Rng rng(5);
    for (int i = 0; i < 20; ++i) {
        const Vector start = interior_point(2, rng);
        const NegInverse inv = regularized_neg_inverse(hess_log_prior_alpha(p, start, 1.0));
        const Vector next = start + inv.covariance * grad_log_prior_alpha(p, start, 1.0);
        CHECK((next - vec({0.2, 0.3, 0.1})).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("Newton recursion converges to the mode")
{
    const SeriesData data = bar_data(vec({0.32, 0.5}), 100.0, 300, 1, 6);
    const AlphaTarget target(data, 1, default_prior(AlphaPriorKind::ModTruncGauss, 1));
    const double phi = 100.0;
    ModeCache cache;
    ModeEntry& entry = cache.initialize(target, phi);
    std::vector<double> norms{target.gradient(entry.mode, phi).norm()};
    for (int i = 0; i < 15; ++i) {
        newton_mode_step(cache, target, phi);
        norms.push_back(target.gradient(cache.at(1).mode, phi).norm());
        CHECK(in_simplex(cache.at(1).mode));
    }
    // monotone decrease until the floating-point floor is reached
    for (std::size_t i = 1; i < norms.size(); ++i) {
        if (norms[i - 1] > 1e-6) CHECK(norms[i] < norms[i - 1]);
    }
    CHECK(norms.back() < 1e-6);
    CHECK(cache.newton_steps() == 15);

    // fixed point
    const Vector mode = cache.at(1).mode;
    newton_mode_step(cache, target, phi);
    CHECK((cache.at(1).mode - mode).cwiseAbs().maxCoeff() < 1e-6);

    // the flat-grid mode check
    const Vector grid = grid_argmax_k1([&](const Vector& a) { return target.log_density(a, phi); });
    CHECK((grid - mode).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("warm-up reaches the mode on the benchmark configurations")
{
    for (auto kind : {AlphaPriorKind::TruncGauss, AlphaPriorKind::ModTruncGauss, AlphaPriorKind::BetaType}) {
        for (int k = 1; k <= 4; ++k) {
            const SeriesData data = bar_data(benchmark_alphas()[k - 1], 100.0, 300, k, 40 + k);
            const AlphaTarget target(data, k, default_prior(kind, k));
            ModeCache cache;
            const ModeEntry& e = ensure_mode(cache, target, 100.0);
            CHECK(cache.newton_steps() == kWarmupSteps);
            CHECK(target.gradient(e.mode, 100.0).cwiseAbs().maxCoeff() < 1e-3);
            Eigen::SelfAdjointEigenSolver<Matrix> eig(e.sigma);
            CHECK(eig.eigenvalues().minCoeff() > 0.0);
            CHECK((e.sigma - e.sigma.transpose()).cwiseAbs().maxCoeff() == 0.0);
        }
    }
}

TEST_CASE("regularized negative inverse")
{
    Matrix H(2, 2);
    H << 1.0, 0.0, 0.0, -2.0; // indefinite
    const NegInverse inv = regularized_neg_inverse(H);
    CHECK(inv.regularized);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(inv.precision);
    CHECK(eig.eigenvalues().minCoeff() >= 1e-6 * 2.0 * (1 - 1e-12));
    Matrix G(2, 2);
    G << -3.0, 0.5, 0.5, -1.0;
    const NegInverse ok = regularized_neg_inverse(G);
    CHECK_FALSE(ok.regularized);
    CHECK(rel_err(ok.covariance, (-G).inverse()) < 1e-12);
}
