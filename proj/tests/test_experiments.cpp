#include <doctest.h>

#include <cmath>

#include "helpers.hpp"

using namespace sdhawkes;

TEST_CASE("worst relative error picks the largest relative deviation with sign") {
    CHECK(worst_relative_error(std::vector<double>{1.2, 1.9}, std::vector<double>{1.0, 2.0}) ==
          doctest::Approx(0.2).epsilon(1e-12));
    CHECK(worst_relative_error(std::vector<double>{1.0, 2.0}, std::vector<double>{1.0, 2.0}) ==
          0.0);
    // exact tie in magnitude: lowest index wins
    CHECK(worst_relative_error(std::vector<double>{1.1, 0.9}, std::vector<double>{1.0, 1.0}) ==
          doctest::Approx(0.1).epsilon(1e-12));
    CHECK_THROWS_AS(
        worst_relative_error(std::vector<double>{1.0}, std::vector<double>{0.0}), DataError);
}

TEST_CASE("worst absolute error is the signed largest deviation") {
    CHECK(worst_absolute_error(std::vector<double>{0.75}, std::vector<double>{0.8}) ==
          doctest::Approx(-0.05).epsilon(1e-12));
    CHECK(worst_absolute_error(std::vector<double>{0.8}, std::vector<double>{0.8}) == 0.0);
    CHECK(worst_absolute_error(std::vector<double>{0.53, 0.13}, std::vector<double>{0.5, 0.2}) ==
          doctest::Approx(-0.07).epsilon(1e-12));
}

TEST_CASE("worst errors agree with a direct scan oracle") {
    Xoshiro256pp rng(71);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<double> truth(6), est(6);
        for (std::size_t j = 0; j < 6; ++j) {
            truth[j] = 0.1 + rng.uniform01();
            est[j] = truth[j] * (0.5 + rng.uniform01());
        }
        double best_rel = -1.0, signed_rel = 0.0, best_abs = -1.0, signed_abs = 0.0;
        for (std::size_t j = 0; j < 6; ++j) {
            const double rel = std::abs(est[j] - truth[j]) / truth[j];
            if (rel > best_rel) {
                best_rel = rel;
                signed_rel = (est[j] - truth[j]) / truth[j];
            }
            const double abs_err = std::abs(est[j] - truth[j]);
            if (abs_err > best_abs) {
                best_abs = abs_err;
                signed_abs = est[j] - truth[j];
            }
        }
        CHECK(worst_relative_error(est, truth) == signed_rel);
        CHECK(worst_absolute_error(est, truth) == signed_abs);
    }
}

TEST_CASE("zero replications produce an empty report") {
    const SdHawkesModel truth = testutil::excite_in_state2_model();
    MonteCarloConfig config;
    config.sample_sizes = {100};
    config.replications = 0;
    CHECK(monte_carlo_consistency(truth, config).empty());
}

TEST_CASE("monte carlo records are independent of the execution schedule") {
    const SdHawkesModel truth = testutil::excite_in_state2_model();
    MonteCarloConfig config;
    config.sample_sizes = {200, 400};
    config.replications = 3;
    config.seed = 12;
    config.jobs = 1;
    const auto serial = monte_carlo_consistency(truth, config);
    config.jobs = 4;
    const auto parallel = monte_carlo_consistency(truth, config);
    REQUIRE(serial.size() == parallel.size());
    for (std::size_t k = 0; k < serial.size(); ++k) {
        CHECK(serial[k].fit_ok == parallel[k].fit_ok);
        CHECK(serial[k].phi_error == parallel[k].phi_error);
        CHECK(serial[k].nu_error == parallel[k].nu_error);
        CHECK(serial[k].alpha_error == parallel[k].alpha_error);
        CHECK(serial[k].beta_error == parallel[k].beta_error);
    }
}

TEST_CASE("identical bootstrap seeds give zero-width bands") {
    const SdHawkesModel truth = testutil::excite_in_state2_model();
    BootstrapConfig config;
    config.horizon = 120.0;
    config.replications = 2;
    config.seed = 5;
    config.vary_seeds = false;  // both replications reuse the same stream
    config.fit.n_random_starts = 0;
    const BootstrapSummary summary = parametric_bootstrap(truth, config);
    CHECK(summary.n_success == 2);
    for (std::size_t j = 0; j < summary.nu.lower.size(); ++j)
        CHECK(summary.nu.lower[j] == summary.nu.upper[j]);
    for (std::size_t j = 0; j < summary.alpha.lower.size(); ++j)
        CHECK(summary.alpha.lower[j] == summary.alpha.upper[j]);
    for (const auto& band : summary.norm_curves)
        for (std::size_t g = 0; g < band.lower.size(); ++g)
            CHECK(band.lower[g] == band.upper[g]);
}

TEST_CASE("bootstrap summaries are reproducible under a fixed seed") {
    const SdHawkesModel truth = testutil::excite_in_state2_model();
    BootstrapConfig config;
    config.horizon = 100.0;
    config.replications = 5;
    config.seed = 77;
    config.fit.n_random_starts = 1;
    config.jobs = 2;
    const BootstrapSummary a = parametric_bootstrap(truth, config);
    const BootstrapSummary b = parametric_bootstrap(truth, config);
    CHECK(a.nu.lower == b.nu.lower);
    CHECK(a.alpha.upper == b.alpha.upper);
    CHECK(a.beta.lower == b.beta.lower);
    REQUIRE(a.replicates.size() == b.replicates.size());
    for (std::size_t r = 0; r < a.replicates.size(); ++r)
        CHECK(a.replicates[r].nu == b.replicates[r].nu);
}

TEST_CASE("bands are nested across quantile levels") {
    const SdHawkesModel truth = testutil::excite_in_state2_model();
    BootstrapConfig wide;
    wide.horizon = 150.0;
    wide.replications = 12;
    wide.seed = 31;
    wide.fit.n_random_starts = 0;
    BootstrapConfig narrow = wide;
    narrow.lower_quantile = 0.25;
    narrow.upper_quantile = 0.75;
    const BootstrapSummary w = parametric_bootstrap(truth, wide);
    const BootstrapSummary n = parametric_bootstrap(truth, narrow);
    for (std::size_t j = 0; j < w.nu.lower.size(); ++j) {
        CHECK(n.nu.lower[j] >= w.nu.lower[j]);
        CHECK(n.nu.upper[j] <= w.nu.upper[j]);
    }
    for (std::size_t j = 0; j < w.beta.lower.size(); ++j) {
        CHECK(n.beta.lower[j] >= w.beta.lower[j]);
        CHECK(n.beta.upper[j] <= w.beta.upper[j]);
    }
}
