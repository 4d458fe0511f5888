#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "oracles.hpp"
#include "racig/schedule.hpp"

using namespace racig;

TEST_CASE("schedule validates range and monotonicity", "[schedule]") {
    CHECK_THROWS_AS(Schedule(std::vector<double>{}), ValidationError);
    CHECK_THROWS_AS(Schedule({0.5, 0.6}), ValidationError);
    CHECK_THROWS_AS(Schedule({1.5}), ValidationError);
    CHECK_THROWS_AS(Schedule({-0.1}), ValidationError);

    Schedule ok({1.0, 0.5, 0.0});
    CHECK(ok.t_max() == 3);

    Schedule def = Schedule::make_default();
    REQUIRE(def.t_max() == 17);
    CHECK(def.alpha_bar.front() == 0.9999);
    CHECK(def.alpha_bar.back() == 0.002);
    for (size_t t = 1; t < def.t_max(); t++) {
        REQUIRE(def.alpha_bar[t] <= def.alpha_bar[t - 1]);
    }
}

TEST_CASE("forward_noise endpoints are exact", "[schedule]") {
    Tensor z0({3}, {1.5, -2.0, 0.25});
    Tensor eps({3}, {0.5, 0.5, -1.0});

    Schedule ones({1.0});
    Tensor keep = forward_noise(z0, 0, ones, eps);
    for (size_t i = 0; i < 3; i++) REQUIRE(keep.data[i] == z0.data[i]);

    Schedule zeros({0.0});
    Tensor pure = forward_noise(z0, 0, zeros, eps);
    for (size_t i = 0; i < 3; i++) REQUIRE(pure.data[i] == eps.data[i]);
}

TEST_CASE("forward_noise matches the scalar oracle at alpha_bar 0.25", "[schedule]") {
    Schedule sched({0.25});
    Tensor out = forward_noise(Tensor({1}, {2.0}), 0, sched, Tensor({1}, {1.0}));
    double expect = std::sqrt(0.25) * 2.0 + std::sqrt(0.75) * 1.0;
    CHECK(out.data[0] == expect);
    CHECK_THAT(out.data[0], Catch::Matchers::WithinAbs(1.8660254037844386, 1e-15));
}

TEST_CASE("forward_noise rejects bad timesteps and shapes", "[schedule]") {
    Schedule sched({0.9, 0.1});
    Tensor z0({2}, {1, 2});
    CHECK_THROWS_AS(forward_noise(z0, 2, sched, z0), RangeError);
    CHECK_THROWS_AS(forward_noise(z0, 0, sched, Tensor({3}, {1, 2, 3})), ShapeError);
}

TEST_CASE("forward_noise is jointly linear in z0 and eps", "[schedule]") {
    oracle::Rng rng(61);
    Schedule sched = Schedule::make_default();
    for (int rep = 0; rep < 20; rep++) {
        Tensor z0 = Tensor::zeros({4});
        Tensor eps = Tensor::zeros({4});
        for (double& v : z0.data) v = rng.uniform(-3.0, 3.0);
        for (double& v : eps.data) v = rng.uniform(-3.0, 3.0);
        double a = rng.uniform(0.1, 4.0);
        size_t t = rng.below(sched.t_max());

        Tensor scaled = forward_noise(scale(z0, a), t, sched, scale(eps, a));
        Tensor direct = scale(forward_noise(z0, t, sched, eps), a);
        for (size_t i = 0; i < 4; i++) {
            REQUIRE_THAT(scaled.data[i],
                         Catch::Matchers::WithinRel(direct.data[i], 1e-12));
        }
    }
}

TEST_CASE("noising variance tracks 1 - alpha_bar", "[schedule]") {
    Schedule sched = Schedule::make_default();
    for (size_t t : {size_t(0), size_t(8), size_t(16)}) {
        SplitMix64 rng(1000 + t);
        const int n = 10000;
        double mean = 0.0, m2 = 0.0;
        Tensor z0({1}, {0.0});
        for (int i = 0; i < n; i++) {
            Tensor eps({1}, {rng.next_gaussian()});
            double v = forward_noise(z0, t, sched, eps).data[0];
            mean += v;
            m2 += v * v;
        }
        mean /= n;
        double var = m2 / n - mean * mean;
        double expect = 1.0 - sched.alpha_bar[t];
        INFO("t=" << t << " var=" << var << " expect=" << expect);
        REQUIRE(std::abs(var - expect) <= 0.05 * std::max(expect, 1e-4));
    }
}

TEST_CASE("dm_loss of the echo denoiser is zero", "[schedule]") {
    Schedule sched({0.5});
    Tensor z0({2}, {1.0, -2.0});
    Tensor eps({2}, {0.75, 0.5});
    Tensor c_text({1}, {0.0});
    double loss = dm_loss(z0, 0, c_text, sched, echo_denoiser(eps), eps);
    CHECK(loss == 0.0);
}

TEST_CASE("dm_loss of the zero denoiser is the squared noise norm", "[schedule]") {
    Schedule sched({0.5});
    Tensor z0({2}, {0.0, 0.0});
    Tensor eps({2}, {3.0, 4.0});
    Tensor c_text({1}, {0.0});
    double loss = dm_loss(z0, 0, c_text, sched, zero_denoiser(), eps);
    CHECK(loss == 25.0);
}

TEST_CASE("dm_loss with the seeded linear denoiser matches the oracle", "[schedule]") {
    Schedule sched({0.36});
    Tensor z0({3}, {1.0, -0.5, 2.0});
    Tensor eps({3}, {0.25, 1.5, -1.0});
    Tensor c_text({1}, {0.0});
    const uint64_t seed = 77;

    double loss = dm_loss(z0, 0, c_text, sched, seeded_linear_denoiser(seed), eps);

    // Oracle: z_t elementwise, coefficients from the reference stream,
    // squared error accumulated in long double.
    oracle::Rng ref(seed);
    long double acc = 0.0L;
    for (size_t i = 0; i < 3; i++) {
        double zt = std::sqrt(0.36) * z0.data[i] + std::sqrt(1.0 - 0.36) * eps.data[i];
        double pred = ref.uniform(-1.0, 1.0) * zt;
        long double diff = static_cast<long double>(eps.data[i]) - pred;
        acc += diff * diff;
    }
    CHECK_THAT(loss, Catch::Matchers::WithinAbs(static_cast<double>(acc), 1e-12));
    CHECK(loss >= 0.0);
}

TEST_CASE("denoiser output shape is enforced", "[schedule]") {
    Schedule sched({0.5});
    Tensor z0({2}, {1.0, 2.0});
    Tensor eps({2}, {0.0, 0.0});
    Tensor c_text({1}, {0.0});
    ToyDenoiser bad = [](const Tensor&, size_t, const Tensor&) {
        return Tensor({3}, {0, 0, 0});
    };
    CHECK_THROWS_AS(dm_loss(z0, 0, c_text, sched, bad, eps), ShapeError);
}
