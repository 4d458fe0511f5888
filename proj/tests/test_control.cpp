#include <catch2/catch_amalgamated.hpp>

#include <cstring>

#include "oracles.hpp"
#include "racig/control.hpp"

using namespace racig;

namespace {

Tensor random_tensor(oracle::Rng& rng, std::vector<size_t> shape) {
    Tensor t = Tensor::zeros(std::move(shape));
    for (double& v : t.data) v = rng.uniform(-3.0, 3.0);
    return t;
}

}  // namespace

TEST_CASE("control config starts with exactly zero weights", "[control]") {
    ControlConfig cfg = ControlConfig::make(1.5, 4);
    CHECK(cfg.lambda == 1.5);
    REQUIRE(cfg.channels() == 4);
    for (double v : cfg.zero_conv_weights.data) {
        REQUIRE(v == 0.0);
    }
}

TEST_CASE("lambda zero leaves the original untouched", "[control]") {
    oracle::Rng rng(71);
    ControlConfig cfg = ControlConfig::make(0.0, 3);
    cfg.zero_conv_weights.at(0, 0) = 0.7;  // even with trained weights
    Tensor f = random_tensor(rng, {2, 3});
    Tensor c = random_tensor(rng, {2, 3});
    for (ControlMode mode : {ControlMode::paper_literal, ControlMode::strict_preserve}) {
        Tensor out = control_combine(f, c, cfg, mode);
        REQUIRE(std::memcmp(out.data.data(), f.data.data(), f.size() * sizeof(double)) == 0);
    }
}

TEST_CASE("strict preserve with zero weights is the exact identity", "[control]") {
    oracle::Rng rng(73);
    for (double lambda : {0.0, 0.5, 2.5}) {
        ControlConfig cfg = ControlConfig::make(lambda, 5);
        Tensor f = random_tensor(rng, {3, 5});
        Tensor c = random_tensor(rng, {3, 5});
        Tensor out = control_combine(f, c, cfg, ControlMode::strict_preserve);
        REQUIRE(std::memcmp(out.data.data(), f.data.data(), f.size() * sizeof(double)) == 0);
    }
}

TEST_CASE("paper literal mode keeps raw conditioning in the sum", "[control]") {
    ControlConfig cfg = ControlConfig::make(0.5, 2);
    Tensor f({2}, {1.0, 1.0});
    Tensor c({2}, {2.0, 4.0});
    Tensor out = control_combine(f, c, cfg, ControlMode::paper_literal);
    // f + 0.5 * (c + ZeroConv(c)) with zero weights: [1,1] + 0.5*[2,4].
    CHECK(out.data[0] == 2.0);
    CHECK(out.data[1] == 3.0);
}

TEST_CASE("control_combine applies the linear map in both modes", "[control]") {
    ControlConfig cfg = ControlConfig::make(2.0, 2);
    cfg.zero_conv_weights = Tensor({2, 2}, {0.0, 1.0, 1.0, 0.0});  // swap channels
    Tensor f({1, 2}, {10.0, 20.0});
    Tensor c({1, 2}, {3.0, 5.0});

    Tensor strict = control_combine(f, c, cfg, ControlMode::strict_preserve);
    CHECK(strict.at(0, 0) == 10.0 + 2.0 * 5.0);
    CHECK(strict.at(0, 1) == 20.0 + 2.0 * 3.0);

    Tensor literal = control_combine(f, c, cfg, ControlMode::paper_literal);
    CHECK(literal.at(0, 0) == 10.0 + 2.0 * (3.0 + 5.0));
    CHECK(literal.at(0, 1) == 20.0 + 2.0 * (5.0 + 3.0));
}

TEST_CASE("control_combine rejects shape mismatches", "[control]") {
    ControlConfig cfg = ControlConfig::make(1.0, 3);
    CHECK_THROWS_AS(
        control_combine(Tensor::zeros({2, 3}), Tensor::zeros({2, 2}), cfg,
                        ControlMode::paper_literal),
        ShapeError);
    CHECK_THROWS_AS(
        control_combine(Tensor::zeros({2, 2}), Tensor::zeros({2, 2}), cfg,
                        ControlMode::paper_literal),
        ShapeError);
}

TEST_CASE("cfg_mix endpoints return the operands exactly", "[control]") {
    oracle::Rng rng(79);
    Tensor uncond = random_tensor(rng, {2, 3});
    Tensor cond = random_tensor(rng, {2, 3});

    Tensor at_one = cfg_mix(uncond, cond, 1.0);
    REQUIRE(std::memcmp(at_one.data.data(), cond.data.data(), cond.size() * sizeof(double)) == 0);

    Tensor at_zero = cfg_mix(uncond, cond, 0.0);
    REQUIRE(std::memcmp(at_zero.data.data(), uncond.data.data(),
                        uncond.size() * sizeof(double)) == 0);
}

TEST_CASE("cfg_mix at scale 2.5 matches the oracle combination", "[control]") {
    oracle::Rng rng(83);
    Tensor uncond = random_tensor(rng, {3, 2});
    Tensor cond = random_tensor(rng, {3, 2});
    Tensor out = cfg_mix(uncond, cond, 2.5);
    for (size_t i = 0; i < out.size(); i++) {
        long double expect = static_cast<long double>(uncond.data[i]) +
                             2.5L * (static_cast<long double>(cond.data[i]) - uncond.data[i]);
        REQUIRE_THAT(out.data[i],
                     Catch::Matchers::WithinAbs(static_cast<double>(expect), 1e-12));
    }
    CHECK_THROWS_AS(cfg_mix(uncond, Tensor::zeros({2, 2}), 1.0), ShapeError);
}
