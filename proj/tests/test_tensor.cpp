#include <catch2/catch_amalgamated.hpp>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "oracles.hpp"
#include "racig/tensor.hpp"

using namespace racig;

TEST_CASE("tensor construction enforces the shape contract", "[tensor]") {
    Tensor t({2, 3}, {1, 2, 3, 4, 5, 6});
    REQUIRE(t.rank() == 2);
    REQUIRE(t.rows() == 2);
    REQUIRE(t.cols() == 3);
    REQUIRE(t.at(1, 2) == 6.0);

    CHECK_THROWS_AS(Tensor({2, 3}, {1, 2, 3}), ShapeError);
    CHECK_THROWS_AS(Tensor({0, 3}, {}), ShapeError);
    CHECK_THROWS_AS(Tensor({2}, {1.0, std::nan("")}), ValidationError);
    CHECK_THROWS_AS(Tensor({1}, {std::numeric_limits<double>::infinity()}), ValidationError);

    Tensor z = Tensor::zeros({3, 4});
    REQUIRE(z.size() == 12);
    for (double v : z.data) REQUIRE(v == 0.0);
}

TEST_CASE("elementwise ops require matching shapes", "[tensor]") {
    Tensor a({2, 2}, {1, 2, 3, 4});
    Tensor b({2, 2}, {10, 20, 30, 40});
    Tensor s = add(a, b);
    CHECK(s.at(1, 1) == 44.0);
    Tensor d = sub(b, a);
    CHECK(d.at(0, 0) == 9.0);
    Tensor sc = scale(a, 2.5);
    CHECK(sc.at(0, 1) == 5.0);
    CHECK_THROWS_AS(add(a, Tensor::zeros({2, 3})), ShapeError);
}

TEST_CASE("matmul matches a scalar oracle and names the inner axes", "[tensor]") {
    oracle::Rng rng(101);
    for (int rep = 0; rep < 50; rep++) {
        size_t n = 1 + rng.below(5), k = 1 + rng.below(5), m = 1 + rng.below(5);
        Tensor a = Tensor::zeros({n, k});
        Tensor b = Tensor::zeros({k, m});
        oracle::Mat oa(n, std::vector<double>(k)), ob(k, std::vector<double>(m));
        for (size_t i = 0; i < n; i++) {
            for (size_t j = 0; j < k; j++) oa[i][j] = a.at(i, j) = rng.uniform(-2.0, 2.0);
        }
        for (size_t i = 0; i < k; i++) {
            for (size_t j = 0; j < m; j++) ob[i][j] = b.at(i, j) = rng.uniform(-2.0, 2.0);
        }
        Tensor c = matmul(a, b);
        oracle::Mat oc = oracle::matmul(oa, ob);
        for (size_t i = 0; i < n; i++) {
            for (size_t j = 0; j < m; j++) {
                REQUIRE_THAT(c.at(i, j), Catch::Matchers::WithinAbs(oc[i][j], 1e-12));
            }
        }
    }
    CHECK_THROWS_WITH(matmul(Tensor::zeros({2, 3}), Tensor::zeros({4, 2})),
                      Catch::Matchers::ContainsSubstring("3") &&
                          Catch::Matchers::ContainsSubstring("4"));
}

TEST_CASE("transpose round-trips", "[tensor]") {
    Tensor a({2, 3}, {1, 2, 3, 4, 5, 6});
    Tensor t = transpose(a);
    REQUIRE(t.rows() == 3);
    REQUIRE(t.cols() == 2);
    CHECK(t.at(2, 0) == 3.0);
    Tensor back = transpose(t);
    CHECK(back.data == a.data);
}

TEST_CASE("serialization round-trips bitwise", "[tensor]") {
    Tensor t({2, 3}, {0.1, -2.5, 3e100, -0.0, 1e-308, 7.0});
    std::ostringstream os(std::ios::binary);
    write_tensor(os, t);
    std::string bytes = os.str();
    REQUIRE(std::memcmp(bytes.data(), kTensorMagic, 8) == 0);

    std::istringstream is(bytes, std::ios::binary);
    Tensor back = read_tensor(is);
    REQUIRE(back.shape == t.shape);
    REQUIRE(std::memcmp(back.data.data(), t.data.data(), t.size() * sizeof(double)) == 0);
}

TEST_CASE("deserialization rejects bad magic and truncation", "[tensor]") {
    Tensor t({2, 2}, {1, 2, 3, 4});
    std::ostringstream os(std::ios::binary);
    write_tensor(os, t);
    std::string bytes = os.str();

    std::string bad = bytes;
    bad[0] = 'X';
    std::istringstream bad_is(bad, std::ios::binary);
    CHECK_THROWS_AS(read_tensor(bad_is), FormatError);

    std::string cut = bytes.substr(0, bytes.size() - 5);
    std::istringstream cut_is(cut, std::ios::binary);
    CHECK_THROWS_AS(read_tensor(cut_is), FormatError);
}

TEST_CASE("file save and load round-trip", "[tensor]") {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "racig_tensor_test";
    fs::create_directories(dir);
    fs::path file = dir / "t.rct";

    Tensor t({3}, {1.5, -2.25, 1e-9});
    save_tensor(file.string(), t);
    Tensor back = load_tensor(file.string());
    REQUIRE(back.shape == t.shape);
    REQUIRE(back.data == t.data);

    CHECK_THROWS_AS(load_tensor((dir / "missing.rct").string()), IoError);
}
