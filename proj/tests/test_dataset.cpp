#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "tri/dataset.hpp"
#include "tri/errors.hpp"
#include "tri/rng.hpp"

using namespace tri;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

std::string write_file(const std::string& name, const std::string& body) {
    const std::string path = temp_path(name);
    std::ofstream(path) << body;
    return path;
}

}  // namespace

TEST_CASE("load_csv parses a small binary-flagged table") {
    const auto path = write_file("ds_small.csv", "A,Y\n1,2.5\n0,3.25\n1,-1\n");
    const Dataset d = load_csv(path, {"A"});
    CHECK(d.n() == 3);
    CHECK(d.column("A")[0] == 1.0);
    CHECK(d.column("Y")[1] == 3.25);
    CHECK(d.is_binary("A"));
    CHECK_FALSE(d.is_binary("Y"));
}

TEST_CASE("binary flag violations and degenerate tables are rejected") {
    const auto bad_binary = write_file("ds_badbin.csv", "A,Y\n0.5,1\n0,2\n");
    CHECK_THROWS_AS(load_csv(bad_binary, {"A"}), ValidationError);

    const auto header_only = write_file("ds_header.csv", "A,Y\n");
    CHECK_THROWS_AS(load_csv(header_only, {}), ValidationError);

    const auto dup = write_file("ds_dup.csv", "A,A\n1,2\n");
    CHECK_THROWS_AS(load_csv(dup, {}), ValidationError);
}

TEST_CASE("ragged rows and non-numeric cells raise ParseError") {
    const auto ragged = write_file("ds_ragged.csv", "A,Y\n1,2\n3\n");
    CHECK_THROWS_AS(load_csv(ragged, {}), ParseError);

    const auto alpha = write_file("ds_alpha.csv", "A,Y\n1,x\n");
    CHECK_THROWS_AS(load_csv(alpha, {}), ParseError);

    CHECK_THROWS_AS(load_csv(temp_path("ds_missing_file.csv"), {}), ParseError);
}

TEST_CASE("csv round-trip reproduces every value") {
    Rng rng(41);
    const Eigen::Index n = 200;
    Eigen::VectorXd a(n), x(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        a[i] = rng.bernoulli(0.5);
        x[i] = rng.normal(0.3, 2.7);
    }
    const Dataset d({"A", "X"}, {a, x}, {"A"});
    const auto path = temp_path("ds_roundtrip.csv");
    write_csv(d, path);
    const Dataset back = load_csv(path, {"A"});
    REQUIRE(back.n() == n);
    // Shortest round-tripping representations make this exact.
    CHECK((back.column("X") - x).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.column("A") - a).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("unknown column access is an error, never a default") {
    const Dataset d({"A"}, {Eigen::VectorXd::Ones(2)}, {});
    CHECK_THROWS_AS(d.column("B"), DomainError);
    CHECK_FALSE(d.has_column("B"));
}

TEST_CASE("dataset invariants are enforced at construction") {
    Eigen::VectorXd two = Eigen::VectorXd::Ones(2);
    Eigen::VectorXd three = Eigen::VectorXd::Ones(3);
    CHECK_THROWS_AS(Dataset({"A", "B"}, {two, three}, {}), ValidationError);
    CHECK_THROWS_AS(Dataset({"A"}, {Eigen::VectorXd(0)}, {}), ValidationError);
    CHECK_THROWS_AS(Dataset({"A"}, {two}, {"missing"}), ValidationError);
}

TEST_CASE("subset gathers rows with repeats and keeps flags") {
    Eigen::VectorXd a(3), x(3);
    a << 0, 1, 1;
    x << 10, 20, 30;
    const Dataset d({"A", "X"}, {a, x}, {"A"});
    const Dataset s = d.subset({2, 0, 2});
    REQUIRE(s.n() == 3);
    CHECK(s.column("X")[0] == 30);
    CHECK(s.column("X")[1] == 10);
    CHECK(s.column("X")[2] == 30);
    CHECK(s.is_binary("A"));
}
