#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "hht/config.hpp"

using namespace hht;

TEST_CASE("defaults validate and round-trip", "[config]") {
  RunConfig c;
  CHECK_NOTHROW(c.validate());
  const RunConfig back = config_from_json(json::parse(to_json(c).dump()));
  CHECK(back == c);
  CHECK(config_hash(back) == config_hash(c));
}

TEST_CASE("non-default values survive a round trip", "[config]") {
  RunConfig c;
  c.alpha = 2.7;
  c.y = 1.3;
  c.N = 321;
  c.seed = 0xdeadbeefcafeull;
  c.z_grid = {cplx{0.1, 0.2}, cplx{-3.0, -1.0 / 3.0}};
  c.w_grid = {cplx{1.0, 1.0}};
  c.routes = {"B", "C"};
  c.quad_a.rel_tol = 1e-5;
  c.quad_b.max_refinements = 9;
  c.overlap = OverlapConfig{"half", {}};
  c.write_eigenvalues = true;
  c.phi_N = {10, 100};
  CHECK_NOTHROW(c.validate());
  const RunConfig back = config_from_json(json::parse(to_json(c).dump()));
  CHECK(back == c);
  CHECK(back.z_grid == c.z_grid);
  CHECK(back.quad_b.max_refinements == 9);

  // explicit index sets, contiguous and not
  c.overlap = OverlapConfig{"", {OverlapIndexSets::range(0, 100), {1, 5, 9}, OverlapIndexSets::range(0, 321),
                                 OverlapIndexSets::range(10, 200)}};
  const json j = to_json(c);
  CHECK(j["overlap"]["rows_i"] == json{{"begin", 0}, {"end", 100}});
  CHECK(j["overlap"]["rows_j"] == json{1, 5, 9});
  CHECK(config_from_json(j) == c);
}

TEST_CASE("invalid configs are rejected", "[config]") {
  auto bad = [](const char* text) { return config_from_json(json::parse(text)).validate(); };
  CHECK_THROWS_AS(bad(R"({"tol_a": -1e-3})"), ValidationError);
  CHECK_THROWS_AS(bad(R"({"tol_b": 0})"), ValidationError);
  CHECK_THROWS_AS(bad(R"({"alpha": 4.5})"), ValidationError);
  CHECK_THROWS_AS(bad(R"({"z_grid": [[1, 0]]})"), ValidationError);
  CHECK_THROWS_AS(bad(R"({"routes": ["D"]})"), ValidationError);
  CHECK_THROWS_AS(bad(R"({"M": 1})"), ValidationError);
  CHECK_THROWS_AS(bad(R"({"quadrature": {"route_a": {"rel_tol": -1}}})"), ValidationError);
  CHECK_THROWS_AS(bad(R"({"overlap": "quarter"})"), ValidationError);
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"colour": 1})")), ValidationError);
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"N": "many"})")), ValidationError);
  CHECK_THROWS_AS(config_from_json(json::parse("[1, 2]")), ValidationError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), Error);
}

TEST_CASE("hash and provenance", "[config]") {
  RunConfig a, b;
  b.seed = 2;
  CHECK(config_hash(a) != config_hash(b));
  CHECK(hash_hex(0x1234) == "0000000000001234");
  const std::string line = provenance_line(a, "mc");
  CHECK(line.rfind("# hht-rmt version=" + std::string(kVersion) + " command=mc config_hash=", 0) == 0);
  CHECK(line.find("seed=1") != std::string::npos);
  const json p = provenance_json(a, "kernel");
  CHECK(p["config"] == to_json(a));
}

TEST_CASE("load_config reads a file", "[config]") {
  const auto path = std::filesystem::temp_directory_path() / "hht_config_test.json";
  {
    std::ofstream os(path);
    os << R"({"N": 50, "y": 2.0, "overlap": "disjoint"})";
  }
  const auto c = load_config(path.string());
  CHECK(c.N == 50);
  CHECK(c.y == 2.0);
  REQUIRE(c.overlap);
  CHECK(c.overlap->preset == "disjoint");
  std::filesystem::remove(path);
}
