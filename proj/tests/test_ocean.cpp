#include "mct/ocean.hpp"

#include <doctest.h>
#include <unistd.h>

#include <cstdio>
#include <fstream>
#include <string>

using namespace mct;

namespace {

std::string temp_csv(const char* name, const std::string& body) {
  const std::string path =
      std::string("/tmp/mct_ocean_") + name + "_" + std::to_string(::getpid()) + ".csv";
  std::ofstream out(path);
  out << body;
  return path;
}

}  // namespace

TEST_CASE("load_adcp_csv complete grid") {
  const auto path = temp_csv("complete",
                             "time_s,depth_m,speed_mps\n"
                             "0,40,1.0\n0,45,1.2\n0,50,1.4\n"
                             "300,40,1.1\n300,45,1.3\n300,50,1.5\n");
  FillReport report;
  const auto field = load_adcp_csv(path, &report);
  CHECK(field.depths.size() == 3);
  CHECK(field.times.size() == 2);
  CHECK(report.filled_cells == 0);
  CHECK(report.dropped_rows == 0);
  CHECK(field.speed(2, 1) == doctest::Approx(1.5));
  std::remove(path.c_str());
}

TEST_CASE("load_adcp_csv drops bad rows and fills holes") {
  SUBCASE("NaN speed becomes a nearest-depth fill") {
    const auto path = temp_csv("nanfill",
                               "time_s,depth_m,speed_mps\n"
                               "0,40,1.0\n0,45,nan\n0,50,1.4\n"
                               "300,40,1.1\n300,45,1.3\n300,50,1.5\n");
    FillReport report;
    const auto field = load_adcp_csv(path, &report);
    CHECK(field.depths.size() == 3);
    CHECK(report.dropped_rows == 1);
    CHECK(report.filled_cells == 1);
    // nearest depth neighbour at the same time supplied the value
    const bool filled_from_neighbour =
        field.speed(1, 0) == 1.0 || field.speed(1, 0) == 1.4;
    CHECK(filled_from_neighbour);
    std::remove(path.c_str());
  }
  SUBCASE("row beyond the instrument range is dropped") {
    const auto path = temp_csv("deep",
                               "time_s,depth_m,speed_mps\n"
                               "0,40,1.0\n0,450,1.2\n300,40,1.1\n");
    FillReport report;
    const auto field = load_adcp_csv(path, &report);
    CHECK(report.dropped_rows == 1);
    CHECK(field.depths.size() == 1);
    CHECK(field.max_depth() == 40.0);
    std::remove(path.c_str());
  }
  SUBCASE("negative speed is dropped") {
    const auto path = temp_csv("neg",
                               "time_s,depth_m,speed_mps\n"
                               "0,40,1.0\n0,45,-0.2\n300,40,1.0\n300,45,1.0\n");
    FillReport report;
    load_adcp_csv(path, &report);
    CHECK(report.dropped_rows == 1);
    std::remove(path.c_str());
  }
}

TEST_CASE("load_adcp_csv error paths") {
  SUBCASE("empty file") {
    const auto path = temp_csv("empty", "");
    CHECK_THROWS_AS(load_adcp_csv(path), std::runtime_error);
    std::remove(path.c_str());
  }
  SUBCASE("header only") {
    const auto path = temp_csv("header", "time_s,depth_m,speed_mps\n");
    CHECK_THROWS_AS(load_adcp_csv(path), std::runtime_error);
    std::remove(path.c_str());
  }
  SUBCASE("time with no usable data") {
    const auto path = temp_csv("hole",
                               "time_s,depth_m,speed_mps\n"
                               "0,40,1.0\n300,40,nan\n");
    CHECK_THROWS_AS(load_adcp_csv(path), std::runtime_error);
    std::remove(path.c_str());
  }
  SUBCASE("wrong header") {
    const auto path = temp_csv("badheader", "t,z,v\n0,40,1.0\n");
    CHECK_THROWS_AS(load_adcp_csv(path), std::runtime_error);
    std::remove(path.c_str());
  }
}

TEST_CASE("synthesize_shear_profile determinism") {
  const auto a = synthesize_shear_profile(ShearKind::low, 86400.0, 7);
  const auto b = synthesize_shear_profile(ShearKind::low, 86400.0, 7);
  CHECK((a.speed - b.speed).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.depths - b.depths).cwiseAbs().maxCoeff() == 0.0);

  const auto c = synthesize_shear_profile(ShearKind::low, 86400.0, 8);
  CHECK((a.speed - c.speed).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("high shear carries at least twice the vertical gradient") {
  // finite-difference gradient oracle over several seeds
  for (unsigned seed : {1u, 7u, 19u}) {
    const auto low = synthesize_shear_profile(ShearKind::low, 43200.0, seed);
    const auto high = synthesize_shear_profile(ShearKind::high, 43200.0, seed);
    CHECK(mean_vertical_gradient(high) >= 2.0 * mean_vertical_gradient(low));
  }
}

TEST_CASE("design point near 1.6 m/s at 50 m") {
  for (unsigned seed : {1u, 2u, 3u, 11u, 99u}) {
    for (auto kind : {ShearKind::low, ShearKind::high}) {
      const auto field = synthesize_shear_profile(kind, 7200.0, seed);
      const double v = field.at(50.0, 0.0);
      CHECK(v >= 1.2);
      CHECK(v <= 2.0);
    }
  }
}

TEST_CASE("field save/load round-trip is bit-exact") {
  const auto field = synthesize_shear_profile(ShearKind::high, 7200.0, 3);
  const std::string path =
      "/tmp/mct_ocean_roundtrip_" + std::to_string(::getpid()) + ".csv";
  save_field_csv(field, path);
  const auto loaded = load_adcp_csv(path);
  REQUIRE(loaded.depths.size() == field.depths.size());
  REQUIRE(loaded.times.size() == field.times.size());
  CHECK((loaded.speed - field.speed).cwiseAbs().maxCoeff() == 0.0);
  std::remove(path.c_str());
}

TEST_CASE("bilinear interpolation and range checks") {
  CurrentField f;
  f.depths = Eigen::VectorXd::LinSpaced(3, 40.0, 50.0);
  f.times = Eigen::VectorXd::LinSpaced(2, 0.0, 300.0);
  f.speed.resize(3, 2);
  f.speed << 1.0, 2.0, 1.5, 2.5, 2.0, 3.0;
  f.validate();

  CHECK(f.at(40.0, 0.0) == doctest::Approx(1.0));
  CHECK(f.at(45.0, 300.0) == doctest::Approx(2.5));
  CHECK(f.at(42.5, 0.0) == doctest::Approx(1.25));
  CHECK(f.at(45.0, 150.0) == doctest::Approx(2.0));
  CHECK_THROWS_AS(f.at(39.0, 0.0), std::out_of_range);
  CHECK_THROWS_AS(f.at(45.0, 301.0), std::out_of_range);
}

TEST_CASE("parse_shear_kind") {
  CHECK(parse_shear_kind("low") == ShearKind::low);
  CHECK(parse_shear_kind("high") == ShearKind::high);
  CHECK_THROWS_AS(parse_shear_kind("medium"), std::invalid_argument);
}

TEST_CASE("negative duration rejected") {
  CHECK_THROWS_AS(synthesize_shear_profile(ShearKind::low, -5.0, 1), std::invalid_argument);
}
