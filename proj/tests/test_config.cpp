#include <gtest/gtest.h>

#include <cmath>

#include "shearlab/config.hpp"

using namespace shearlab;

TEST(Config, DefaultsFromEmptyDocument) {
  const RunConfig c = parse_config("{}");
  EXPECT_EQ(c, RunConfig{});
  EXPECT_EQ(c.model.p, 1.8);
  EXPECT_EQ(c.mesh.nx, 16);
  EXPECT_EQ(c.seed, 1u);
}

TEST(Config, RoundTrip) {
  RunConfig c = parse_config(R"j({
    "model": {"p": 1.5, "delta": 0.1},
    "mesh": {"nx": 8, "ny": 4},
    "data": {"g1": "0", "g2": ["sin(pi*x)", 0], "f": ["x*y", "1"]},
    "solver": {"n_schedule": [10, 100, "inf"], "override_certification": true},
    "sweep": {"lambdas": [0.5, 1, 2]},
    "counterexample": {"levels": 5, "n_values": [1, 2, 3]},
    "manufactured": {"enabled": true, "velocity": ["y", "x"], "pressure": "x-0.5", "meshes": [4, 8]},
    "seed": 42,
    "output": "somewhere"
  })j");
  EXPECT_TRUE(std::isinf(c.solver.n_schedule.back()));
  EXPECT_EQ(c.data.g2[0](0.5, 0.0), std::sin(M_PI * 0.5));
  const std::string text = serialize_config(c);
  const RunConfig back = parse_config(text);
  EXPECT_EQ(back, c);
  EXPECT_EQ(serialize_config(back), text);
}

TEST(Config, RejectsUnknownKeys) {
  EXPECT_THROW(parse_config(R"j({"modle": {}})j"), ConfigError);
  try {
    parse_config(R"j({"solver": {"tolerance": 1}})j");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("solver: unknown key 'tolerance'"), std::string::npos) << e.what();
  }
}

TEST(Config, RejectsBadValues) {
  EXPECT_THROW(parse_config(R"j({"model": {"p": 0.5}})j"), ConfigError);
  EXPECT_THROW(parse_config(R"j({"model": {"p": "x"}})j"), ConfigError);
  EXPECT_THROW(parse_config(R"j({"mesh": {"nx": 0}})j"), ConfigError);
  EXPECT_THROW(parse_config(R"j({"mesh": {"nx": 2.5}})j"), ConfigError);
  EXPECT_THROW(parse_config(R"j({"data": {"g1": "sin("}})j"), ConfigError);
  EXPECT_THROW(parse_config(R"j({"data": {"g2": ["x"]}})j"), ConfigError);
  EXPECT_THROW(parse_config(R"j({"solver": {"override_certification": 1}})j"), ConfigError);
  EXPECT_THROW(parse_config("{not json"), ConfigError);
  EXPECT_THROW(parse_config("[]"), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/config.json"), ConfigError);
}
