#include "doctest.h"

#include <stdexcept>
#include <string>

#include "tans/toml.hpp"

using tans::parse_toml_text;

TEST_CASE("tables, dotted headers and bare keys") {
  const auto doc = parse_toml_text(
      "top = 1\n"
      "[signal]\n"
      "model = \"ar1\"\n"
      "alpha = 0.99\n"
      "[output.extra]\n"
      "enabled = true\n");
  CHECK(doc.at("top") == 1);
  CHECK(doc.at("signal").at("model") == "ar1");
  CHECK(doc.at("signal").at("alpha") == 0.99);
  CHECK(doc.at("output").at("extra").at("enabled") == true);
}

TEST_CASE("array-of-tables headers append in order") {
  const auto doc = parse_toml_text(
      "[[curve]]\n"
      "sampler = \"uniform\"\n"
      "[[curve]]\n"
      "sampler = \"greedy_markov\"\n"
      "recon = \"glp\"\n");
  REQUIRE(doc.at("curve").is_array());
  REQUIRE(doc.at("curve").size() == 2);
  CHECK(doc.at("curve")[0].at("sampler") == "uniform");
  CHECK(doc.at("curve")[1].at("sampler") == "greedy_markov");
  CHECK(doc.at("curve")[1].at("recon") == "glp");
}

TEST_CASE("keys may contain dashes and underscores") {
  const auto doc = parse_toml_text(
      "t_up = 50\n"
      "sigma-max-sq = 2.5\n");
  CHECK(doc.at("t_up") == 50);
  CHECK(doc.at("sigma-max-sq") == 2.5);
}

TEST_CASE("scalar types are preserved") {
  const auto doc = parse_toml_text(
      "n = 42\n"
      "neg = -7\n"
      "x = 0.5\n"
      "y = 1e-3\n"
      "z = -2.5e2\n"
      "flag = false\n"
      "name = \"hello\"\n");
  CHECK(doc.at("n").is_number_integer());
  CHECK(doc.at("n").get<std::int64_t>() == 42);
  CHECK(doc.at("neg").get<std::int64_t>() == -7);
  CHECK(doc.at("x").is_number_float());
  CHECK(doc.at("x").get<double>() == 0.5);
  CHECK(doc.at("y").get<double>() == 1e-3);
  CHECK(doc.at("z").get<double>() == -250.0);
  CHECK(doc.at("flag").is_boolean());
  CHECK(doc.at("name").get<std::string>() == "hello");
}

TEST_CASE("basic strings unescape the common sequences") {
  const auto doc = parse_toml_text(
      "path = \"out\\\\dir\"\n"
      "msg = \"a \\\"b\\\" c\"\n"
      "nl = \"x\\ny\"\n");
  CHECK(doc.at("path").get<std::string>() == "out\\dir");
  CHECK(doc.at("msg").get<std::string>() == "a \"b\" c");
  CHECK(doc.at("nl").get<std::string>() == "x\ny");
}

TEST_CASE("flat arrays keep element types") {
  const auto doc = parse_toml_text(
      "rho = [0.5, 1.0, 2.0]\n"
      "seeds = [1, 2, 3]\n"
      "names = [\"a\", \"b\"]\n"
      "empty = []\n");
  CHECK(doc.at("rho").size() == 3);
  CHECK(doc.at("rho")[1] == 1.0);
  CHECK(doc.at("seeds")[2].is_number_integer());
  CHECK(doc.at("names")[0] == "a");
  CHECK(doc.at("empty").is_array());
  CHECK(doc.at("empty").empty());
}

TEST_CASE("comments and blank lines are ignored") {
  const auto doc = parse_toml_text(
      "# leading comment\n"
      "\n"
      "a = 1  # trailing comment\n"
      "s = \"has # inside\"  # and one outside\n");
  CHECK(doc.at("a") == 1);
  CHECK(doc.at("s").get<std::string>() == "has # inside");
}

TEST_CASE("errors carry the offending line number") {
  const auto line_of = [](const std::string& text) {
    try {
      parse_toml_text(text);
      return std::string("no error");
    } catch (const std::runtime_error& e) {
      return std::string(e.what());
    }
  };
  CHECK(line_of("a = 1\na = 2\n").find("toml: line 2") == 0);
  CHECK(line_of("a = 1\nnot a key value\n").find("toml: line 2") == 0);
  CHECK(line_of("a = \"unterminated\n").find("toml: line 1") == 0);
  CHECK(line_of("[unclosed\n").find("toml: line 1") == 0);
  CHECK(line_of("x = [1, 2\n").find("toml: line 1") == 0);
}

TEST_CASE("a missing file reports its path") {
  try {
    tans::parse_toml_file("definitely_missing.toml");
    FAIL("expected an error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("definitely_missing.toml") !=
          std::string::npos);
  }
}
