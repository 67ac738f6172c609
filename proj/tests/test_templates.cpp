#include <doctest.h>

#include "generators.hpp"
#include "revgen/error.hpp"
#include "revgen/templates.hpp"
#include "test_support.hpp"

using namespace revgen;

TEST_CASE("placeholders are substituted once") {
  CHECK(render_template("a {{x}} b {{y}}{{x}}", {{"x", "1"}, {"y", "2"}}) == "a 1 b 21");
  CHECK(render_template("{{x}}", {{"x", "{{y}}"}, {"y", "no"}}) == "{{y}}");
  CHECK(render_template("", {}) == "");
  CHECK(render_template("single { brace }", {}) == "single { brace }");
}

TEST_CASE("template errors") {
  CHECK_THROWS_AS(render_template("{{missing}}", {}), TemplateError);
  CHECK_THROWS_AS(render_template("open {{x", {{"x", "1"}}), TemplateError);
  CHECK_THROWS_AS(TemplateSet::builtin().get("nope"), TemplateError);
  CHECK_THROWS_AS(TemplateSet::load("/definitely/not/here"), ConfigError);
}

TEST_CASE("text without placeholders renders unchanged") {
  gen::Source src(2);
  for (int i = 0; i < 200; ++i) {
    auto s = src.noisy(30);
    for (auto p = s.find("{{"); p != std::string::npos; p = s.find("{{")) s.erase(p, 1);
    CHECK(render_template(s, {}) == s);
  }
}

TEST_CASE("builtin templates cover every call site") {
  const auto& t = TemplateSet::builtin();
  for (const char* name : {"system", "pge_generation", "pge_generation_example", "pge_evaluation",
                           "pge_evaluation_example", "aspect_prompts", "review", "review_questions",
                           "review_zero_shot"}) {
    CHECK_FALSE(t.get(name).empty());
    CHECK(t.get(name).back() != '\n');
  }
  CHECK(t.get("pge_generation").find("{{review}}") != std::string::npos);
  CHECK(t.get("pge_evaluation").find("{{rubric}}") != std::string::npos);
  CHECK(t.render("review_questions", {{"questions", "1. Q?"}}) == "\n\nQuestions to address:\n1. Q?");
}

TEST_CASE("directory overrides replace only the files present") {
  support::TempDir dir("tmpl");
  support::spit(dir / "review.txt", "Custom {{paper}}{{questions_block}}\n");
  support::spit(dir / "ignored.md", "x");
  const auto t = TemplateSet::load(dir.path());
  CHECK(t.get("review") == "Custom {{paper}}{{questions_block}}");
  CHECK(t.get("system") == TemplateSet::builtin().get("system"));
  CHECK_THROWS_AS(t.get("ignored"), TemplateError);
  auto copy = t;
  copy.set("extra", "E {{v}}");
  CHECK(copy.render("extra", {{"v", "1"}}) == "E 1");
}
