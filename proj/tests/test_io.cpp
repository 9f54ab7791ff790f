#include <gtest/gtest.h>

#include <sstream>

#include "eqnn/eqnn.hpp"
#include "scenarios.hpp"

using namespace eqnn;

namespace {

Config parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

std::string parse_error_where(const std::string& text) {
  try {
    parse(text);
  } catch (const ParseError& e) {
    return e.where();
  }
  return "no error";
}

const char* kDeepSets = R"(# deep sets over four points
[network]
group = symmetric(4)
activation = threshold:0.5
bias = fixed
seed = 7

[reps]
tensor(defining, 3)
tensor(defining, 3)   # hidden
trivial(3)

[check]
tol = 1e-9
trials = 4
)";

}  // namespace

TEST(Config, ParsesEveryField) {
  const Config cfg = parse(kDeepSets);
  EXPECT_EQ(cfg.group_spec, "symmetric(4)");
  EXPECT_EQ(cfg.group->order(), 24u);
  EXPECT_EQ(cfg.activation, ActivationSpec::threshold(0.5));
  EXPECT_EQ(cfg.bias_space, BiasSpace::fixed);
  EXPECT_EQ(cfg.seed, 7u);
  EXPECT_EQ(cfg.tol, 1e-9);
  EXPECT_EQ(cfg.trials, 4u);
  ASSERT_EQ(cfg.reps.size(), 3u);
  EXPECT_EQ(cfg.reps[0].degree(), 12u);
  EXPECT_EQ(cfg.reps[2].degree(), 3u);
  EXPECT_EQ(solve_basis(cfg.reps[0], cfg.reps[1]).dim(), 18u);
}

TEST(Config, RepExpressions) {
  auto g = scenario::make("p4(2)");
  EXPECT_EQ(parse_rep(g, "pixel").degree(), 4u);
  EXPECT_EQ(parse_rep(g, "regular").degree(), 16u);
  EXPECT_EQ(parse_rep(g, "defining").degree(), 6u);
  EXPECT_EQ(parse_rep(g, "sum(pixel, trivial(2), sign)").degree(), 7u);
  EXPECT_EQ(parse_rep(g, "tensor(sum(pixel, pixel), 3)").degree(), 24u);
  auto s3 = scenario::make("symmetric(3)");
  const Representation p = parse_rep(s3, "perm(1 0 2; 0 2 1)");
  for (std::size_t e = 0; e < s3->order(); ++e) EXPECT_EQ(p.image(e), s3->element(e));
  for (const char* bad : {"", "pixels", "trivial()", "trivial(0)", "tensor(pixel)", "sum(pixel", "pixel extra",
                          "perm(0 1 2)", "tensor(pixel, x)"})
    EXPECT_THROW(parse_rep(g, bad), Error) << bad;
  // spec() round-trips through the parser
  const Representation r = parse_rep(g, "tensor(sum(pixel, trivial(2)), 2)");
  EXPECT_EQ(parse_rep(g, r.spec()).images(), r.images());
}

TEST(Config, ErrorsNameLineAndField) {
  EXPECT_EQ(parse_error_where("[network]\ngroup = symmetric(3)\nactivation = sigmoid\n[reps]\ndefining\ndefining\n"),
            "line 3, field network.activation");
  EXPECT_EQ(parse_error_where("[network]\ngroup = symmetric(3)\n[reps]\ndefining\nbogus(2)\n"),
            "line 5, field reps.1");
  EXPECT_EQ(parse_error_where("[network]\ngroup = symmetric(3)\nseed = -4\n[reps]\ndefining\ndefining\n"),
            "line 3, field network.seed");
  EXPECT_EQ(parse_error_where("[network]\ngroup = symmetric(3)\n[check]\ntol = 0\n[reps]\ndefining\ndefining\n"),
            "line 4, field check.tol");
  EXPECT_EQ(parse_error_where("[network]\ngroup = sym(3)\n"), "line 2, field network.group");
  EXPECT_EQ(parse_error_where("[network]\ncolour = red\n"), "line 2, field network.colour");
  EXPECT_EQ(parse_error_where("[nets]\n"), "line 1");
  EXPECT_EQ(parse_error_where("group = symmetric(3)\n"), "line 1");
  EXPECT_EQ(parse_error_where("[reps]\ndefining\n"), "field network.group");
  EXPECT_EQ(parse_error_where("[network]\ngroup = symmetric(3)\n[reps]\ndefining\n"), "field reps");
  EXPECT_EQ(parse_error_where("[network]\ngroup = p4m(40)\n"), "line 2, field network.group");
  EXPECT_THROW(load_config("/nonexistent/eqnn.cfg"), ParseError);
}

TEST(Model, RoundTripIsExact) {
  for (const auto& c : scenario::standard_chains()) {
    const EquivariantNetwork net = scenario::randomized(c, ActivationSpec::sign_threshold(0.25), 3);
    const std::string text = model_to_string(net);
    const EquivariantNetwork back = model_from_string(text);
    EXPECT_EQ(back.parameters(), net.parameters()) << c.name;
    EXPECT_EQ(back.activation, net.activation);
    EXPECT_EQ(model_to_string(back), text);
    SplitMix64 rng(1);
    const Vector v = rng.vector(net.input_dim(), -1.0, 1.0);
    EXPECT_EQ(forward(back, v), forward(net, v));
  }
}

TEST(Model, DenseOverrideSurvivesRoundTrip) {
  const auto c = scenario::standard_chains()[1];
  EquivariantNetwork net = build(c.group, c.reps, ActivationSpec::relu(), 0, BiasSpace::fixed);
  SplitMix64 rng(5);
  net.layers[1].weight_override = Matrix(3, 12, rng.vector(36, -1.0, 1.0));
  const EquivariantNetwork back = model_from_string(model_to_string(net));
  EXPECT_EQ(back.bias_space, BiasSpace::fixed);
  ASSERT_TRUE(back.layers[1].weight_override.has_value());
  EXPECT_EQ(*back.layers[1].weight_override, *net.layers[1].weight_override);
  EXPECT_FALSE(check_equivariance(back).pass);
}

TEST(Model, ParseErrors) {
  const auto c = scenario::standard_chains()[2];  // C4 shift chain
  const std::string good = model_to_string(build(c.group, c.reps, ActivationSpec::relu(), 0));
  auto where = [](const std::string& text) -> std::string {
    try {
      model_from_string(text);
    } catch (const ParseError& e) {
      return e.where();
    }
    return "no error";
  };
  EXPECT_EQ(where(good), "no error");
  EXPECT_EQ(where("eqnn-model 2\n"), "line 1");
  EXPECT_EQ(where(good + "colour red\n"), "line 11, field colour");
  std::string truncated = good;
  truncated.replace(truncated.find("weights 2 4"), 11, "weights 2 5");
  EXPECT_EQ(where(truncated), "line 10, field weights.2");
  std::string nan = good;
  nan.replace(nan.find("biases 1 1 ") + 11, 1, "nan ");
  EXPECT_EQ(where(nan).rfind("line 9, field biases.1", 0), 0u);
  std::string no_group = good;
  no_group.replace(no_group.find("group cyclic(4)"), 15, "# no group here");
  EXPECT_EQ(where(no_group), "field group");
  EXPECT_EQ(where(good + "biases 2 1 0.5\n"), "line 11, field biases.2");
  EXPECT_EQ(where(good + "weights 3 1 0.5\n"), "line 11, field layer");
  EXPECT_EQ(where(good + "dense 1 3 3 1 0 0 0 1 0 0 0 1\n"), "line 11, field dense.1");
  EXPECT_THROW(load_model("/nonexistent/model.txt"), ParseError);
}
