#include <catch2/catch_amalgamated.hpp>

#include "ddbc/bnn.hpp"
#include "testutil.hpp"

using namespace ddbc;

TEST_CASE("step activation follows the signed threshold", "[bnn]") {
  const std::vector<int> w1{-1, -1, 1};
  const std::vector<int> in1{-1, 1, 1};
  CHECK(step_activation(w1, 0.16, in1, false) == 1);  // 1.16 >= 0

  const std::vector<int> w2{1, 1, 1};
  const std::vector<int> in2{1, 1, 1};
  CHECK(step_activation(w2, 0.0, in2, false) == 1);

  const std::vector<int> w3{1, 1, -1};
  const std::vector<int> in3{1, -1, 1};
  CHECK(step_activation(w3, -0.01, in3, true) == 0);  // -1.01

  CHECK(step_activation(w3, -0.01, in3, false) == -1);
  const std::vector<int> short_in{1, 1};
  CHECK_THROWS_AS(step_activation(w3, 0.0, short_in, false), ValidationError);
}

TEST_CASE("forward labels the worked example", "[bnn]") {
  const BnnModel model = test::example_bnn();
  CHECK(forward(model, Entity::from_mask(0b110, 3)) == 0);  // (0,1,1)
  CHECK(forward(model, Entity::from_mask(0b000, 3)) == 1);  // (0,0,0)
  CHECK_THROWS_AS(forward(model, Entity::from_mask(0, 2)), ValidationError);
}

TEST_CASE("forward is pure and binary; hidden activations stay in {-1,1}",
          "[bnn]") {
  const BnnModel model = generate_random_bnn(6, {5}, 17);
  for (u64 m = 0; m < 64; ++m) {
    const int l = forward_mask(model, m);
    CHECK((l == 0 || l == 1));
    CHECK(forward_mask(model, m) == l);
  }
}

TEST_CASE("a dominating output bias labels every entity 1", "[bnn]") {
  Layer out;
  out.weights = {{1, 1, 1}};
  out.biases = {10.0};
  const BnnModel model({out}, {"x1", "x2", "x3"});
  for (u64 m = 0; m < 8; ++m) CHECK(forward_mask(model, m) == 1);
}

TEST_CASE("neurons fire exactly when enough inputs are convenient", "[bnn]") {
  // Exhaustive against the threshold formula for a batch of random neurons.
  std::mt19937_64 rng(5);
  for (int round = 0; round < 50; ++round) {
    const int m = 1 + int(rng() % 8);
    std::vector<int> w(static_cast<size_t>(m));
    for (int& x : w) x = (rng() & 1) ? 1 : -1;
    const double b = (2.0 * canonical_unit(rng()) - 1.0) * m;
    const long d = convenient_threshold(w, b);
    for (u64 mask = 0; mask < (u64(1) << m); ++mask) {
      std::vector<int> in(static_cast<size_t>(m));
      long convenient = 0;
      for (int i = 0; i < m; ++i) {
        in[size_t(i)] = ((mask >> i) & 1) ? 1 : -1;
        if (in[size_t(i)] == w[size_t(i)]) ++convenient;
      }
      const bool fired = step_activation(w, b, in, false) == 1;
      CHECK(fired == (convenient >= d));
    }
  }
}

TEST_CASE("random model generation is deterministic", "[bnn]") {
  const BnnModel a = generate_random_bnn(3, {3}, 7);
  const BnnModel b = generate_random_bnn(3, {3}, 7);
  CHECK(serialize_bnn(a) == serialize_bnn(b));
  CHECK(a.layers().size() == 2);
  CHECK(a.layers()[0].neurons() == 3);
  CHECK(a.layers()[1].neurons() == 1);

  const BnnModel paper_shape = generate_random_bnn(13, {13}, 1);
  CHECK(paper_shape.num_inputs() == 13);
  CHECK(paper_shape.layers()[0].neurons() == 13);
}

TEST_CASE("model files round-trip", "[bnn]") {
  for (u64 seed : {0ull, 7ull, 99ull}) {
    const BnnModel m = generate_random_bnn(1 + int(seed % 5), {2}, seed);
    const BnnModel back = parse_bnn(serialize_bnn(m));
    CHECK(serialize_bnn(back) == serialize_bnn(m));
  }
  const BnnModel ex = test::example_bnn();
  const BnnModel back = parse_bnn(serialize_bnn(ex));
  for (u64 mask = 0; mask < 8; ++mask)
    CHECK(forward_mask(back, mask) == forward_mask(ex, mask));
}

TEST_CASE("model parsing rejects malformed input", "[bnn]") {
  CHECK_THROWS_AS(parse_bnn("not json"), ValidationError);
  CHECK_THROWS_AS(parse_bnn("{}"), ValidationError);
  // fractional weight
  CHECK_THROWS_AS(
      parse_bnn(R"({"feature_names":["x1"],
                    "layers":[{"weights":[[0.5]],"biases":[0]}]})"),
      ValidationError);
  // missing bias entry
  CHECK_THROWS_AS(
      parse_bnn(R"({"feature_names":["x1","x2"],
                    "layers":[{"weights":[[1,-1],[1,1]],"biases":[0.5]}]})"),
      ValidationError);
  // dangling layer width
  CHECK_THROWS_AS(
      parse_bnn(R"({"feature_names":["x1"],
                    "layers":[{"weights":[[1]],"biases":[0]},
                              {"weights":[[1,1]],"biases":[0]}]})"),
      ValidationError);
  // multi-output final layer
  CHECK_THROWS_AS(
      parse_bnn(R"({"feature_names":["x1"],
                    "layers":[{"weights":[[1],[-1]],"biases":[0,0]}]})"),
      ValidationError);
}
