#include <doctest.h>

#include "gvf/errors.hpp"
#include "gvf/hhd.hpp"
#include "gvf/synth.hpp"
#include "oracle.hpp"

using namespace gvf;

namespace {

CohortConfig config(Scenario s, std::uint64_t seed) {
  CohortConfig c;
  c.scenario = s;
  c.seed = seed;
  return c;
}

const Scenario kAll[] = {Scenario::GradientDominant, Scenario::CurlDominant, Scenario::HarmonicDominant,
                         Scenario::Mixed};

}  // namespace

TEST_CASE("scenario names round-trip") {
  for (auto s : kAll) CHECK(scenario_from_string(to_string(s)) == s);
  CHECK_THROWS_AS(scenario_from_string("spiral"), ValidationError);
}

TEST_CASE("the stream rebuilds the planted complex") {
  for (auto s : kAll) {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      const auto c = generate(config(s, seed));
      CHECK_NOTHROW(c.stream.validate());
      const auto k = build_complex(c.stream, kSynthStart, {});
      CHECK(k == c.truth.complex);
      CHECK(betti_numbers(k).beta1 == c.truth.beta1);
      CHECK(oracle::components(k) == 1);
    }
  }
}

TEST_CASE("harmonic cohorts plant one cycle per ring") {
  for (int rings = 1; rings <= 3; ++rings) {
    auto cfg = config(Scenario::HarmonicDominant, 4);
    cfg.rings = rings;
    const auto c = generate(cfg);
    CHECK(c.truth.beta1 == static_cast<std::size_t>(rings));
    CHECK(c.truth.cycles.size() == static_cast<std::size_t>(rings));
  }
  CHECK(generate(config(Scenario::GradientDominant, 2)).truth.beta1 == 0);
}

TEST_CASE("gradient cohorts have the hub as their source") {
  const auto c = generate(config(Scenario::GradientDominant, 5));
  REQUIRE_FALSE(c.truth.sources.empty());
  CHECK(c.truth.sources[0] == 0);
  CHECK_FALSE(c.truth.sinks.empty());
  const auto d = decompose(c.truth.complex, c.truth.flow);
  CHECK(energy_fractions(d).gradient > 0.99);
}

TEST_CASE("planted labels are separable from the features") {
  const auto c = generate(config(Scenario::Mixed, 7));
  Eigen::MatrixXd x(0, c.truth.features.cols());
  std::vector<int> y;
  int positives = 0;
  for (std::size_t v = 0; v < c.truth.labels.size(); ++v) {
    if (c.truth.labels[v] < 0) continue;
    x.conservativeResize(x.rows() + 1, Eigen::NoChange);
    x.row(x.rows() - 1) = c.truth.features.row(static_cast<Eigen::Index>(v));
    y.push_back(c.truth.labels[v]);
    positives += c.truth.labels[v];
  }
  CHECK(y.size() == 24);
  CHECK(positives > 0);
  CHECK(positives < 24);
  CHECK(oracle::logistic_accuracy(x, y) >= 0.95);
  for (std::size_t v = 0; v < c.truth.labels.size(); ++v) {
    const bool agent = c.truth.complex.vertices()[v].kind == NodeKind::Agent;
    CHECK((c.truth.labels[v] >= 0) == agent);
  }
}

TEST_CASE("generation is seeded") {
  const auto a = generate(config(Scenario::Mixed, 11));
  const auto b = generate(config(Scenario::Mixed, 11));
  const auto c = generate(config(Scenario::Mixed, 12));
  CHECK(a.truth.complex == b.truth.complex);
  CHECK((a.truth.flow.values - b.truth.flow.values).norm() == 0.0);
  CHECK((a.truth.features - b.truth.features).norm() == 0.0);
  CHECK_FALSE(a.truth.complex == c.truth.complex);
}

TEST_CASE("infeasible configurations are rejected") {
  auto cfg = config(Scenario::HarmonicDominant, 1);
  cfg.n_agents = 6;
  cfg.rings = 2;
  CHECK_THROWS_AS(generate(cfg), ValidationError);
  cfg = config(Scenario::GradientDominant, 1);
  cfg.n_sensors = cfg.n_agents;
  CHECK_THROWS_AS(generate(cfg), ValidationError);
  cfg = config(Scenario::Mixed, 1);
  cfg.noise = -1;
  CHECK_THROWS_AS(generate(cfg), ValidationError);
}

TEST_CASE("edge features and samples") {
  const auto c = generate(config(Scenario::Mixed, 3));
  const auto& k = c.truth.complex;
  const auto e = edge_features(c.stream, k, kSynthStart, {});
  CHECK(e.rows() == static_cast<Eigen::Index>(k.num_edges()));
  CHECK(e.cols() == 3);
  CHECK(e.minCoeff() >= 0.0);
  // only synchrony edges carry no RSSI, dwell or link signal
  for (Eigen::Index r = 0; r < e.rows(); ++r) {
    const auto& edge = k.edges()[static_cast<std::size_t>(r)];
    const bool agents = k.vertices()[static_cast<std::size_t>(edge[0])].kind == NodeKind::Agent &&
                        k.vertices()[static_cast<std::size_t>(edge[1])].kind == NodeKind::Agent;
    if (!agents) CHECK(e.row(r).norm() > 0);
  }
  const auto s = make_sample(c);
  CHECK(*s.complex == k);
  CHECK(s.features.rows() == static_cast<Eigen::Index>(k.num_vertices()));
  CHECK(s.labels == c.truth.labels);
}

TEST_CASE("two-cluster and clique streams") {
  const auto two = build_complex(two_cluster_stream(6, 1), 0, {});
  CHECK(oracle::components(two) == 2);
  CHECK(two.num_vertices() == 12);
  const auto clique = build_complex(clique_stream(5, 1), 0, {});
  CHECK(clique.num_edges() == 10);
  CHECK(clique.num_triangles() == 0);
}
