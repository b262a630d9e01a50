#include <doctest.h>

#include <sstream>

#include "gvf/errors.hpp"
#include "gvf/io.hpp"
#include "gvf/synth.hpp"

using namespace gvf;
using io::json;

TEST_CASE("stream round-trip") {
  CohortConfig cc;
  cc.seed = 2;
  const auto c = generate(cc);
  std::stringstream buf;
  io::write_stream(buf, c.stream);
  const auto back = io::read_stream(buf);
  REQUIRE(back.records.size() == c.stream.records.size());
  std::stringstream again;
  io::write_stream(again, back);
  CHECK(again.str() == buf.str());
  CHECK(build_complex(back, 0, {}) == c.truth.complex);
}

TEST_CASE("malformed lines carry their record index") {
  std::stringstream in;
  in << R"({"type": "node", "id": "a", "kind": "agent"})" << "\n";
  in << "\n";
  in << R"({"type": "prox", "t": 1, "agent_i": "a"})" << "\n";
  try {
    io::read_stream(in);
    FAIL("expected RecordError");
  } catch (const RecordError& e) {
    CHECK(e.index() == 1);
  }
  std::stringstream garbage("not json\n");
  CHECK_THROWS_AS(io::read_stream(garbage), RecordError);
  std::stringstream unknown(R"({"type": "gps", "t": 0})");
  CHECK_THROWS_AS(io::read_stream(unknown), RecordError);
}

TEST_CASE("complex and cochain round-trip") {
  const auto c = generate(CohortConfig{});
  const auto k = io::complex_from_json(io::complex_to_json(c.truth.complex));
  CHECK(k == c.truth.complex);
  const auto f = io::cochain_from_json(io::cochain_to_json(c.truth.flow));
  CHECK(f.degree == 1);
  CHECK((f.values - c.truth.flow.values).norm() == 0.0);
  const auto empty = io::cochain_from_json(io::cochain_to_json(Cochain(2, 0, 3)));
  CHECK(empty.rows() == 0);
  CHECK(empty.channels() == 3);
}

TEST_CASE("doubles survive a text round-trip exactly") {
  Eigen::MatrixXd m(2, 2);
  m << 0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23;
  const std::string text = io::dump(io::matrix_to_json(m));
  CHECK((io::matrix_from_json(json::parse(text)) - m).norm() == 0.0);
  CHECK(text.back() == '\n');
}

TEST_CASE("configs fill defaults and reject bad types") {
  const auto th = io::thresholds_from_json(json{{"tau_prox", 12.5}});
  CHECK(th.tau_prox == 12.5);
  CHECK(th.tau_sync == ThresholdConfig{}.tau_sync);
  CHECK_THROWS_AS(io::thresholds_from_json(json{{"tau_prox", "loud"}}), ValidationError);
  const auto cc = io::cohort_config_from_json(json{{"scenario", "curl_dominant"}, {"seed", 5}});
  CHECK(cc.scenario == Scenario::CurlDominant);
  CHECK(cc.seed == 5);
  CHECK(io::cohort_config_from_json(io::cohort_config_to_json(cc)).n_agents == cc.n_agents);
  const auto tc = io::train_config_from_json(json{{"epochs", 7}, {"lambda1", 0.5}});
  CHECK(tc.epochs == 7);
  CHECK(tc.loss.lambda1 == 0.5);
  CHECK(io::train_config_from_json(io::train_config_to_json(tc)).loss.lambda1 == 0.5);
}

TEST_CASE("checkpoint round-trip preserves predictions") {
  auto model = init_model(BundleConfig::standard(2, 2), {}, 4);
  CohortConfig cc;
  cc.seed = 4;
  const auto sample = make_sample(generate(cc));
  model.whitening = whiten_fit(sample.features, model.bundle);
  const auto back = io::checkpoint_from_json(json::parse(io::dump(io::checkpoint_to_json(model))));
  const auto b1 = prepare_batch(model, sample);
  const auto b2 = prepare_batch(back, sample);
  CHECK((b1.x - b2.x).norm() == 0.0);
  CHECK(model_flow(model, b1).second.values == model_flow(back, b2).second.values);
  json bad = io::checkpoint_to_json(model);
  bad["format_version"] = 99;
  CHECK_THROWS_AS(io::checkpoint_from_json(bad), ValidationError);
}

TEST_CASE("truth round-trip") {
  CohortConfig cc;
  cc.scenario = Scenario::HarmonicDominant;
  const auto t = generate(cc).truth;
  const auto back = io::truth_from_json(io::truth_to_json(t));
  CHECK(back.complex == t.complex);
  CHECK(back.beta1 == t.beta1);
  CHECK(back.labels == t.labels);
  CHECK(back.cycles == t.cycles);
  CHECK((back.features - t.features).norm() == 0.0);
}

TEST_CASE("history csv") {
  std::stringstream s;
  io::write_history_csv(s, {{1, 0.5, 0.25, -0.125, 0, 0.75, 1.5, 0.9}, {2, 0.1, 0, 0, 0, 0, 0, 1}});
  CHECK(s.str() == "epoch,loss,cls,geo,orth,rho,gate_entropy\n1,0.5,0.25,-0.125,0,0.75,1.5\n"
                   "2,0.10000000000000001,0,0,0,0,0\n");
}
