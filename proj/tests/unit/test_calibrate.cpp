#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "riskcap/calibrate.hpp"
#include "riskcap/errors.hpp"
#include "riskcap/scenarios.hpp"
#include "riskcap/simulate.hpp"

using namespace riskcap;

namespace {

ModelSpec tiny_model(std::vector<double> lambda1, std::vector<double> lambda2,
                     std::vector<double> prior) {
  ModelSpec model;
  model.environment.n_states = static_cast<int>(prior.size());
  model.environment.p = std::move(prior);
  BusinessLine a;
  a.premium_rate = 1.0;
  a.lambda = std::move(lambda1);
  a.claims.assign(model.environment.n_states, ClaimDistribution::exponential_rate(1.0));
  if (!lambda2.empty()) {
    BusinessLine b;
    b.premium_rate = 1.0;
    b.lambda = std::move(lambda2);
    b.claims.assign(model.environment.n_states, ClaimDistribution::exponential_rate(1.0));
    model.lines = {a, b};
  } else {
    model.lines = {a};
  }
  return model;
}

ObservationBatch batch1(int period, std::uint32_t y, std::vector<double> sizes) {
  ObservationBatch obs;
  obs.period = period;
  obs.counts = {y};
  obs.sizes = {std::move(sizes)};
  return obs;
}

}  // namespace

TEST_SUITE("calibrate") {

TEST_CASE("period log likelihood matches hand arithmetic") {
  const ModelSpec model = tiny_model({0.5}, {}, {1.0});
  // One claim of size 2 under Exp(1): -lambda + log(lambda) + log f(2).
  CHECK(log_likelihood_period(model, 0, batch1(1, 1, {2.0}), 1.0) ==
        doctest::Approx(-0.5 + std::log(0.5) - 2.0).epsilon(1e-15));
  // Empty period contributes only the exposure term.
  CHECK(log_likelihood_period(model, 0, batch1(1, 0, {}), 1.0) ==
        doctest::Approx(-0.5).epsilon(1e-15));

  const ModelSpec model2 = tiny_model({0.8}, {}, {1.0});
  ModelSpec model2b = model2;
  model2b.lines[0].claims = {ClaimDistribution::exponential_rate(2.0)};
  const double expect = -0.8 * 2.0 + 3.0 * std::log(0.8) +
                        (3.0 * std::log(2.0) - 2.0 * (1.0 + 0.5 + 2.0));
  CHECK(log_likelihood_period(model2b, 0, batch1(1, 3, {1.0, 0.5, 2.0}), 2.0) ==
        doctest::Approx(expect).epsilon(1e-15));
}

TEST_CASE("bayes update reproduces hand posterior") {
  // Two states that differ only in intensity; an empty period favors the
  // quieter state by a factor e^{0.5}.
  const ModelSpec model = tiny_model({0.5, 1.0}, {}, {0.5, 0.5});
  const PosteriorState post =
      bayes_update(PosteriorState::bayes(model.environment.p), model, batch1(1, 0, {}), 1.0);
  CHECK(post.p[0] == doctest::Approx(1.0 / (1.0 + std::exp(-0.5))).epsilon(1e-14));
  CHECK(post.p[0] + post.p[1] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(post.m == 1);
}

TEST_CASE("weighted update with equal likelihoods is a pure power transform") {
  // Both states identical: the data cancel and only h_w acts on the prior.
  const ModelSpec model = tiny_model({0.7, 0.7}, {}, {0.8, 0.2});
  const PosteriorState post = weighted_bayes_update(
      PosteriorState::weighted_bayes(model.environment.p, 2.0), model, batch1(1, 0, {}), 1.0, 2.0);
  CHECK(post.p[0] == doctest::Approx(0.64 / 0.68).epsilon(1e-14));
  CHECK(post.p[1] == doctest::Approx(0.04 / 0.68).epsilon(1e-14));
}

TEST_CASE("weight one reproduces the plain update bitwise") {
  const ModelSpec model = example1_model();
  const PeriodGrid grid = PeriodGrid::uniform(1.0, 30);
  const ObservationRun run = simulate_observations(model, grid, 424242);
  PosteriorState plain = PosteriorState::bayes(model.environment.p);
  PosteriorState weighted = PosteriorState::weighted_bayes(model.environment.p, 1.0);
  for (const ObservationBatch& obs : run.batches) {
    plain = bayes_update(plain, model, obs, 1.0);
    weighted = weighted_bayes_update(weighted, model, obs, 1.0, 1.0);
    for (int j = 0; j < model.n_states(); ++j) CHECK(plain.p[j] == weighted.p[j]);
  }
}

TEST_CASE("zero prior mass is absorbing") {
  const ModelSpec model = tiny_model({0.5, 1.0}, {}, {1.0, 0.0});
  PosteriorState post = PosteriorState::bayes(model.environment.p);
  for (int k = 1; k <= 5; ++k) {
    post = bayes_update(post, model, batch1(k, 1, {0.3}), 1.0);
    CHECK(post.p[0] == 1.0);
    CHECK(post.p[1] == 0.0);
  }
}

TEST_CASE("an impossible observation raises a numerical error") {
  // A negative claim size has zero density under every exponential state.
  const ModelSpec model = tiny_model({0.5, 1.0}, {}, {0.5, 0.5});
  const PosteriorState prior = PosteriorState::bayes(model.environment.p);
  CHECK_THROWS_AS(bayes_update(prior, model, batch1(1, 1, {-1.0}), 1.0), NumericalError);
}

TEST_CASE("identical states keep their prior odds") {
  const ModelSpec model = example2_model('d');  // states 1 and 2 coincide
  ModelSpec skewed = model;
  skewed.environment.p = {0.5, 0.25, 0.25};
  const PeriodGrid grid = PeriodGrid::uniform(1.0, 60);
  const ObservationRun run = simulate_observations(skewed, grid, 2718);
  PosteriorState post = PosteriorState::bayes(skewed.environment.p);
  for (const ObservationBatch& obs : run.batches) post = bayes_update(post, skewed, obs, 1.0);
  // Prior odds 2:1 between the identical states must survive every update.
  CHECK(post.p[0] / post.p[1] == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("posterior depends on sizes only through their sum statistics") {
  const ModelSpec model = tiny_model({0.5, 0.9}, {}, {0.5, 0.5});
  const PosteriorState prior = PosteriorState::bayes(model.environment.p);
  const PosteriorState a = bayes_update(prior, model, batch1(1, 3, {0.2, 1.4, 0.7}), 1.0);
  const PosteriorState b = bayes_update(prior, model, batch1(1, 3, {1.4, 0.7, 0.2}), 1.0);
  CHECK(a.p[0] == doctest::Approx(b.p[0]).epsilon(1e-14));
}

TEST_CASE("mle state picks the smallest index on ties") {
  const ModelSpec model = tiny_model({0.5, 0.5, 0.9}, {}, {1.0 / 3, 1.0 / 3, 1.0 / 3});
  // An empty period ties the two identical low-intensity states exactly.
  CHECK(mle_state(model, batch1(1, 0, {}), 1.0) == 0);
}

TEST_CASE("mle frequency estimate is the running argmax histogram") {
  const ModelSpec model = tiny_model({0.2, 2.0}, {}, {0.5, 0.5});
  PosteriorState post = PosteriorState::mle_frequency(2);
  // A busy period points to state 2, a quiet one to state 1.
  CHECK(mle_state(model, batch1(1, 4, {0.1, 0.2, 0.1, 0.3}), 1.0) == 1);
  CHECK(mle_state(model, batch1(2, 0, {}), 1.0) == 0);
  post = mle_frequency_update(post, mle_state(model, batch1(1, 4, {0.1, 0.2, 0.1, 0.3}), 1.0));
  CHECK(post.p[1] == doctest::Approx(1.0));
  post = mle_frequency_update(post, mle_state(model, batch1(2, 0, {}), 1.0));
  CHECK(post.p[0] == doctest::Approx(0.5));
  CHECK(post.p[1] == doctest::Approx(0.5));
  post = mle_frequency_update(post, mle_state(model, batch1(3, 0, {}), 1.0));
  CHECK(post.p[0] == doctest::Approx(2.0 / 3.0));
  CHECK(post.m == 3);
}

TEST_CASE("calibrate_update dispatches on the posterior mode") {
  const ModelSpec model = tiny_model({0.5, 1.0}, {}, {0.5, 0.5});
  const ObservationBatch obs = batch1(1, 0, {});
  const PosteriorState bayes =
      calibrate_update(PosteriorState::bayes(model.environment.p), model, obs, 1.0);
  CHECK(bayes.p[0] == doctest::Approx(1.0 / (1.0 + std::exp(-0.5))));
  const PosteriorState mle =
      calibrate_update(PosteriorState::mle_frequency(2), model, obs, 1.0);
  CHECK(mle.p[0] == doctest::Approx(1.0));
  CHECK_THROWS_AS(weighted_bayes_update(PosteriorState::weighted_bayes(model.environment.p, 2.0),
                                        model, obs, 1.0, 0.0),
                  std::invalid_argument);
}

TEST_CASE("calibrate_trace folds the updates with the prior in front") {
  const ModelSpec model = example1_model();
  const PeriodGrid grid = PeriodGrid::uniform(1.0, 25);
  const ObservationRun run = simulate_observations(model, grid, 1001);
  const auto trace =
      calibrate_trace(model, grid, run.batches, PosteriorState::bayes(model.environment.p));
  REQUIRE(trace.size() == 26);
  CHECK(trace[0].m == 0);
  CHECK(trace[0].p == model.environment.p);
  PosteriorState manual = PosteriorState::bayes(model.environment.p);
  for (std::size_t k = 0; k < run.batches.size(); ++k) {
    manual = bayes_update(manual, model, run.batches[k], 1.0);
    CHECK(manual.p == trace[k + 1].p);
  }
}

TEST_CASE("posterior state validation") {
  PosteriorState post = PosteriorState::bayes({0.5, 0.5});
  CHECK_NOTHROW(post.validate());
  post.p = {0.5, 0.6};
  CHECK_THROWS_AS(post.validate(), std::invalid_argument);
  post.p = {1.2, -0.2};
  CHECK_THROWS_AS(post.validate(), std::invalid_argument);
  CHECK_THROWS_AS(PosteriorState::weighted_bayes({0.5, 0.5}, -1.0), std::invalid_argument);
}

}
