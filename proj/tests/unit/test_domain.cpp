#include <catch2/catch_amalgamated.hpp>

#include <optional>
#include <string>
#include <vector>

#include "robojudge/distribution.hpp"
#include "robojudge/domain.hpp"

namespace rj = robojudge;

TEST_CASE("labels round trip through strings", "[domain]") {
  CHECK(rj::to_string(rj::CorrectnessLabel::successful) == "Successful");
  CHECK(rj::correctness_from_string("Failure") == rj::CorrectnessLabel::failure);
  CHECK_THROWS_AS(rj::correctness_from_string("successful"), rj::ValidationError);
  for (auto q : {rj::QualityLevel::failure, rj::QualityLevel::low, rj::QualityLevel::medium,
                 rj::QualityLevel::high}) {
    CHECK(rj::quality_from_string(std::string(rj::to_string(q))) == q);
  }
  CHECK_THROWS_AS(rj::quality_from_string("HIGH"), rj::ValidationError);
}

TEST_CASE("quality ordinals are Failure=0 Low=1 Medium=2 High=3", "[domain]") {
  CHECK(rj::quality_to_ordinal(rj::QualityLevel::failure) == 0);
  CHECK(rj::quality_to_ordinal(rj::QualityLevel::low) == 1);
  CHECK(rj::quality_to_ordinal(rj::QualityLevel::medium) == 2);
  CHECK(rj::quality_to_ordinal(rj::QualityLevel::high) == 3);
}

TEST_CASE("ground truth construction enforces the quality gate", "[domain]") {
  rj::GroundTruth pass =
      rj::make_ground_truth(rj::CorrectnessLabel::successful, rj::QualityLevel::medium);
  CHECK(pass.quality == rj::QualityLevel::medium);
  rj::GroundTruth fail = rj::make_ground_truth(rj::CorrectnessLabel::failure, std::nullopt);
  CHECK(fail.quality == rj::QualityLevel::failure);
  // failing with explicit Failure quality is tolerated
  CHECK_NOTHROW(rj::make_ground_truth(rj::CorrectnessLabel::failure, rj::QualityLevel::failure));
  CHECK_THROWS_AS(rj::make_ground_truth(rj::CorrectnessLabel::failure, rj::QualityLevel::high),
                  rj::ValidationError);
  CHECK_THROWS_AS(rj::make_ground_truth(rj::CorrectnessLabel::successful, std::nullopt),
                  rj::ValidationError);
  CHECK_THROWS_AS(
      rj::make_ground_truth(rj::CorrectnessLabel::successful, rj::QualityLevel::failure),
      rj::ValidationError);
}

TEST_CASE("class distribution validates its construction", "[domain][distribution]") {
  std::vector<std::string> labels{"Successful", "Failure"};
  CHECK_NOTHROW(rj::ClassDistribution(labels, {0.7, 0.3}));
  CHECK_THROWS_AS(rj::ClassDistribution(labels, {0.7, 0.7}), rj::ValidationError);
  CHECK_THROWS_AS(rj::ClassDistribution(labels, {1.2, -0.2}), rj::ValidationError);
  CHECK_THROWS_AS(rj::ClassDistribution(labels, {0.7, 0.2, 0.1}), rj::ValidationError);
  CHECK_THROWS_AS(rj::ClassDistribution({"only"}, {1.0}), rj::ValidationError);
  CHECK_THROWS_AS(rj::ClassDistribution({"a", "a"}, {0.5, 0.5}), rj::ValidationError);
}

TEST_CASE("point mass and argmax", "[domain][distribution]") {
  auto dist = rj::ClassDistribution::point_mass({"High", "Medium", "Low"}, 1);
  CHECK(dist.probabilities() == std::vector<double>{0.0, 1.0, 0.0});
  CHECK(dist.argmax() == 1);
  CHECK(dist.argmax_label() == "Medium");
  // first maximum wins on ties
  rj::ClassDistribution tie({"a", "b"}, {0.5, 0.5});
  CHECK(tie.argmax() == 0);
}

TEST_CASE("prediction invariants", "[domain]") {
  auto cdist = [](double success) {
    return rj::ClassDistribution({"Successful", "Failure"}, {success, 1.0 - success});
  };
  auto qdist = rj::ClassDistribution({"High", "Medium", "Low"}, {0.1, 0.2, 0.7});

  rj::Prediction pass = rj::make_prediction(rj::CorrectnessLabel::successful,
                                            rj::QualityLevel::low, cdist(0.9), qdist);
  CHECK(pass.quality == rj::QualityLevel::low);

  // predicted failure forbids quality payloads
  CHECK_THROWS_AS(rj::make_prediction(rj::CorrectnessLabel::failure, rj::QualityLevel::low,
                                      cdist(0.2), std::nullopt),
                  rj::ValidationError);
  CHECK_THROWS_AS(rj::make_prediction(rj::CorrectnessLabel::failure, rj::QualityLevel::failure,
                                      cdist(0.2), qdist),
                  rj::ValidationError);
  // predicted success needs a real quality level
  CHECK_THROWS_AS(rj::make_prediction(rj::CorrectnessLabel::successful,
                                      rj::QualityLevel::failure, cdist(0.9), std::nullopt),
                  rj::ValidationError);
}

TEST_CASE("argmax disagreement is flagged, never resolved", "[domain]") {
  auto cdist = rj::ClassDistribution({"Successful", "Failure"}, {0.3, 0.7});
  std::vector<std::string> anomalies;
  rj::Prediction p =
      rj::make_prediction(rj::CorrectnessLabel::successful, rj::QualityLevel::high, cdist,
                          std::nullopt, &anomalies);
  // label wins; the distribution is kept as-is
  CHECK(p.correctness == rj::CorrectnessLabel::successful);
  CHECK(p.correctness_distribution.probabilities()[0] == 0.3);
  REQUIRE(anomalies.size() == 1);
  CHECK(anomalies[0] == "correctness_distribution_argmax_mismatch");

  CHECK_THROWS_AS(rj::make_prediction(rj::CorrectnessLabel::successful, rj::QualityLevel::high,
                                      cdist, std::nullopt, nullptr),
                  rj::ValidationError);

  auto qdist = rj::ClassDistribution({"High", "Medium", "Low"}, {0.2, 0.5, 0.3});
  std::vector<std::string> quality_anomalies;
  rj::make_prediction(rj::CorrectnessLabel::successful, rj::QualityLevel::high,
                      rj::ClassDistribution({"Successful", "Failure"}, {0.8, 0.2}), qdist,
                      &quality_anomalies);
  REQUIRE(quality_anomalies.size() == 1);
  CHECK(quality_anomalies[0] == "quality_distribution_argmax_mismatch");
}

TEST_CASE("task spec rejects blanks", "[domain]") {
  CHECK_NOTHROW(rj::TaskSpec("PickUp", "Pick up the Orange"));
  CHECK_THROWS_AS(rj::TaskSpec("", "Pick up the Orange"), rj::ValidationError);
  CHECK_THROWS_AS(rj::TaskSpec("PickUp", ""), rj::ValidationError);
}
