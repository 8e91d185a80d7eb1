#include <limits>

#include "doctest.h"
#include "trusthresh/dataset.hpp"
#include "trusthresh/errors.hpp"

using namespace trusthresh;

TEST_CASE("well-formed dataset is accepted") {
  auto ds = build_dataset({"a", "b"}, Matrix(2, 2, {0.2, 0.9, 0.7, 0.1}), {1, 0});
  CHECK(ds.n_samples() == 2);
  CHECK(ds.n_subtasks() == 2);
  CHECK(ds.score(0, 1) == 0.9);
  CHECK(ds.positive_count() == 1);
  CHECK(ds.negative_count() == 1);
  CHECK(ds.subtask_names()[1] == "b");
}

TEST_CASE("score outside [0,1] is rejected with its location") {
  try {
    build_dataset({"a", "b"}, Matrix(2, 2, {0.2, 0.9, 1.5, 0.1}), {1, 0});
    FAIL("expected ScoreOutOfRange");
  } catch (const ScoreOutOfRange& e) {
    CHECK(e.sample == 1);
    CHECK(e.subtask == 0);
    CHECK(e.value == 1.5);
  }
  CHECK_THROWS_AS(build_dataset({"a"}, Matrix(1, 1, {-0.1}), {0}), ScoreOutOfRange);
}

TEST_CASE("NaN scores are out of range") {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(build_dataset({"a"}, Matrix(1, 1, {nan}), {0}), ScoreOutOfRange);
}

TEST_CASE("duplicate subtask names are rejected") {
  CHECK_THROWS_AS(build_dataset({"a", "a"}, Matrix(1, 2, {0.1, 0.2}), {0}),
                  DuplicateSubtaskName);
}

TEST_CASE("subtask names must be identifiers") {
  CHECK_THROWS_AS(build_dataset({""}, Matrix(1, 1, {0.1}), {0}), InvalidSubtaskName);
  CHECK_THROWS_AS(build_dataset({"9x"}, Matrix(1, 1, {0.1}), {0}), InvalidSubtaskName);
  CHECK_THROWS_AS(build_dataset({"a-b"}, Matrix(1, 1, {0.1}), {0}), InvalidSubtaskName);
  CHECK_NOTHROW(build_dataset({"_x9", "A_b"}, Matrix(1, 2, {0.1, 0.2}), {0}));
}

TEST_CASE("labels must be binary") {
  CHECK_THROWS_AS(build_dataset({"a"}, Matrix(2, 1, {0.1, 0.2}), {0, 2}), InvalidLabel);
  CHECK_THROWS_AS(build_dataset({"a"}, Matrix(1, 1, {0.1}), {-1}), InvalidLabel);
}

TEST_CASE("empty datasets are rejected") {
  CHECK_THROWS_AS(build_dataset({}, Matrix(0, 0), {}), EmptyDataset);
  CHECK_THROWS_AS(build_dataset({"a"}, Matrix(0, 1), {}), EmptyDataset);
}

TEST_CASE("dimension mismatches are rejected") {
  CHECK_THROWS_AS(build_dataset({"a"}, Matrix(1, 2, {0.1, 0.2}), {0}),
                  DimensionMismatch);
  CHECK_THROWS_AS(build_dataset({"a"}, Matrix(2, 1, {0.1, 0.2}), {0}),
                  DimensionMismatch);
  CHECK_THROWS_AS(Matrix(2, 2, {0.1, 0.2, 0.3}), DimensionMismatch);
}

TEST_CASE("multi-label dataset keeps a flat row-major label grid") {
  auto ds = build_multilabel_dataset({"c0", "c1"}, Matrix(2, 2, {0.1, 0.9, 0.8, 0.2}),
                                     {1, 0, 0, 1});
  CHECK(ds.n_samples() == 2);
  CHECK(ds.n_classes() == 2);
  CHECK(ds.label(0, 0) == 1);
  CHECK(ds.label(0, 1) == 0);
  CHECK(ds.label(1, 1) == 1);
}

TEST_CASE("multi-label validation matches the single-label rules") {
  CHECK_THROWS_AS(
      build_multilabel_dataset({"c"}, Matrix(2, 1, {0.1, 0.2}), {0, 1, 1}),
      DimensionMismatch);
  CHECK_THROWS_AS(build_multilabel_dataset({"c"}, Matrix(1, 1, {2.0}), {0}),
                  ScoreOutOfRange);
  CHECK_THROWS_AS(build_multilabel_dataset({"c"}, Matrix(1, 1, {0.5}), {3}),
                  InvalidLabel);
  CHECK_THROWS_AS(build_multilabel_dataset({}, Matrix(0, 0), {}), EmptyDataset);
}
