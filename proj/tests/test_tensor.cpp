#include <doctest.h>

#include <cmath>
#include <limits>

#include "seqmark/error.hpp"
#include "seqmark/tensor.hpp"

using namespace seqmark;

TEST_CASE("construction and accessors") {
  const Tensor t = Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6});
  CHECK(t.rank() == 2);
  CHECK(t.size() == 6);
  CHECK(t.extent(1) == 3);
  CHECK(t.at(1, 2) == 6.0);
  CHECK(t.row(1)[0] == 4.0);
  CHECK(Tensor().rank() == 0);
  CHECK(Tensor().item() == 0.0);
  CHECK(Tensor::scalar(2.5).item() == 2.5);
  CHECK(to_string(t.shape()) == "[2, 3]");
}

TEST_CASE("invalid shapes are rejected") {
  CHECK_THROWS_AS(Tensor({2, 0}), Error);
  CHECK_THROWS_AS(Tensor({1, 1, 1, 1}), Error);
  CHECK_THROWS_AS(Tensor({2, 2}, std::vector<double>{1, 2, 3}), Error);
  CHECK_THROWS_AS(Tensor::matrix(2, 3, {1}).extent(2), Error);
  CHECK_THROWS_AS(Tensor::vector({1, 2}).item(), Error);
}

TEST_CASE("error codes carry through") {
  try {
    Tensor({2, 2}).extent(5);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::axis_out_of_range);
    CHECK(to_string(e.code()) == "axis out of range");
  }
}

TEST_CASE("finiteness and equality") {
  Tensor t = Tensor::vector({1.0, 2.0});
  CHECK(t.all_finite());
  t[1] = std::numeric_limits<double>::quiet_NaN();
  CHECK_FALSE(t.all_finite());
  CHECK(Tensor::vector({1, 2}) == Tensor::vector({1, 2}));
  CHECK_FALSE(Tensor::vector({1, 2}) == Tensor::matrix(1, 2, {1, 2}));
}
