#include <catch2/catch_amalgamated.hpp>
#include "groupot/groupot.hpp"
TEST_CASE("placeholder test_screening") { REQUIRE(true); }
