#include <catch2/catch_amalgamated.hpp>
#include "groupot/groupot.hpp"
TEST_CASE("placeholder test_bench") { REQUIRE(true); }
