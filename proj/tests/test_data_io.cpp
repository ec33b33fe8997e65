#include <catch2/catch_amalgamated.hpp>
#include "groupot/groupot.hpp"
TEST_CASE("placeholder test_data_io") { REQUIRE(true); }
