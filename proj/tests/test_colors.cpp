#include <catch2/catch_amalgamated.hpp>

#include "graphfill/colors.hpp"
#include "graphfill/memory.hpp"

using namespace graphfill;

TEST_CASE("palette sizes") {
    CHECK(palette(4, 1).size() == 8);    // delta + 4
    CHECK(palette(4, 3).size() == 11);   // delta + k + 4
    CHECK(palette(1, 1).size() == 5);
    CHECK_THROWS_AS(palette(0, 1), std::invalid_argument);
}

TEST_CASE("color codes are stable") {
    const int delta = 4;
    CHECK(color_code(Color::off(), delta) == 0);
    CHECK(color_code(Color::mov(), delta) == 1);
    CHECK(color_code(Color::conf(), delta) == 2);
    CHECK(color_code(Color::conf2(), delta) == 3);
    CHECK(color_code(Color::dir(1), delta) == 4);
    CHECK(color_code(Color::dir(4), delta) == 7);
    CHECK(color_code(Color::priority(1), delta) == 8);
    for (const Color& c : palette(4, 3))
        CHECK(color_from_code(color_code(c, delta), delta, 3) == c);
    CHECK_THROWS_AS(color_from_code(99, 4, 1), std::invalid_argument);
}

TEST_CASE("memory footprint formula") {
    RobotMemory m;
    CHECK(memory_footprint_bits(m, 4, 1) == 13);  // 2 + 3*3 + 2 + 0
    CHECK(memory_footprint_bits(m, 1, 1) == 7);   // 2 + 3*1 + 2 + 0
    RobotMemory full;
    full.target = 2;
    full.next_target = 1;
    full.entry = 0;
    full.wait_mode = WaitMode::WaitingConf2;
    CHECK(memory_footprint_bits(full, 4, 1) == memory_footprint_bits(m, 4, 1));  // fixed width
    // O(log delta) growth.
    CHECK(memory_footprint_bits(m, 2, 1) == 2 + 3 * 2 + 2);
    CHECK(memory_footprint_bits(m, 8, 1) == 2 + 3 * 4 + 2);
    CHECK(memory_footprint_bits(m, 16, 1) == 2 + 3 * 5 + 2);
    CHECK(memory_footprint_bits(m, 4, 4) == 15);  // two door bits
}
