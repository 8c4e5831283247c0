#pragma once

#include <cstdint>
#include <vector>

#include "graphfill/colors.hpp"

namespace graphfill {

// What a robot sees in one Look, expressed in its own linear frame.
// slots[i] is the i-th candidate direction (the entry direction, when
// set, is reported separately and never appears as a slot). At radius 2
// each slot carries the occupancy and lights around that vertex, with
// the edge back to the observer marked. Pure value; no world references.
struct Snapshot {
    struct Around {
        bool occupied = false;
        Color color = Color::off();
        bool is_back = false;
    };
    struct Slot {
        bool occupied = false;
        Color color = Color::off();
        bool is_door = false;
        std::vector<Around> around;  // radius 2 only
    };

    int radius = 1;
    Color own_color = Color::off();
    bool has_entry = false;
    bool entry_occupied = false;
    Color entry_color = Color::off();
    std::vector<Slot> slots;
};

}  // namespace graphfill
