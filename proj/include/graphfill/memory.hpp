#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>

namespace graphfill {

enum class RobotState : uint8_t { None, Follower, Leader, Finished };

inline std::string state_name(RobotState s) {
    switch (s) {
        case RobotState::None: return "N";
        case RobotState::Follower: return "F";
        case RobotState::Leader: return "L";
        case RobotState::Finished: return "X";
    }
    return "?";
}

enum class WaitMode : uint8_t { NotWaiting, WaitingConf, WaitingConf2 };

// Persistent per-robot state. Direction fields are indices into the
// robot's current linear frame at its vertex (cyclic order cut at the
// entry). entry is unset until the robot's first move; afterwards its
// value is the frame position of the back edge.
struct RobotMemory {
    RobotState state = RobotState::None;
    std::optional<uint8_t> target;
    std::optional<uint8_t> next_target;
    std::optional<uint8_t> entry;
    WaitMode wait_mode = WaitMode::NotWaiting;
    uint8_t door_id = 1;  // 1..k, fixed at spawn

    bool operator==(const RobotMemory& o) const {
        return state == o.state && target == o.target && next_target == o.next_target &&
               entry == o.entry && wait_mode == o.wait_mode && door_id == o.door_id;
    }
    bool operator!=(const RobotMemory& o) const { return !(*this == o); }
};

inline int ceil_log2(int v) {
    int bits = 0;
    int x = 1;
    while (x < v) {
        x <<= 1;
        ++bits;
    }
    return bits;
}

// Fixed serialized width: 2 state bits, three optional directions at
// ceil(log2(delta+1)) bits each (the +1 spends one code on "unset"),
// 2 wait-mode bits, ceil(log2 k) door bits. O(log delta) for fixed k.
inline int memory_footprint_bits(const RobotMemory&, int delta, int k) {
    return 2 + 3 * ceil_log2(delta + 1) + 2 + ceil_log2(k);
}

}  // namespace graphfill
