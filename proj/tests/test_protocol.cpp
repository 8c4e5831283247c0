#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "graphfill/protocol.hpp"

using namespace graphfill;

namespace {

Snapshot door_snapshot(bool neighbor_occupied, Color neighbor_color = Color::off()) {
    Snapshot s;
    s.radius = 1;
    s.slots.resize(1);
    s.slots[0].occupied = neighbor_occupied;
    s.slots[0].color = neighbor_color;
    return s;
}

Snapshot snap_with_slots(int radius, std::vector<std::pair<bool, Color>> slots) {
    Snapshot s;
    s.radius = radius;
    for (auto& [occ, col] : slots) {
        Snapshot::Slot slot;
        slot.occupied = occ;
        slot.color = col;
        s.slots.push_back(slot);
    }
    return s;
}

// Deterministic snapshot/memory generator for the property checks.
struct CaseGen {
    std::mt19937_64 rng;
    int delta;
    int k;

    Color random_color() {
        auto pal = palette(delta, k);
        return pal[rng() % pal.size()];
    }

    std::pair<Snapshot, RobotMemory> make(int radius) {
        Snapshot s;
        s.radius = radius;
        int nslots = 1 + static_cast<int>(rng() % 3);
        for (int i = 0; i < nslots; ++i) {
            Snapshot::Slot slot;
            slot.occupied = rng() & 1;
            slot.color = slot.occupied ? random_color() : Color::off();
            if (radius == 2) {
                int sub = 1 + static_cast<int>(rng() % 3);
                for (int j = 0; j < sub; ++j) {
                    Snapshot::Around a;
                    a.is_back = (j == 0);
                    a.occupied = rng() & 1;
                    a.color = a.occupied ? random_color() : Color::off();
                    slot.around.push_back(a);
                }
            }
            s.slots.push_back(slot);
        }
        s.has_entry = rng() & 1;
        if (s.has_entry) {
            s.entry_occupied = rng() & 1;
            s.entry_color = s.entry_occupied ? random_color() : Color::off();
        }
        RobotMemory m;
        switch (rng() % 3) {
            case 0: m.state = RobotState::None; break;
            case 1: m.state = RobotState::Follower; break;
            default: m.state = RobotState::Leader; break;
        }
        auto dir = [&]() -> std::optional<uint8_t> {
            if (rng() & 1) return std::nullopt;
            return static_cast<uint8_t>(rng() % nslots);
        };
        m.target = dir();
        m.next_target = dir();
        if (m.state == RobotState::Follower && !m.target) m.target = 0;
        if (m.state == RobotState::Leader && m.target) {
            m.wait_mode = (rng() & 1) ? WaitMode::WaitingConf : WaitMode::WaitingConf2;
        }
        if (s.has_entry) m.entry = static_cast<uint8_t>(nslots);
        m.door_id = static_cast<uint8_t>(1 + rng() % k);
        s.own_color = random_color();
        return {s, m};
    }
};

}  // namespace

TEST_CASE("pack: none state at the door") {
    RobotMemory none;
    SECTION("empty neighbor: lead and move at once") {
        auto out = pack_step(door_snapshot(false), none, 2);
        CHECK(out.memory.state == RobotState::Leader);
        CHECK(out.color == Color::mov());
        REQUIRE(out.move.has_value());
        CHECK(*out.move == 0);
    }
    SECTION("occupied neighbor: follow it") {
        auto out = pack_step(door_snapshot(true, Color::mov()), none, 2);
        CHECK(out.memory.state == RobotState::Follower);
        REQUIRE(out.memory.target.has_value());
        CHECK(*out.memory.target == 0);
        CHECK_FALSE(out.move.has_value());
    }
    SECTION("one-vertex graph: finish on the spot") {
        Snapshot s;
        s.radius = 1;
        auto out = pack_step(s, none, 1);
        CHECK(out.memory.state == RobotState::Finished);
        CHECK(out.color == Color::dir(1));
    }
}

TEST_CASE("pack: follower captures a direction, then confirms") {
    RobotMemory m;
    m.state = RobotState::Follower;
    m.target = 0;
    auto snap = door_snapshot(true, Color::dir(1));
    auto out = pack_step(snap, m, 2);
    REQUIRE(out.memory.next_target.has_value());
    CHECK(*out.memory.next_target == 0);
    CHECK(out.color == Color::off());  // capture cycle does not confirm yet
    // Next activation: predecessor no longer shows a direction; the robot
    // has never moved, so it confirms unconditionally.
    auto snap2 = door_snapshot(true, Color::off());
    auto out2 = pack_step(snap2, out.memory, 2);
    CHECK(out2.color == Color::conf());
}

TEST_CASE("pack: leader target change waits for CONF2") {
    RobotMemory m;
    m.state = RobotState::Leader;
    m.target = 0;
    m.wait_mode = WaitMode::WaitingConf;
    m.entry = 2;
    Snapshot s = snap_with_slots(1, {{true, Color::off()}, {false, Color::off()}});
    s.has_entry = true;
    s.entry_occupied = true;
    s.entry_color = Color::conf();
    auto out = pack_step(s, m, 3);
    REQUIRE(out.memory.target.has_value());
    CHECK(*out.memory.target == 1);
    CHECK(out.color == Color::dir(2));
    CHECK(out.memory.wait_mode == WaitMode::WaitingConf2);
    CHECK_FALSE(out.move.has_value());
    // Plain CONF does not release the swapped target; CONF2 does.
    auto out2 = pack_step(s, out.memory, 3);
    CHECK_FALSE(out2.move.has_value());
    Snapshot s2 = s;
    s2.entry_color = Color::conf2();
    auto out3 = pack_step(s2, out.memory, 3);
    REQUIRE(out3.move.has_value());
    CHECK(*out3.move == 1);
    CHECK(out3.color == Color::mov());
}

TEST_CASE("pack: leader with no empty neighbor hands over and finishes") {
    RobotMemory m;
    m.state = RobotState::Leader;
    m.target = 0;
    m.wait_mode = WaitMode::WaitingConf;
    m.entry = 1;
    Snapshot s = snap_with_slots(1, {{true, Color::off()}});
    s.has_entry = true;
    s.entry_occupied = true;
    s.entry_color = Color::conf();
    auto out = pack_step(s, m, 4);
    CHECK(out.memory.state == RobotState::Finished);
    CHECK(out.color == Color::dir(4));
    CHECK_FALSE(out.move.has_value());
}

TEST_CASE("pack: follower takes the leadership on DIR(delta)") {
    RobotMemory m;
    m.state = RobotState::Follower;
    m.target = 0;
    m.next_target = 0;
    Snapshot s = door_snapshot(true, Color::dir(2));
    s.own_color = Color::conf();
    auto out = pack_step(s, m, 2);
    CHECK(out.memory.state == RobotState::Leader);
    CHECK_FALSE(out.memory.target.has_value());
    CHECK_FALSE(out.memory.next_target.has_value());
}

TEST_CASE("pack: preconditions") {
    RobotMemory fin;
    fin.state = RobotState::Finished;
    CHECK_THROWS_AS(pack_step(door_snapshot(false), fin, 2), std::invalid_argument);
    Snapshot wrong = door_snapshot(false);
    wrong.radius = 2;
    CHECK_THROWS_AS(pack_step(wrong, RobotMemory{}, 2), std::invalid_argument);
    RobotMemory outlier;
    outlier.state = RobotState::Follower;
    outlier.target = 5;
    CHECK_THROWS_AS(pack_step(door_snapshot(true), outlier, 2), std::invalid_argument);
}

TEST_CASE("is_blocked") {
    Snapshot s = snap_with_slots(2, {{false, Color::off()}});
    auto& around = s.slots[0].around;
    SECTION("empty surroundings") {
        around.push_back({false, Color::off(), true});
        around.push_back({false, Color::off(), false});
        CHECK_FALSE(is_blocked(s, 0, 3));
    }
    SECTION("a lit robot blocks") {
        around.push_back({true, Color::conf(), false});
        CHECK(is_blocked(s, 0, 3));
    }
    SECTION("the handover color does not block") {
        around.push_back({true, Color::dir(3), false});
        CHECK_FALSE(is_blocked(s, 0, 3));
        around.push_back({true, Color::off(), false});
        CHECK_FALSE(is_blocked(s, 0, 3));
    }
    SECTION("the observer itself never blocks") {
        around.push_back({true, Color::mov(), true});
        CHECK_FALSE(is_blocked(s, 0, 3));
    }
    SECTION("errors") {
        CHECK_THROWS_AS(is_blocked(s, 2, 3), std::invalid_argument);
        Snapshot r1 = snap_with_slots(1, {{false, Color::off()}});
        CHECK_THROWS_AS(is_blocked(r1, 0, 3), std::invalid_argument);
    }
}

TEST_CASE("block: leader avoids blocked vertices") {
    RobotMemory m;
    m.state = RobotState::Leader;
    m.entry = 2;
    Snapshot s = snap_with_slots(2, {{false, Color::off()}, {false, Color::off()}});
    s.has_entry = true;
    s.entry_occupied = true;
    s.entry_color = Color::conf();
    // First slot blocked by a lit robot one hop beyond it.
    s.slots[0].around.push_back({true, Color::dir(1), false});
    s.slots[1].around.push_back({false, Color::off(), true});
    auto out = block_step(s, m, 3);
    REQUIRE(out.memory.target.has_value());
    CHECK(*out.memory.target == 1);
    CHECK(out.color == Color::dir(2));
    // All blocked or occupied: hand over.
    s.slots[1].around.push_back({true, Color::mov(), false});
    auto out2 = block_step(s, m, 3);
    CHECK(out2.memory.state == RobotState::Finished);
    CHECK(out2.color == Color::dir(3));
}

TEST_CASE("block: confirmed leader moves to its unoccupied target") {
    RobotMemory m;
    m.state = RobotState::Leader;
    m.target = 0;
    m.wait_mode = WaitMode::WaitingConf;
    m.entry = 1;
    Snapshot s = snap_with_slots(2, {{false, Color::off()}});
    s.has_entry = true;
    s.entry_occupied = true;
    s.entry_color = Color::conf();
    auto out = block_step(s, m, 3);
    REQUIRE(out.move.has_value());
    CHECK(*out.move == 0);
    CHECK(out.color == Color::mov());
    CHECK_FALSE(out.memory.target.has_value());
}

TEST_CASE("block: follower capture confirms immediately and announces before moving") {
    RobotMemory m;
    m.state = RobotState::Follower;
    m.target = 0;
    Snapshot s = snap_with_slots(2, {{true, Color::dir(1)}});
    auto out = block_step(s, m, 3);
    CHECK(out.color == Color::conf());
    REQUIRE(out.memory.next_target.has_value());
    CHECK(*out.memory.next_target == 0);
    // Predecessor left: announce the direction first, then move.
    Snapshot gone = snap_with_slots(2, {{false, Color::off()}});
    gone.own_color = Color::conf();
    auto out2 = block_step(gone, out.memory, 3);
    CHECK(out2.color == Color::dir(1));
    CHECK_FALSE(out2.move.has_value());
    Snapshot gone2 = gone;
    gone2.own_color = out2.color;
    auto out3 = block_step(gone2, out2.memory, 3);
    REQUIRE(out3.move.has_value());
    CHECK(out3.color == Color::mov());
}

TEST_CASE("priority: flanking leaders break the tie by rank") {
    // Both leaders sit at degree-1 doors flanking the empty vertex and
    // show their priority colors from the claim cycle.
    auto make = [](int door, Color opponent) {
        RobotMemory m;
        m.state = RobotState::Leader;
        m.target = 0;
        m.wait_mode = WaitMode::WaitingConf;
        m.door_id = static_cast<uint8_t>(door);
        Snapshot s = snap_with_slots(2, {{false, Color::off()}});
        s.own_color = Color::priority(door);
        s.slots[0].around.push_back({false, Color::off(), true});
        s.slots[0].around.push_back({true, opponent, false});
        return std::make_pair(s, m);
    };
    auto [s1, m1] = make(1, Color::priority(2));
    auto out1 = priority_step(s1, m1, 2, 2);
    REQUIRE(out1.move.has_value());  // rank 1 outranks 2: not blocked
    CHECK(out1.color == Color::priority(1));
    auto [s2, m2] = make(2, Color::priority(1));
    auto out2 = priority_step(s2, m2, 2, 2);
    CHECK_FALSE(out2.move.has_value());  // blocked by the higher rank
    CHECK(out2.memory.state == RobotState::Finished);
}

TEST_CASE("priority with k=1 collapses to block") {
    CaseGen gen{std::mt19937_64{2024}, 3, 1};
    for (int i = 0; i < 4000; ++i) {
        auto [s, m] = gen.make(2);
        StepOutput a, b;
        bool threw_a = false, threw_b = false;
        try {
            a = block_step(s, m, gen.delta);
        } catch (const std::exception&) {
            threw_a = true;
        }
        try {
            b = priority_step(s, m, gen.delta, 1);
        } catch (const std::exception&) {
            threw_b = true;
        }
        REQUIRE(threw_a == threw_b);
        if (!threw_a) {
            CHECK(a.memory == b.memory);
            CHECK(a.move == b.move);
            CHECK(a.color == b.color);
        }
    }
}

TEST_CASE("step functions are pure and respect output invariants") {
    for (int delta : {2, 4}) {
        CaseGen gen{std::mt19937_64{static_cast<uint64_t>(delta) * 77}, delta, 2};
        for (int i = 0; i < 6000; ++i) {
            int radius = (i % 2) + 1;
            auto [s, m] = gen.make(radius);
            auto call = [&](const Snapshot& sn, const RobotMemory& mm) -> std::optional<StepOutput> {
                try {
                    if (radius == 1) return pack_step(sn, mm, delta);
                    if (i % 4 < 2) return block_step(sn, mm, delta);
                    return priority_step(sn, mm, delta, 2);
                } catch (const std::exception&) {
                    return std::nullopt;
                }
            };
            auto out1 = call(s, m);
            auto out2 = call(s, m);
            REQUIRE(out1.has_value() == out2.has_value());
            if (!out1) continue;
            CHECK(*out1 == *out2);  // purity, bitwise
            // A move always goes to an unoccupied slot and shows the
            // in-transit color.
            if (out1->move) {
                CHECK_FALSE(s.slots[*out1->move].occupied);
                CHECK((out1->color == Color::mov() ||
                       out1->color == Color::priority(m.door_id)));
            }
            // No state regressions.
            if (m.state == RobotState::Leader)
                CHECK((out1->memory.state == RobotState::Leader ||
                       out1->memory.state == RobotState::Finished));
            if (m.state == RobotState::Follower)
                CHECK(out1->memory.state != RobotState::None);
            // A freshly displayed direction color always names the stored
            // target (unchanged outputs just carry the input light along).
            if (out1->color != s.own_color && out1->color.is_dir() &&
                !out1->color.is_handover(delta)) {
                REQUIRE(out1->memory.target.has_value());
                CHECK(static_cast<int>(*out1->memory.target) == out1->color.index - 1);
            }
            // CONF gating, directly from the handshake condition.
            if (radius == 1 && m.state == RobotState::Follower &&
                out1->color == Color::conf() && s.own_color != Color::conf()) {
                CHECK((!s.has_entry ||
                       (s.entry_occupied && s.entry_color.is_conf_family())));
            }
        }
    }
}
