#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace graphfill {

// Light values of the main protocols. DIR(i) announces a move toward the
// i-th direction of the shower's linear frame (1-based); DIR(delta) is
// the handover signal meaning "no admissible target, my successor takes
// over". PRIORITY(j) marks a moving leader that entered through door j.
// Stable trace codes: OFF=0, MOV=1, CONF=2, CONF2=3, DIR(i)=3+i,
// PRIORITY(j)=3+delta+j.
struct Color {
    enum class Kind : uint8_t { Off, Mov, Conf, Conf2, Dir, Priority };
    Kind kind = Kind::Off;
    uint8_t index = 0;  // DIR direction (1..delta) or door rank (1..k)

    bool operator==(const Color& o) const { return kind == o.kind && index == o.index; }
    bool operator!=(const Color& o) const { return !(*this == o); }

    bool is_off() const { return kind == Kind::Off; }
    bool is_dir() const { return kind == Kind::Dir; }
    bool is_conf_family() const { return kind == Kind::Conf || kind == Kind::Conf2; }
    bool is_handover(int delta) const { return kind == Kind::Dir && index == delta; }

    static Color off() { return {Kind::Off, 0}; }
    static Color mov() { return {Kind::Mov, 0}; }
    static Color conf() { return {Kind::Conf, 0}; }
    static Color conf2() { return {Kind::Conf2, 0}; }
    static Color dir(int i) { return {Kind::Dir, static_cast<uint8_t>(i)}; }
    static Color priority(int j) { return {Kind::Priority, static_cast<uint8_t>(j)}; }
};

inline int color_code(const Color& c, int delta) {
    switch (c.kind) {
        case Color::Kind::Off: return 0;
        case Color::Kind::Mov: return 1;
        case Color::Kind::Conf: return 2;
        case Color::Kind::Conf2: return 3;
        case Color::Kind::Dir: return 3 + c.index;
        case Color::Kind::Priority: return 3 + delta + c.index;
    }
    return 0;
}

inline Color color_from_code(int code, int delta, int k) {
    if (code == 0) return Color::off();
    if (code == 1) return Color::mov();
    if (code == 2) return Color::conf();
    if (code == 3) return Color::conf2();
    if (code >= 4 && code <= 3 + delta) return Color::dir(code - 3);
    if (code > 3 + delta && code <= 3 + delta + k) return Color::priority(code - 3 - delta);
    throw std::invalid_argument("color_from_code: code " + std::to_string(code) + " out of range");
}

// The full color set: delta+4 colors for the single-door protocols,
// delta+k+4 once priority colors exist (k >= 2).
inline std::vector<Color> palette(int delta, int k) {
    if (delta < 1 || k < 1) throw std::invalid_argument("palette: delta and k must be >= 1");
    std::vector<Color> out{Color::off(), Color::mov(), Color::conf(), Color::conf2()};
    for (int i = 1; i <= delta; ++i) out.push_back(Color::dir(i));
    if (k >= 2)
        for (int j = 1; j <= k; ++j) out.push_back(Color::priority(j));
    return out;
}

inline std::string color_name(const Color& c) {
    switch (c.kind) {
        case Color::Kind::Off: return "OFF";
        case Color::Kind::Mov: return "MOV";
        case Color::Kind::Conf: return "CONF";
        case Color::Kind::Conf2: return "CONF2";
        case Color::Kind::Dir: return "DIR" + std::to_string(c.index);
        case Color::Kind::Priority: return "PRI" + std::to_string(c.index);
    }
    return "?";
}

}  // namespace graphfill
