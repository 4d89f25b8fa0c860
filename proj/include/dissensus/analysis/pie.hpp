#pragma once

#include "../engine.hpp"
#include "replay.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace dissensus::analysis {

// Exact non-negative rational, kept reduced.
struct Rational {
    std::int64_t num = 0;
    std::int64_t den = 1;

    static Rational of(std::int64_t n, std::int64_t d) {
        const auto g = std::gcd(n, d);
        return g == 0 ? Rational{0, 1} : Rational{n / g, d / g};
    }

    friend Rational operator+(Rational a, Rational b) {
        const auto l = std::lcm(a.den, b.den);
        return of(a.num * (l / a.den) + b.num * (l / b.den), l);
    }

    friend bool operator==(const Rational&, const Rational&) = default;
};

// A slice spans 360 * numerator / denominator degrees, numerator being the
// agent's state and denominator the conserved total.
struct Slice {
    AgentId agent;
    Quanta numerator = 0;
    Quanta denominator = 1;

    Rational degrees() const { return Rational::of(360 * numerator, denominator); }
    double degrees_approx() const { return 360.0 * static_cast<double>(numerator) / static_cast<double>(denominator); }
};

enum class FramePhase { Epoch, Threshold, Tick };

inline const char* to_string(FramePhase p) {
    switch (p) {
        case FramePhase::Epoch: return "epoch";
        case FramePhase::Threshold: return "threshold";
        case FramePhase::Tick: return "tick";
    }
    return "?";
}

struct PieFrame {
    std::size_t index = 0;
    std::int64_t epoch = 0;
    std::int64_t tick = 0;
    FramePhase phase = FramePhase::Epoch;
    std::vector<Slice> slices;  // id order

    Rational total_degrees() const {
        Rational sum;
        for (const auto& s : slices) sum = sum + s.degrees();
        return sum;
    }
};

// One frame per epoch, plus a frame at each critical time showing the
// threshold states (a dying agent appears once as a zero-width slice before
// it disappears). With per_tick, a frame after every exchange as well.
inline std::vector<PieFrame> export_pie_frames(const Trace& t, bool per_tick = false) {
    std::vector<PieFrame> frames;
    const Quanta chi = t.config.chi();
    auto push = [&](const SystemState& s, FramePhase phase) {
        PieFrame f{frames.size(), s.epoch, s.tick, phase, {}};
        for (const auto& [a, v] : s.x) f.slices.push_back({a, v, chi});
        frames.push_back(std::move(f));
    };
    ReplayHooks hooks;
    hooks.on_epoch = [&](const SystemState& s, const EpochSnapshot&) { push(s, FramePhase::Epoch); };
    hooks.on_threshold = [&](const SystemState& s) { push(s, FramePhase::Threshold); };
    if (per_tick) hooks.on_gossip = [&](const SystemState& s, const GossipRecord&) { push(s, FramePhase::Tick); };
    replay(t, hooks);
    return frames;
}

inline void write_frames_csv(std::ostream& os, const std::vector<PieFrame>& frames, const std::string& header_comment) {
    if (!header_comment.empty()) os << "# " << header_comment << '\n';
    os << "frame,epoch,tick,phase,agent,numerator,denominator,degrees\n";
    char buf[32];
    for (const auto& f : frames)
        for (const auto& s : f.slices) {
            std::snprintf(buf, sizeof buf, "%.6f", s.degrees_approx());
            os << f.index << ',' << f.epoch << ',' << f.tick << ',' << to_string(f.phase) << ',' << s.agent << ','
               << s.numerator << ',' << s.denominator << ',' << buf << '\n';
        }
}

// Static SVG pie for one frame.
inline std::string frame_svg(const PieFrame& f, double radius = 100.0) {
    static const char* palette[] = {"#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f",
                                    "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac"};
    constexpr double pi = 3.14159265358979323846;
    const double c = radius + 10.0;
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << 2 * c << "\" height=\"" << 2 * c << "\">\n";
    os << "<title>epoch " << f.epoch << " tick " << f.tick << " (" << to_string(f.phase) << ")</title>\n";
    double start = 0.0;
    std::size_t live = 0;
    for (const auto& s : f.slices)
        if (s.numerator > 0) ++live;
    for (const auto& s : f.slices) {
        const double sweep = s.degrees_approx();
        const auto color = palette[s.agent.value % (sizeof palette / sizeof *palette)];
        if (sweep <= 0.0) continue;
        if (live == 1) {
            os << "<circle cx=\"" << c << "\" cy=\"" << c << "\" r=\"" << radius << "\" fill=\"" << color
               << "\"><title>agent " << s.agent << "</title></circle>\n";
            break;
        }
        const double a0 = start * pi / 180.0, a1 = (start + sweep) * pi / 180.0;
        os << "<path d=\"M " << c << ' ' << c << " L " << c + radius * std::cos(a0) << ' ' << c + radius * std::sin(a0)
           << " A " << radius << ' ' << radius << " 0 " << (sweep > 180.0 ? 1 : 0) << " 1 "
           << c + radius * std::cos(a1) << ' ' << c + radius * std::sin(a1) << " Z\" fill=\"" << color
           << "\" stroke=\"white\"><title>agent " << s.agent << ": " << s.numerator << '/' << s.denominator
           << "</title></path>\n";
        start += sweep;
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace dissensus::analysis
