// Copyright (c) 2026 The gflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "gflow/data/synth.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

#include "gflow/data/controls.hpp"
#include "gflow/errors.hpp"
#include "gflow/numcore/random.hpp"

namespace gflow::data {

namespace {

constexpr double kPi = std::numbers::pi;

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;
};

Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
double norm(Vec3 a) { return std::sqrt(dot(a, a)); }

struct Mat3 {
    std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};
    Vec3 operator*(Vec3 v) const {
        return {m[0] * v.x + m[1] * v.y + m[2] * v.z, m[3] * v.x + m[4] * v.y + m[5] * v.z,
                m[6] * v.x + m[7] * v.y + m[8] * v.z};
    }
    Mat3 operator*(const Mat3& o) const {
        Mat3 r;
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                r.m[i * 3 + j] = m[i * 3] * o.m[j] + m[i * 3 + 1] * o.m[3 + j] + m[i * 3 + 2] * o.m[6 + j];
            }
        }
        return r;
    }
};

Mat3 rot_x(double a) {
    const double c = std::cos(a), s = std::sin(a);
    return {{1, 0, 0, 0, c, -s, 0, s, c}};
}
Mat3 rot_y(double a) {
    const double c = std::cos(a), s = std::sin(a);
    return {{c, 0, s, 0, 1, 0, -s, 0, c}};
}
Mat3 rot_z(double a) {
    const double c = std::cos(a), s = std::sin(a);
    return {{c, -s, 0, s, c, 0, 0, 0, 1}};
}

// Segment offsets (cm) in the parent frame.
constexpr double kThigh = 46.0;
constexpr double kShin = 46.0;
constexpr double kPelvisHeight = 93.0;
constexpr double kHeelHeight = 8.0;
constexpr double kStanceWidth = 9.0;
const Vec3 kHip{9.0, -4.0, 0.0};
const Vec3 kToe{0.0, -5.0, 15.0};
const Vec3 kSpine{0.0, 18.0, 0.0};
const Vec3 kChest{0.0, 18.0, 0.0};
const Vec3 kNeck{0.0, 14.0, 0.0};
const Vec3 kHead{0.0, 12.0, 3.0};
const Vec3 kShoulder{17.0, 2.0, 0.0};
const Vec3 kUpperArm{0.0, -28.0, 0.0};
const Vec3 kForearm{0.0, -25.0, 0.0};
const Vec3 kHand{0.0, -8.0, 0.0};
constexpr double kSwingShape = 0.5;

Vec3 mirrored(Vec3 v) { return {-v.x, v.y, v.z}; }

// Horizontal swing progress; derivative 1 - kSwingShape*cos(2 pi u) > 0.
double swing_progress(double u) { return u - kSwingShape * std::sin(2.0 * kPi * u) / (2.0 * kPi); }

struct Style {
    double arm_swing, elbow_base, elbow_gain, abduction, lean, sway, bob, roll, yaw_wobble, twist, nod, lift;
};

Style draw_style(num::Rng& rng) {
    auto u = [&rng](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
    Style s;
    s.arm_swing = u(0.3, 0.55);
    s.elbow_base = u(0.15, 0.45);
    s.elbow_gain = u(0.2, 0.6);
    s.abduction = u(0.05, 0.15);
    s.lean = u(0.02, 0.1);
    s.sway = u(1.5, 3.0);
    s.bob = u(0.8, 1.8);
    s.roll = u(0.02, 0.06);
    s.yaw_wobble = u(0.0, 0.06);
    s.twist = u(0.05, 0.15);
    s.nod = u(0.0, 0.05);
    s.lift = u(7.0, 11.0);
    return s;
}

class Path {
public:
    explicit Path(const GaitParams& p) : p_(p) {}

    double heading(double t) const {
        switch (p_.path) {
            case PathKind::Line: return p_.initial_heading;
            case PathKind::Circle: return p_.initial_heading + p_.speed / p_.radius * t;
            case PathKind::SCurve: return p_.initial_heading + p_.amplitude * std::sin(2.0 * kPi * t / p_.period);
        }
        return 0.0;
    }

    // Ground point (y = 0).
    Vec3 position(double t) const {
        const double h0 = p_.initial_heading, v = p_.speed;
        switch (p_.path) {
            case PathKind::Line: return {v * t * std::sin(h0), 0.0, v * t * std::cos(h0)};
            case PathKind::Circle: {
                const double r = p_.radius, h = heading(t);
                return {r * (std::cos(h0) - std::cos(h)), 0.0, r * (std::sin(h) - std::sin(h0))};
            }
            case PathKind::SCurve: {
                // Composite Simpson on an even number of intervals.
                const auto n = static_cast<std::size_t>(2 * std::ceil(std::abs(t) * 100.0) + 2);
                const double dt = t / static_cast<double>(n);
                double sx = 0.0, sz = 0.0;
                for (std::size_t i = 0; i <= n; ++i) {
                    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
                    const double h = heading(static_cast<double>(i) * dt);
                    sx += w * std::sin(h);
                    sz += w * std::cos(h);
                }
                return {v * dt / 3.0 * sx, 0.0, v * dt / 3.0 * sz};
            }
        }
        return {};
    }

private:
    GaitParams p_;
};

struct Plant {
    Vec3 position;
    double yaw = 0.0;
};

class Walker {
public:
    Walker(const GaitParams& params, Style style) : params_(params), style_(style), path_(params) {
        period_ = 2.0 / params.cadence;
    }

    double period() const { return period_; }

    // Stance k of heel j spans [(k + j/2) P, (k + j/2 + 1/2) P).
    Plant plant(std::size_t heel, long k) {
        const auto key = std::make_pair(heel, k);
        if (auto it = plants_.find(key); it != plants_.end()) return it->second;
        const double mid = (static_cast<double>(k) + 0.5 * static_cast<double>(heel) + 0.25) * period_;
        const double h = path_.heading(mid);
        const double lateral = heel == 0 ? kStanceWidth : -kStanceWidth;
        const Vec3 ground = path_.position(mid);
        Plant p{{ground.x + lateral * std::cos(h), kHeelHeight, ground.z - lateral * std::sin(h)}, h};
        plants_.emplace(key, p);
        return p;
    }

    bool planted(std::size_t heel, double t) const {
        const double q = t / period_ - 0.5 * static_cast<double>(heel);
        return q - std::floor(q) < 0.5;
    }

    Plant heel_pose(std::size_t heel, double t) {
        const double q = t / period_ - 0.5 * static_cast<double>(heel);
        const auto k = static_cast<long>(std::floor(q));
        const double frac = q - static_cast<double>(k);
        const Plant a = plant(heel, k);
        if (frac < 0.5) return a;
        const Plant b = plant(heel, k + 1);
        const double u = (frac - 0.5) / 0.5;
        const double e = swing_progress(u);
        Plant out;
        out.position = a.position + e * (b.position - a.position);
        out.position.y = kHeelHeight + style_.lift * std::sin(kPi * u);
        out.yaw = a.yaw + e * wrap_angle(b.yaw - a.yaw);
        return out;
    }

    std::array<Vec3, 21> pose(double t, std::size_t frame) {
        const double w = 2.0 * kPi * t / period_;
        const double theta = path_.heading(t);
        const Vec3 ground = path_.position(t);
        const Mat3 heading = rot_y(theta);
        std::array<Vec3, 21> p{};
        p[0] = ground + heading * Vec3{style_.sway * std::sin(w), kPelvisHeight - style_.bob * std::cos(2.0 * w), 0.0};
        const Mat3 body = rot_y(theta + style_.yaw_wobble * std::sin(w)) * rot_x(style_.lean) *
                          rot_z(style_.roll * std::sin(w));
        p[1] = p[0] + body * kHip;
        p[5] = p[0] + body * mirrored(kHip);
        const Vec3 forward = body * Vec3{0.0, 0.0, 1.0};
        for (std::size_t heel = 0; heel < 2; ++heel) {
            const std::size_t hip = heel == 0 ? 1 : 5;
            const Plant foot = heel_pose(heel, t);
            p[hip + 1] = knee(p[hip], foot.position, forward, frame);
            p[hip + 2] = foot.position;
            p[hip + 3] = foot.position + rot_y(foot.yaw) * kToe;
        }
        const Mat3 torso = body * rot_y(-style_.twist * std::sin(w));
        p[9] = p[0] + body * kSpine;
        p[10] = p[9] + torso * kChest;
        p[11] = p[10] + torso * kNeck;
        p[12] = p[11] + torso * rot_x(style_.nod * std::sin(2.0 * w)) * kHead;
        const double swing = -style_.arm_swing * std::cos(w);
        for (std::size_t side = 0; side < 2; ++side) {
            const std::size_t s = side == 0 ? 13 : 17;
            const double alpha = side == 0 ? swing : -swing;
            const double abduction = side == 0 ? style_.abduction : -style_.abduction;
            const Mat3 upper = torso * rot_z(abduction) * rot_x(-alpha);
            const Mat3 fore = upper * rot_x(-(style_.elbow_base + style_.elbow_gain * std::max(0.0, alpha)));
            p[s] = p[10] + torso * (side == 0 ? kShoulder : mirrored(kShoulder));
            p[s + 1] = p[s] + upper * kUpperArm;
            p[s + 2] = p[s + 1] + fore * kForearm;
            p[s + 3] = p[s + 2] + fore * kHand;
        }
        return p;
    }

    const Path& path() const { return path_; }

private:
    // Two-bone IK with the knee bending toward `forward`.
    static Vec3 knee(Vec3 hip, Vec3 heel, Vec3 forward, std::size_t frame) {
        const Vec3 d = heel - hip;
        const double len = norm(d);
        if (len > (kThigh + kShin) * 0.995) {
            throw ConfigError("invalid path parameters: leg cannot reach the planted heel at frame " +
                              std::to_string(frame) + " (speed too high for the cadence)");
        }
        const Vec3 dir = (1.0 / len) * d;
        Vec3 n = forward - dot(forward, dir) * dir;
        n = (1.0 / norm(n)) * n;
        const double along = (kThigh * kThigh - kShin * kShin + len * len) / (2.0 * len);
        const double out = std::sqrt(std::max(0.0, kThigh * kThigh - along * along));
        return hip + along * dir + out * n;
    }

    GaitParams params_;
    Style style_;
    Path path_;
    double period_ = 1.0;
    std::map<std::pair<std::size_t, long>, Plant> plants_;
};

void check_params(const GaitParams& p, std::size_t steps, double fps) {
    auto fail = [](const std::string& what) { throw ConfigError("invalid path parameters: " + what); };
    const double values[] = {p.speed, p.radius, p.amplitude, p.period, p.cadence, p.initial_heading, p.marker_noise, fps};
    for (double v : values) {
        if (!std::isfinite(v)) fail("non-finite value");
    }
    if (p.speed <= 0.0 || p.speed > 250.0) fail("speed must lie in (0, 250] cm/s");
    if (p.cadence < 1.0 || p.cadence > 3.0) fail("cadence must lie in [1, 3] steps/s");
    if (p.path == PathKind::Circle && std::abs(p.radius) < 100.0) fail("circle radius must be at least 100 cm");
    if (p.path == PathKind::SCurve && (p.amplitude < 0.0 || p.amplitude > 1.2)) fail("s-curve amplitude must lie in [0, 1.2] rad");
    if (p.path == PathKind::SCurve && p.period <= 0.0) fail("s-curve period must be positive");
    if (p.marker_noise < 0.0) fail("marker noise must be non-negative");
    if (steps == 0) fail("at least one step is required");
    if (fps <= 0.0) fail("frame rate must be positive");
}

}  // namespace

std::string to_string(PathKind kind) {
    switch (kind) {
        case PathKind::Line: return "line";
        case PathKind::Circle: return "circle";
        case PathKind::SCurve: return "s_curve";
    }
    return "line";
}

PathKind parse_path_kind(const std::string& name) {
    if (name == "line") return PathKind::Line;
    if (name == "circle") return PathKind::Circle;
    if (name == "s_curve") return PathKind::SCurve;
    throw ConfigError("unknown path kind '" + name + "' (expected line, circle or s_curve)");
}

std::vector<double> walker_bone_lengths() {
    const std::map<std::pair<std::size_t, std::size_t>, double> lengths = {
        {{0, 1}, norm(kHip)},        {{1, 2}, kThigh},           {{2, 3}, kShin},          {{3, 4}, norm(kToe)},
        {{0, 5}, norm(kHip)},        {{5, 6}, kThigh},           {{6, 7}, kShin},          {{7, 8}, norm(kToe)},
        {{0, 9}, norm(kSpine)},      {{9, 10}, norm(kChest)},    {{10, 11}, norm(kNeck)},  {{11, 12}, norm(kHead)},
        {{10, 13}, norm(kShoulder)}, {{13, 14}, norm(kUpperArm)}, {{14, 15}, norm(kForearm)}, {{15, 16}, norm(kHand)},
        {{10, 17}, norm(kShoulder)}, {{17, 18}, norm(kUpperArm)}, {{18, 19}, norm(kForearm)}, {{19, 20}, norm(kHand)},
    };
    std::vector<double> out;
    for (const auto& e : skel::default_skeleton().edges) out.push_back(lengths.at(std::minmax(e.a, e.b)));
    return out;
}

SynthClip synth_gait(const GaitParams& params, std::size_t steps, double fps, std::uint64_t seed) {
    check_params(params, steps, fps);
    num::Rng style_rng = num::make_rng(seed, 0);
    Walker walker(params, draw_style(style_rng));
    const double duration = static_cast<double>(steps) / params.cadence;
    const auto frames = static_cast<std::size_t>(std::llround(duration * fps));
    constexpr std::size_t m = 21;

    SynthClip out;
    out.world = Tensor({frames, m, 3});
    RootTrack track;
    std::array<std::vector<bool>, 2> planted;
    for (std::size_t f = 0; f < frames; ++f) {
        const double t = static_cast<double>(f) / fps;
        const auto pose = walker.pose(t, f);
        for (std::size_t i = 0; i < m; ++i) {
            double* w = out.world.data() + (f * m + i) * 3;
            w[0] = pose[i].x;
            w[1] = pose[i].y;
            w[2] = pose[i].z;
        }
        const Vec3 ground = walker.path().position(t);
        track.x.push_back(ground.x);
        track.z.push_back(ground.z);
        track.heading.push_back(walker.path().heading(t));
        for (std::size_t h = 0; h < 2; ++h) planted[h].push_back(walker.planted(h, t));
    }
    if (params.marker_noise > 0.0) {
        num::Rng noise_rng = num::make_rng(seed, 1);
        std::normal_distribution<double> normal(0.0, params.marker_noise);
        for (double& v : out.world.values()) v += normal(noise_rng);
    }

    out.clip.fps = fps;
    out.clip.source = "synth:" + to_string(params.path) + ":" + std::to_string(seed);
    out.clip.root_relative = true;
    out.clip.controls = frames >= 2 ? controls_from_track(track) : Tensor({frames, kControlChannels});
    out.clip.positions = Tensor({frames, m, 3});
    for (std::size_t f = 0; f < frames; ++f) {
        const double s = std::sin(track.heading[f]), c = std::cos(track.heading[f]);
        for (std::size_t i = 0; i < m; ++i) {
            const double* w = out.world.data() + (f * m + i) * 3;
            double* p = out.clip.positions.data() + (f * m + i) * 3;
            const double dx = w[0] - track.x[f], dz = w[2] - track.z[f];
            p[0] = c * dx - s * dz;
            p[1] = w[1];
            p[2] = s * dx + c * dz;
        }
    }
    validate(out.clip);

    GaitTruth& truth = out.truth;
    truth.bone_lengths = walker_bone_lengths();
    truth.heading = track.heading;
    const auto& skeleton = skel::default_skeleton();
    truth.min_swing_speed = std::numeric_limits<double>::infinity();
    for (std::size_t h = 0; h < 2; ++h) {
        for (std::size_t f = 0; f < frames;) {
            if (!planted[h][f]) {
                ++f;
                continue;
            }
            std::size_t last = f;
            while (last + 1 < frames && planted[h][last + 1]) ++last;
            truth.footsteps.push_back({h, f, last});
            f = last + 1;
        }
        const std::size_t marker = skeleton.heels[h];
        for (std::size_t f = 1; f < frames; ++f) {
            if (planted[h][f] || planted[h][f - 1]) continue;
            const double* a = out.world.data() + (f * m + marker) * 3;
            const double* b = out.world.data() + ((f - 1) * m + marker) * 3;
            truth.min_swing_speed = std::min(truth.min_swing_speed, std::hypot(a[0] - b[0], a[2] - b[2]) * fps * 10.0);
        }
    }
    return out;
}

std::vector<GaitParams> random_gait_params(std::size_t count, std::uint64_t seed) {
    num::Rng rng = num::make_rng(seed, 7);
    auto u = [&rng](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
    std::vector<GaitParams> out;
    for (std::size_t i = 0; i < count; ++i) {
        GaitParams p;
        p.path = static_cast<PathKind>(std::uniform_int_distribution<int>(0, 2)(rng));
        p.speed = u(80.0, 140.0);
        p.cadence = 1.5 + p.speed / 200.0 + u(-0.1, 0.1);
        p.radius = u(200.0, 600.0) * (u(0.0, 1.0) < 0.5 ? -1.0 : 1.0);
        p.amplitude = u(0.3, 0.8);
        p.period = u(4.0, 8.0);
        p.initial_heading = u(-kPi, kPi);
        out.push_back(p);
    }
    return out;
}

}  // namespace gflow::data
