// Copyright (c) 2026 The gflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "gflow/data/clip.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "gflow/errors.hpp"

namespace gflow::data {

static_assert(std::endian::native == std::endian::little, "binary clip IO assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'G', 'F', 'L', 'O', 'W', 'C', 'L', 'P'};
constexpr std::uint32_t kBinaryVersion = 1;
constexpr int kTextVersion = 1;

std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

[[noreturn]] void parse_fail(std::size_t line, const std::string& what) {
    throw IoError("clip line " + std::to_string(line) + ": " + what);
}

std::size_t parse_count(std::string_view tok, std::size_t line) {
    std::size_t v = 0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) parse_fail(line, "bad integer '" + std::string(tok) + "'");
    return v;
}

double parse_value(std::string_view tok, std::size_t line) {
    double v = 0.0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) parse_fail(line, "bad number '" + std::string(tok) + "'");
    return v;
}

ClipFormat resolve(const std::filesystem::path& path, ClipFormat format) {
    if (format != ClipFormat::Auto) return format;
    return path.extension() == ".gfc" ? ClipFormat::Binary : ClipFormat::Text;
}

template <typename T>
void put(std::string& out, const T& v) {
    out.append(reinterpret_cast<const char*>(&v), sizeof(T));
}

class Reader {
public:
    explicit Reader(std::string_view bytes) : bytes_(bytes) {}

    template <typename T>
    T get(const char* what) {
        T v;
        read(&v, sizeof(T), what);
        return v;
    }

    void read(void* dst, std::size_t n, const char* what) {
        if (bytes_.size() - offset_ < n) {
            throw IoError("binary clip truncated at offset " + std::to_string(offset_) + " reading " + what);
        }
        std::memcpy(dst, bytes_.data() + offset_, n);
        offset_ += n;
    }

    std::size_t remaining() const { return bytes_.size() - offset_; }
    std::size_t offset() const { return offset_; }

private:
    std::string_view bytes_;
    std::size_t offset_ = 0;
};

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open clip '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

MotionClip parse_binary(std::string_view bytes, std::size_t expected_markers) {
    Reader r(bytes);
    char magic[8];
    r.read(magic, sizeof(magic), "magic");
    if (std::memcmp(magic, kMagic, sizeof(magic)) != 0) throw IoError("binary clip: bad magic bytes");
    const auto version = r.get<std::uint32_t>("version");
    if (version != kBinaryVersion) throw IoError("binary clip: unsupported version " + std::to_string(version));
    const auto frames = r.get<std::uint32_t>("frames");
    const auto markers = r.get<std::uint32_t>("markers");
    const auto channels = r.get<std::uint32_t>("channels");
    const auto controls = r.get<std::uint32_t>("control channels");
    if (channels != 3 || controls != kControlChannels) throw IoError("binary clip: unsupported channel layout");
    if (expected_markers != 0 && markers != expected_markers) {
        throw ShapeError("clip has " + std::to_string(markers) + " markers, expected " +
                         std::to_string(expected_markers));
    }
    MotionClip clip;
    clip.fps = r.get<double>("fps");
    clip.root_relative = r.get<std::uint8_t>("root flag") != 0;
    const auto source_len = r.get<std::uint32_t>("source length");
    if (source_len > r.remaining()) throw IoError("binary clip truncated in source tag");
    clip.source.resize(source_len);
    r.read(clip.source.data(), source_len, "source");
    clip.positions = Tensor({frames, markers, 3});
    clip.controls = Tensor({frames, kControlChannels});
    r.read(clip.positions.data(), clip.positions.size() * sizeof(double), "positions");
    r.read(clip.controls.data(), clip.controls.size() * sizeof(double), "controls");
    if (r.remaining() != 0) throw IoError("binary clip: trailing bytes at offset " + std::to_string(r.offset()));
    validate(clip);
    return clip;
}

std::string format_binary(const MotionClip& clip) {
    std::string out(kMagic, sizeof(kMagic));
    put(out, kBinaryVersion);
    put(out, static_cast<std::uint32_t>(clip.frames()));
    put(out, static_cast<std::uint32_t>(clip.markers()));
    put(out, static_cast<std::uint32_t>(3));
    put(out, static_cast<std::uint32_t>(kControlChannels));
    put(out, clip.fps);
    put(out, static_cast<std::uint8_t>(clip.root_relative ? 1 : 0));
    put(out, static_cast<std::uint32_t>(clip.source.size()));
    out += clip.source;
    out.append(reinterpret_cast<const char*>(clip.positions.data()), clip.positions.size() * sizeof(double));
    out.append(reinterpret_cast<const char*>(clip.controls.data()), clip.controls.size() * sizeof(double));
    return out;
}

}  // namespace

MotionClip MotionClip::slice(std::size_t begin, std::size_t count) const {
    GFLOW_CHECK(begin + count <= frames(), ShapeError, "clip slice out of range");
    const std::size_t m = markers();
    MotionClip out;
    out.fps = fps;
    out.source = source;
    out.root_relative = root_relative;
    out.positions = Tensor({count, m, 3});
    out.controls = Tensor({count, kControlChannels});
    std::copy_n(positions.data() + begin * m * 3, count * m * 3, out.positions.data());
    std::copy_n(controls.data() + begin * kControlChannels, count * kControlChannels, out.controls.data());
    return out;
}

void validate(const MotionClip& clip) {
    GFLOW_CHECK(clip.positions.rank() == 3 && clip.positions.dim(2) == 3, ShapeError,
                "clip positions must be [T, M, 3], got " + num::shape_string(clip.positions.shape()));
    GFLOW_CHECK(clip.controls.rank() == 2 && clip.controls.dim(1) == kControlChannels &&
                    clip.controls.dim(0) == clip.frames(),
                ShapeError, "clip controls must be [T, 3], got " + num::shape_string(clip.controls.shape()));
    GFLOW_CHECK(std::isfinite(clip.fps) && clip.fps > 0.0, ConfigError, "clip frame rate must be positive");
    GFLOW_CHECK(clip.positions.all_finite() && clip.controls.all_finite(), NumericError, "clip contains non-finite values");
}

MotionClip parse_clip_text(std::string_view text, std::size_t expected_markers) {
    MotionClip clip;
    std::size_t markers = 0, frames = 0;
    bool have_markers = false, have_frames = false, have_fps = false;
    std::vector<double> pos, ctl;
    std::size_t line_no = 0, rows = 0;
    while (!text.empty()) {
        ++line_no;
        const std::size_t nl = text.find('\n');
        std::string_view line = trim(text.substr(0, nl));
        text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
        if (line.empty()) continue;
        if (line.front() == '#') {
            std::istringstream ss{std::string(line.substr(1))};
            std::string key, value;
            ss >> key;
            std::getline(ss >> std::ws, value);
            if (key == "gflow-clip") {
                if (parse_count(value, line_no) != kTextVersion) parse_fail(line_no, "unsupported version " + value);
            } else if (key == "fps") {
                clip.fps = parse_value(value, line_no);
                have_fps = true;
            } else if (key == "markers") {
                markers = parse_count(value, line_no);
                have_markers = true;
                if (expected_markers != 0 && markers != expected_markers) {
                    throw ShapeError("clip has " + std::to_string(markers) + " markers, expected " +
                                     std::to_string(expected_markers));
                }
            } else if (key == "frames") {
                frames = parse_count(value, line_no);
                have_frames = true;
            } else if (key == "root_relative") {
                clip.root_relative = parse_count(value, line_no) != 0;
            } else if (key == "source") {
                clip.source = value;
            }
            continue;
        }
        if (!have_markers || !have_fps) parse_fail(line_no, "data row before the fps/markers header");
        const std::size_t expected = markers * 3 + kControlChannels;
        std::size_t col = 0;
        while (!line.empty()) {
            const std::size_t sp = line.find_first_of(" \t");
            const std::string_view tok = line.substr(0, sp);
            const double v = parse_value(tok, line_no);
            if (col < markers * 3) {
                pos.push_back(v);
            } else if (col < expected) {
                ctl.push_back(v);
            }
            ++col;
            line = trim(line.substr(sp == std::string_view::npos ? line.size() : sp));
        }
        if (col != expected) {
            parse_fail(line_no, "expected " + std::to_string(expected) + " columns, got " + std::to_string(col));
        }
        ++rows;
    }
    if (!have_markers || !have_fps) throw IoError("clip: missing fps/markers header");
    if (have_frames && rows != frames) {
        throw IoError("clip truncated: header declares " + std::to_string(frames) + " frames, found " +
                      std::to_string(rows));
    }
    clip.positions = Tensor({rows, markers, 3}, std::move(pos));
    clip.controls = Tensor({rows, kControlChannels}, std::move(ctl));
    validate(clip);
    return clip;
}

std::string format_clip_text(const MotionClip& clip) {
    validate(clip);
    std::string out = "# gflow-clip " + std::to_string(kTextVersion) + "\n";
    out += "# fps " + format_double(clip.fps) + "\n";
    out += "# markers " + std::to_string(clip.markers()) + "\n";
    out += "# frames " + std::to_string(clip.frames()) + "\n";
    out += "# root_relative " + std::string(clip.root_relative ? "1" : "0") + "\n";
    if (!clip.source.empty()) out += "# source " + clip.source + "\n";
    const std::size_t width = clip.markers() * 3;
    for (std::size_t t = 0; t < clip.frames(); ++t) {
        for (std::size_t i = 0; i < width; ++i) {
            out += format_double(clip.positions[t * width + i]);
            out += ' ';
        }
        for (std::size_t k = 0; k < kControlChannels; ++k) {
            out += format_double(clip.controls[t * kControlChannels + k]);
            out += k + 1 < kControlChannels ? ' ' : '\n';
        }
    }
    return out;
}

MotionClip load_clip(const std::filesystem::path& path, ClipFormat format, std::size_t expected_markers) {
    const std::string bytes = read_file(path);
    try {
        return resolve(path, format) == ClipFormat::Binary ? parse_binary(bytes, expected_markers)
                                                           : parse_clip_text(bytes, expected_markers);
    } catch (const IoError& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

void save_clip(const std::filesystem::path& path, const MotionClip& clip, ClipFormat format) {
    validate(clip);
    const std::string bytes = resolve(path, format) == ClipFormat::Binary ? format_binary(clip) : format_clip_text(clip);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write clip '" + path.string() + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing clip '" + path.string() + "'");
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t hash) {
    for (unsigned char c : bytes) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

std::uint64_t checksum(const MotionClip& clip) {
    const auto* p = reinterpret_cast<const char*>(clip.positions.data());
    const auto* c = reinterpret_cast<const char*>(clip.controls.data());
    const std::uint64_t h = fnv1a({p, clip.positions.size() * sizeof(double)});
    return fnv1a({c, clip.controls.size() * sizeof(double)}, h);
}

MotionClip reverse(const MotionClip& clip) {
    const std::size_t t_len = clip.frames(), m = clip.markers();
    MotionClip out = clip;
    for (std::size_t t = 0; t < t_len; ++t) {
        const std::size_t src = t_len - 1 - t;
        std::copy_n(clip.positions.data() + src * m * 3, m * 3, out.positions.data() + t * m * 3);
        for (std::size_t k = 0; k < kControlChannels; ++k) {
            out.controls[t * kControlChannels + k] = -clip.controls[src * kControlChannels + k];
        }
    }
    return out;
}

MotionClip mirror(const MotionClip& clip, const skel::SkeletonSpec& skeleton) {
    GFLOW_CHECK(!skeleton.mirror_pairs.empty(), ConfigError, "skeleton has no mirror map");
    GFLOW_CHECK(skeleton.marker_count == clip.markers(), ShapeError, "skeleton/clip marker count mismatch");
    const auto perm = skel::mirror_permutation(skeleton);
    const std::size_t t_len = clip.frames(), m = clip.markers();
    MotionClip out = clip;
    for (std::size_t t = 0; t < t_len; ++t) {
        for (std::size_t i = 0; i < m; ++i) {
            const double* src = clip.positions.data() + (t * m + i) * 3;
            double* dst = out.positions.data() + (t * m + perm[i]) * 3;
            dst[0] = -src[0];
            dst[1] = src[1];
            dst[2] = src[2];
        }
        out.controls[t * kControlChannels + kSideways] = -clip.controls[t * kControlChannels + kSideways];
        out.controls[t * kControlChannels + kRotation] = -clip.controls[t * kControlChannels + kRotation];
    }
    return out;
}

}  // namespace gflow::data
