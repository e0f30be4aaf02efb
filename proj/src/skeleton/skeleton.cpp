// Copyright (c) 2026 The gflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "gflow/skeleton/skeleton.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <queue>
#include <set>
#include <sstream>

#include "gflow/default_skeleton_data.hpp"
#include "gflow/errors.hpp"

namespace gflow::skel {

namespace {

std::size_t parse_index(const std::string& tok, int line) {
    try {
        std::size_t pos = 0;
        const long v = std::stol(tok, &pos);
        if (pos != tok.size() || v < 0) throw std::invalid_argument(tok);
        return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
        throw ConfigError("skeleton line " + std::to_string(line) + ": expected a non-negative integer, got '" +
                          tok + "'");
    }
}

double parse_number(const std::string& tok, int line) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(tok, &pos);
        if (pos != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("skeleton line " + std::to_string(line) + ": expected a number, got '" + tok + "'");
    }
}

void check_index(std::size_t idx, std::size_t m, const std::string& what) {
    if (idx >= m) {
        throw ConfigError(what + " index " + std::to_string(idx) + " out of range for " + std::to_string(m) +
                          " markers");
    }
}

}  // namespace

void validate(const SkeletonSpec& spec) {
    const std::size_t m = spec.marker_count;
    if (m == 0) throw ConfigError("skeleton has no markers");
    check_index(spec.center, m, "center");
    check_index(spec.root, m, "root");
    std::set<std::pair<std::size_t, std::size_t>> seen;
    for (const Edge& e : spec.edges) {
        check_index(e.a, m, "edge");
        check_index(e.b, m, "edge");
        if (e.a == e.b) throw ConfigError("self loop on marker " + std::to_string(e.a));
        if (!seen.insert(std::minmax(e.a, e.b)).second) {
            throw ConfigError("duplicate edge " + std::to_string(e.a) + "-" + std::to_string(e.b));
        }
    }
    if (spec.has_heels) {
        check_index(spec.heels[0], m, "heel");
        check_index(spec.heels[1], m, "heel");
        if (spec.heels[0] == spec.heels[1]) throw ConfigError("heel markers must be distinct");
    }
    if (spec.has_hips) {
        check_index(spec.hips[0], m, "hip");
        check_index(spec.hips[1], m, "hip");
        if (spec.hips[0] == spec.hips[1]) throw ConfigError("hip markers must be distinct");
    }
    std::set<std::size_t> mirrored;
    for (const auto& [a, b] : spec.mirror_pairs) {
        check_index(a, m, "mirror");
        check_index(b, m, "mirror");
        if (a == b || !mirrored.insert(a).second || !mirrored.insert(b).second) {
            throw ConfigError("mirror pairs must be disjoint pairs of distinct markers");
        }
    }
    if (!spec.bone_lengths.empty() && spec.bone_lengths.size() != spec.edges.size()) {
        throw ConfigError("bone length list does not match edge list");
    }
    for (const auto& [name, idx] : spec.mask_groups) {
        for (std::size_t i : idx) check_index(i, m, "mask group '" + name + "'");
    }
    const auto hops = hop_distances(spec);
    for (std::size_t j = 0; j < m; ++j) {
        if (hops[0][j] < 0) throw ConfigError("skeleton graph is disconnected (marker " + std::to_string(j) + ")");
    }
}

SkeletonSpec parse_skeleton(std::string_view text) {
    SkeletonSpec spec;
    bool have_markers = false, have_center = false;
    std::vector<std::tuple<std::size_t, std::size_t, double>> bones;
    std::istringstream in{std::string(text)};
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        if (auto hash = raw.find('#'); hash != std::string::npos) raw.resize(hash);
        std::istringstream ls(raw);
        std::vector<std::string> tok;
        for (std::string t; ls >> t;) tok.push_back(t);
        if (tok.empty()) continue;
        const std::string& key = tok[0];
        auto need = [&](std::size_t n) {
            if (tok.size() != n + 1) {
                throw ConfigError("skeleton line " + std::to_string(line) + ": '" + key + "' expects " +
                                  std::to_string(n) + " values");
            }
        };
        if (key == "markers") {
            need(1);
            spec.marker_count = parse_index(tok[1], line);
            have_markers = true;
        } else if (key == "center") {
            need(1);
            spec.center = parse_index(tok[1], line);
            have_center = true;
        } else if (key == "root") {
            need(1);
            spec.root = parse_index(tok[1], line);
        } else if (key == "heels") {
            need(2);
            spec.heels = {parse_index(tok[1], line), parse_index(tok[2], line)};
            spec.has_heels = true;
        } else if (key == "hips") {
            need(2);
            spec.hips = {parse_index(tok[1], line), parse_index(tok[2], line)};
            spec.has_hips = true;
        } else if (key == "edge") {
            need(2);
            spec.edges.push_back({parse_index(tok[1], line), parse_index(tok[2], line)});
        } else if (key == "bone") {
            need(3);
            bones.emplace_back(parse_index(tok[1], line), parse_index(tok[2], line), parse_number(tok[3], line));
        } else if (key == "mirror") {
            need(2);
            spec.mirror_pairs.emplace_back(parse_index(tok[1], line), parse_index(tok[2], line));
        } else if (key == "mask") {
            if (tok.size() < 3) throw ConfigError("skeleton line " + std::to_string(line) + ": mask needs a name and markers");
            std::vector<std::size_t> idx;
            for (std::size_t i = 2; i < tok.size(); ++i) idx.push_back(parse_index(tok[i], line));
            spec.mask_groups[tok[1]] = idx;
        } else if (key == "ties") {
            need(1);
            if (tok[1] != "closer" && tok[1] != "farther") {
                throw ConfigError("skeleton line " + std::to_string(line) + ": ties must be 'closer' or 'farther'");
            }
            spec.ties_closer = tok[1] == "closer";
        } else {
            throw ConfigError("skeleton line " + std::to_string(line) + ": unknown keyword '" + key + "'");
        }
    }
    if (!have_markers) throw ConfigError("skeleton config lacks 'markers'");
    if (!have_center) throw ConfigError("skeleton config lacks 'center'");
    if (!bones.empty()) {
        spec.bone_lengths.assign(spec.edges.size(), std::numeric_limits<double>::quiet_NaN());
        for (const auto& [a, b, len] : bones) {
            auto it = std::find_if(spec.edges.begin(), spec.edges.end(), [&](const Edge& e) {
                return (e.a == a && e.b == b) || (e.a == b && e.b == a);
            });
            if (it == spec.edges.end()) {
                throw ConfigError("bone " + std::to_string(a) + "-" + std::to_string(b) + " is not an edge");
            }
            spec.bone_lengths[static_cast<std::size_t>(it - spec.edges.begin())] = len;
        }
        if (std::any_of(spec.bone_lengths.begin(), spec.bone_lengths.end(), [](double v) { return std::isnan(v); })) {
            throw ConfigError("bone lengths must be given for every edge or none");
        }
    }
    validate(spec);
    return spec;
}

SkeletonSpec load_skeleton(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open skeleton file " + path.string());
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_skeleton(ss.str());
}

std::string format_skeleton(const SkeletonSpec& spec) {
    std::ostringstream os;
    os.precision(17);
    os << "markers " << spec.marker_count << "\ncenter " << spec.center << "\nroot " << spec.root << '\n';
    if (spec.has_hips) os << "hips " << spec.hips[0] << ' ' << spec.hips[1] << '\n';
    if (spec.has_heels) os << "heels " << spec.heels[0] << ' ' << spec.heels[1] << '\n';
    if (spec.ties_closer) os << "ties closer\n";
    for (const Edge& e : spec.edges) os << "edge " << e.a << ' ' << e.b << '\n';
    for (std::size_t i = 0; i < spec.bone_lengths.size(); ++i) {
        os << "bone " << spec.edges[i].a << ' ' << spec.edges[i].b << ' ' << spec.bone_lengths[i] << '\n';
    }
    for (const auto& [a, b] : spec.mirror_pairs) os << "mirror " << a << ' ' << b << '\n';
    for (const auto& [name, idx] : spec.mask_groups) {
        os << "mask " << name;
        for (std::size_t i : idx) os << ' ' << i;
        os << '\n';
    }
    return os.str();
}

const SkeletonSpec& default_skeleton() {
    static const SkeletonSpec spec = parse_skeleton(kDefaultSkeletonText);
    return spec;
}

std::vector<std::size_t> mirror_permutation(const SkeletonSpec& spec) {
    std::vector<std::size_t> perm(spec.marker_count);
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    for (const auto& [a, b] : spec.mirror_pairs) {
        perm[a] = b;
        perm[b] = a;
    }
    return perm;
}

std::vector<std::vector<int>> hop_distances(const SkeletonSpec& spec) {
    const std::size_t m = spec.marker_count;
    std::vector<std::vector<std::size_t>> adj(m);
    for (const Edge& e : spec.edges) {
        adj[e.a].push_back(e.b);
        adj[e.b].push_back(e.a);
    }
    std::vector<std::vector<int>> dist(m, std::vector<int>(m, -1));
    for (std::size_t s = 0; s < m; ++s) {
        std::queue<std::size_t> q;
        dist[s][s] = 0;
        q.push(s);
        while (!q.empty()) {
            const std::size_t u = q.front();
            q.pop();
            for (std::size_t v : adj[u]) {
                if (dist[s][v] < 0) {
                    dist[s][v] = dist[s][u] + 1;
                    q.push(v);
                }
            }
        }
    }
    return dist;
}

int subset_label(const std::vector<std::vector<int>>& hops, std::size_t center, std::size_t i, std::size_t j,
                 std::size_t hop_radius, bool ties_closer) {
    const int r = hops[i][j];
    if (r < 0 || r > static_cast<int>(hop_radius)) return -1;
    if (r == 0) return 0;
    const int di = hops[center][i];
    const int dj = hops[center][j];
    const bool closer = ties_closer ? dj <= di : dj < di;
    return closer ? 2 * r - 1 : 2 * r;
}

PartitionedAdjacency partition(const SkeletonSpec& spec, std::size_t kernel_scale) {
    if (kernel_scale < 3 || kernel_scale % 2 == 0) {
        throw ConfigError("kernel scale must be odd and >= 3, got " + std::to_string(kernel_scale));
    }
    const std::size_t m = spec.marker_count;
    PartitionedAdjacency out;
    out.kernel_scale = kernel_scale;
    out.hop_radius = (kernel_scale - 1) / 2;
    out.stack.markers = m;
    const auto hops = hop_distances(spec);

    std::vector<std::vector<std::vector<std::size_t>>> members(kernel_scale, std::vector<std::vector<std::size_t>>(m));
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            const int label = subset_label(hops, spec.center, i, j, out.hop_radius, spec.ties_closer);
            if (label >= 0) members[static_cast<std::size_t>(label)][i].push_back(j);
        }
    }
    for (std::size_t k = 0; k < kernel_scale; ++k) {
        kernels::SparseRows a;
        a.rows = m;
        a.cols = m;
        a.row_ptr.push_back(0);
        for (std::size_t i = 0; i < m; ++i) {
            const auto& js = members[k][i];
            for (std::size_t j : js) {
                a.col.push_back(j);
                a.weight.push_back(1.0 / static_cast<double>(js.size()));
            }
            a.row_ptr.push_back(a.col.size());
        }
        out.stack.subsets_t.push_back(a.transposed());
        out.stack.subsets.push_back(std::move(a));
    }
    return out;
}

num::Tensor PartitionedAdjacency::dense(std::size_t subset) const {
    const auto& a = stack.subsets.at(subset);
    num::Tensor d = num::Tensor::matrix(a.rows, a.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        for (std::size_t e = a.row_ptr[i]; e < a.row_ptr[i + 1]; ++e) d.at(i, a.col[e]) = a.weight[e];
    }
    return d;
}

std::vector<std::size_t> PartitionedAdjacency::members(std::size_t subset, std::size_t node) const {
    const auto& a = stack.subsets.at(subset);
    return {a.col.begin() + static_cast<long>(a.row_ptr[node]), a.col.begin() + static_cast<long>(a.row_ptr[node + 1])};
}

SkeletonSpec relabel(const SkeletonSpec& spec, const std::vector<std::size_t>& perm) {
    if (perm.size() != spec.marker_count) throw ConfigError("relabel: permutation size mismatch");
    SkeletonSpec out = spec;
    for (auto& e : out.edges) e = {perm[e.a], perm[e.b]};
    out.center = perm[spec.center];
    out.root = perm[spec.root];
    out.hips = {perm[spec.hips[0]], perm[spec.hips[1]]};
    out.heels = {perm[spec.heels[0]], perm[spec.heels[1]]};
    for (auto& [a, b] : out.mirror_pairs) {
        a = perm[a];
        b = perm[b];
    }
    for (auto& [name, idx] : out.mask_groups) {
        for (auto& i : idx) i = perm[i];
    }
    return out;
}

}  // namespace gflow::skel
