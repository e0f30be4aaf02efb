// Copyright (c) 2026 The gflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gflow/kernels/kernels.hpp"
#include "gflow/numcore/tensor.hpp"

namespace gflow::skel {

struct Edge {
    std::size_t a = 0;
    std::size_t b = 0;
};

// Marker graph plus the bookkeeping the data and metric code needs: which
// marker is the root, which pair defines the heading, which markers are heels
// and how markers map under lateral mirroring.
struct SkeletonSpec {
    std::size_t marker_count = 0;
    std::vector<Edge> edges;
    std::size_t center = 0;
    std::size_t root = 0;
    std::array<std::size_t, 2> hips{0, 0};   // left, right
    std::array<std::size_t, 2> heels{0, 0};  // left, right
    std::vector<std::pair<std::size_t, std::size_t>> mirror_pairs;
    std::vector<double> bone_lengths;  // per edge, cm; empty when not given
    std::map<std::string, std::vector<std::size_t>> mask_groups;
    // Neighbours at the same distance from the centre go to the "closer"
    // subset when set; to "farther" otherwise.
    bool ties_closer = false;
    bool has_heels = false;
    bool has_hips = false;
};

// Parses the plain-text skeleton format (see data/skeleton21.cfg) and
// validates it. Throws ConfigError on unknown keywords, out-of-range indices,
// self loops or a disconnected graph.
SkeletonSpec parse_skeleton(std::string_view text);
SkeletonSpec load_skeleton(const std::filesystem::path& path);
std::string format_skeleton(const SkeletonSpec& spec);
void validate(const SkeletonSpec& spec);

// The shipped 21-marker skeleton.
const SkeletonSpec& default_skeleton();

// Marker permutation for lateral mirroring (identity for unpaired markers).
std::vector<std::size_t> mirror_permutation(const SkeletonSpec& spec);

// Shortest-path hop counts (breadth-first search); -1 marks unreachable pairs.
std::vector<std::vector<int>> hop_distances(const SkeletonSpec& spec);

// Spatial configuration partition of every node's R-hop neighbourhood into
// D = 2R + 1 subsets: subset 0 is the node itself; for ring r = 1..R subset
// 2r-1 holds ring-r neighbours strictly closer to the centre than the node
// and subset 2r the rest. Each subset matrix is row-normalized by the number
// of members the node has in that subset.
struct PartitionedAdjacency {
    std::size_t kernel_scale = 0;
    std::size_t hop_radius = 0;
    kernels::SubsetStack stack;

    std::size_t markers() const { return stack.markers; }
    num::Tensor dense(std::size_t subset) const;
    std::vector<std::size_t> members(std::size_t subset, std::size_t node) const;
};

PartitionedAdjacency partition(const SkeletonSpec& spec, std::size_t kernel_scale);

// Subset index l(i, j) of neighbour j for node i, or -1 if j lies outside
// the R-hop neighbourhood.
int subset_label(const std::vector<std::vector<int>>& hops, std::size_t center, std::size_t i,
                 std::size_t j, std::size_t hop_radius, bool ties_closer);

// Skeleton relabelled by a marker permutation: new index of old marker i is perm[i].
SkeletonSpec relabel(const SkeletonSpec& spec, const std::vector<std::size_t>& perm);

}  // namespace gflow::skel
