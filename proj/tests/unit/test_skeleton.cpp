// Copyright (c) 2026 The gflow Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <set>
#include <vector>

#include "gflow/errors.hpp"
#include "gflow/numcore/linalg.hpp"
#include "gflow/numcore/random.hpp"
#include "gflow/skeleton/skeleton.hpp"
#include "support/fixtures.hpp"

using namespace gflow;
using Members = std::vector<std::size_t>;

namespace {

std::vector<std::vector<int>> floyd_warshall(const skel::SkeletonSpec& spec) {
    const int inf = 1 << 20;
    const std::size_t m = spec.marker_count;
    std::vector<std::vector<int>> d(m, std::vector<int>(m, inf));
    for (std::size_t i = 0; i < m; ++i) d[i][i] = 0;
    for (const auto& e : spec.edges) d[e.a][e.b] = d[e.b][e.a] = 1;
    for (std::size_t k = 0; k < m; ++k) {
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < m; ++j) d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
        }
    }
    return d;
}

// Every (node, neighbour) pair classified from scratch by ring and by
// comparing distances to the centre; ties go to "farther".
std::vector<std::vector<Members>> enumerate_subsets(const skel::SkeletonSpec& spec, std::size_t d) {
    const auto dist = floyd_warshall(spec);
    const int radius = static_cast<int>((d - 1) / 2);
    std::vector<std::vector<Members>> out(d, std::vector<Members>(spec.marker_count));
    for (std::size_t i = 0; i < spec.marker_count; ++i) {
        for (std::size_t j = 0; j < spec.marker_count; ++j) {
            const int r = dist[i][j];
            if (r > radius) continue;
            std::size_t label = 0;
            if (r > 0) {
                const bool closer = dist[spec.center][j] < dist[spec.center][i];
                label = closer ? static_cast<std::size_t>(2 * r - 1) : static_cast<std::size_t>(2 * r);
            }
            out[label][i].push_back(j);
        }
    }
    return out;
}

skel::SkeletonSpec random_connected_graph(num::Rng& rng) {
    std::uniform_int_distribution<std::size_t> size(3, 10);
    const std::size_t m = size(rng);
    std::string text = "markers " + std::to_string(m) + "\n";
    std::set<std::pair<std::size_t, std::size_t>> edges;
    for (std::size_t v = 1; v < m; ++v) {
        std::uniform_int_distribution<std::size_t> parent(0, v - 1);
        edges.insert({parent(rng), v});
    }
    std::uniform_int_distribution<std::size_t> any(0, m - 1);
    for (int extra = 0; extra < 3; ++extra) {
        const std::size_t a = any(rng), b = any(rng);
        if (a != b) edges.insert(std::minmax(a, b));
    }
    for (const auto& [a, b] : edges) text += "edge " + std::to_string(a) + " " + std::to_string(b) + "\n";
    text += "center " + std::to_string(any(rng)) + "\n";
    return skel::parse_skeleton(text);
}

void check_against_oracle(const skel::SkeletonSpec& spec, std::size_t d) {
    const auto adjacency = skel::partition(spec, d);
    const auto expected = enumerate_subsets(spec, d);
    for (std::size_t k = 0; k < d; ++k) {
        for (std::size_t i = 0; i < spec.marker_count; ++i) {
            CHECK(adjacency.members(k, i) == expected[k][i]);
        }
    }
}

}  // namespace

TEST_SUITE("skeleton") {
    TEST_CASE("default skeleton has 21 markers centred on the chest") {
        const auto& s = skel::default_skeleton();
        CHECK(s.marker_count == 21);
        CHECK(s.center == 10);
        CHECK(s.edges.size() == 20);
        CHECK(s.has_heels);
        CHECK(s.mask_groups.at("right_arm") == Members{18, 19, 20});
        CHECK(s.mask_groups.at("left_leg") == Members{2, 3, 4});
    }

    TEST_CASE("marker 0 neighbourhood splits into self, closer and farther subsets") {
        const auto a = skel::partition(skel::default_skeleton(), 3);
        CHECK(a.members(0, 0) == Members{0});
        CHECK(a.members(1, 0) == Members{9});
        CHECK(a.members(2, 0) == Members{1, 5});
    }

    TEST_CASE("build errors") {
        CHECK_NOTHROW(skel::parse_skeleton("markers 2\ncenter 0\nedge 0 1\n"));
        std::string bad = "markers 21\ncenter 10\n";
        for (int i = 0; i < 20; ++i) bad += "edge " + std::to_string(i) + " " + std::to_string(i + 1) + "\n";
        CHECK_NOTHROW(skel::parse_skeleton(bad));
        CHECK_THROWS_AS(skel::parse_skeleton(bad + "edge 3 21\n"), ConfigError);
        CHECK_THROWS_AS(skel::parse_skeleton("markers 3\ncenter 0\nedge 0 1\n"), ConfigError);
        CHECK_THROWS_AS(skel::parse_skeleton("markers 2\ncenter 0\nedge 1 1\nedge 0 1\n"), ConfigError);
        CHECK_THROWS_AS(skel::parse_skeleton("markers 2\ncenter 2\nedge 0 1\n"), ConfigError);
        CHECK_THROWS_AS(skel::parse_skeleton("markers 2\ncenter 0\nedge 0 1\nheels 1 1\n"), ConfigError);
        CHECK_THROWS_AS(skel::parse_skeleton("markers 2\ncenter 0\nlink 0 1\n"), ConfigError);
        CHECK_THROWS_AS(skel::parse_skeleton("center 0\n"), ConfigError);
        CHECK_THROWS_AS(skel::load_skeleton("/nonexistent/skeleton.cfg"), IoError);
    }

    TEST_CASE("hop distances") {
        const auto chain = testing::chain_skeleton(3, 1);
        const auto d = skel::hop_distances(chain);
        CHECK(d[0][2] == 2);
        const auto& s = skel::default_skeleton();
        const auto bfs = skel::hop_distances(s);
        const auto fw = floyd_warshall(s);
        for (std::size_t i = 0; i < s.marker_count; ++i) {
            CHECK(bfs[i][i] == 0);
            for (std::size_t j = 0; j < s.marker_count; ++j) {
                CHECK(bfs[i][j] == fw[i][j]);
                CHECK(bfs[i][j] == bfs[j][i]);
            }
        }
    }

    TEST_CASE("single node has only the self subset") {
        const auto s = skel::parse_skeleton("markers 1\ncenter 0\n");
        const auto a = skel::partition(s, 3);
        CHECK(a.members(0, 0) == Members{0});
        CHECK(a.members(1, 0).empty());
        CHECK(a.members(2, 0).empty());
    }

    TEST_CASE("5-chain with kernel scale 5 matches the hand enumeration") {
        const auto a = skel::partition(testing::chain_skeleton(5, 2), 5);
        // expected[node][subset]; centre distances are 2 1 0 1 2.
        const std::vector<std::vector<Members>> expected = {
            {{0}, {1}, {}, {2}, {}},
            {{1}, {2}, {0}, {}, {3}},
            {{2}, {}, {1, 3}, {}, {0, 4}},
            {{3}, {2}, {4}, {}, {1}},
            {{4}, {3}, {}, {2}, {}},
        };
        for (std::size_t i = 0; i < 5; ++i) {
            for (std::size_t k = 0; k < 5; ++k) CHECK(a.members(k, i) == expected[i][k]);
        }
    }

    TEST_CASE("ties can be assigned to the closer subset") {
        auto s = testing::chain_skeleton(5, 2);
        s.ties_closer = true;
        const auto a = skel::partition(s, 5);
        CHECK(a.members(3, 1) == Members{3});
        CHECK(a.members(4, 1).empty());
    }

    TEST_CASE("partition matches exhaustive enumeration on random graphs") {
        num::Rng rng = num::make_rng(41);
        for (int g = 0; g < 10; ++g) {
            const auto spec = random_connected_graph(rng);
            for (std::size_t d : {3, 5, 7}) check_against_oracle(spec, d);
        }
        for (std::size_t d : {3, 5, 7}) check_against_oracle(skel::default_skeleton(), d);
    }

    TEST_CASE("subsets partition each neighbourhood") {
        const auto& s = skel::default_skeleton();
        const auto hops = skel::hop_distances(s);
        for (std::size_t d : {3, 5, 7, 9}) {
            const auto a = skel::partition(s, d);
            CHECK(a.hop_radius == (d - 1) / 2);
            for (std::size_t i = 0; i < s.marker_count; ++i) {
                std::multiset<std::size_t> seen;
                for (std::size_t k = 0; k < d; ++k) {
                    for (std::size_t j : a.members(k, i)) seen.insert(j);
                }
                std::multiset<std::size_t> expected;
                for (std::size_t j = 0; j < s.marker_count; ++j) {
                    if (hops[i][j] <= static_cast<int>(a.hop_radius)) expected.insert(j);
                }
                CHECK(seen == expected);
            }
        }
    }

    TEST_CASE("subset matrices are row-normalized") {
        const auto& s = skel::default_skeleton();
        const auto a = skel::partition(s, 5);
        for (std::size_t k = 0; k < 5; ++k) {
            const num::Tensor dense = a.dense(k);
            const num::Tensor ones({s.marker_count, 1}, 3.5);
            const num::Tensor y = num::matmul(dense, ones);
            for (std::size_t i = 0; i < s.marker_count; ++i) {
                const bool nonempty = !a.members(k, i).empty();
                CHECK(std::abs(y[i] - (nonempty ? 3.5 : 0.0)) < 1e-12);
            }
        }
    }

    TEST_CASE("partition rejects even or too small kernel scales") {
        CHECK_THROWS_AS(skel::partition(skel::default_skeleton(), 4), ConfigError);
        CHECK_THROWS_AS(skel::partition(skel::default_skeleton(), 1), ConfigError);
    }

    TEST_CASE("relabelling permutes every subset matrix") {
        const auto& s = skel::default_skeleton();
        num::Rng rng = num::make_rng(42);
        std::vector<std::size_t> perm(s.marker_count);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        const auto r = skel::relabel(s, perm);
        for (std::size_t d : {3, 5, 7}) {
            const auto a = skel::partition(s, d);
            const auto b = skel::partition(r, d);
            for (std::size_t k = 0; k < d; ++k) {
                const num::Tensor da = a.dense(k), db = b.dense(k);
                for (std::size_t i = 0; i < s.marker_count; ++i) {
                    for (std::size_t j = 0; j < s.marker_count; ++j) CHECK(db.at(perm[i], perm[j]) == da.at(i, j));
                }
            }
        }
    }

    TEST_CASE("format and parse round trip") {
        auto text = skel::format_skeleton(skel::default_skeleton());
        const auto back = skel::parse_skeleton(text);
        CHECK(skel::format_skeleton(back) == text);
        const auto bones = skel::parse_skeleton("markers 3\ncenter 1\nedge 0 1\nedge 1 2\nbone 1 0 4.5\nbone 1 2 3\n");
        CHECK(bones.bone_lengths == std::vector<double>{4.5, 3.0});
        CHECK(skel::parse_skeleton(skel::format_skeleton(bones)).bone_lengths == bones.bone_lengths);
        CHECK_THROWS_AS(skel::parse_skeleton("markers 3\ncenter 1\nedge 0 1\nedge 1 2\nbone 0 1 4\n"), ConfigError);
    }

    TEST_CASE("mirror permutation is an involution") {
        const auto& s = skel::default_skeleton();
        const auto p = skel::mirror_permutation(s);
        for (std::size_t i = 0; i < p.size(); ++i) CHECK(p[p[i]] == i);
        CHECK(p[18] == 14);
        CHECK(p[10] == 10);
    }
}
