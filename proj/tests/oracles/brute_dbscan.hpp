// Copyright 2026 The Navi Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Test-only reference DBSCAN: O(n^2) pairwise distances, textbook
// breadth-first expansion, no spatial index.

#include <array>
#include <deque>
#include <map>
#include <vector>

namespace navi::oracle {

using P3 = std::array<double, 3>;

inline std::vector<int> brute_dbscan(const std::vector<P3>& pts, double eps, int min_pts) {
  const std::size_t n = pts.size();
  auto close = [&](std::size_t a, std::size_t b) {
    double s = 0.0;
    for (int k = 0; k < 3; ++k) {
      const double d = pts[a][k] - pts[b][k];
      s += d * d;
    }
    return s <= eps * eps;
  };
  std::vector<std::vector<std::size_t>> nbrs(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (close(i, j)) nbrs[i].push_back(j);
    }
  }
  constexpr int kUnvisited = -2;
  constexpr int kNoise = -1;
  std::vector<int> label(n, kUnvisited);
  int next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (label[i] != kUnvisited) continue;
    if (static_cast<int>(nbrs[i].size()) < min_pts) {
      label[i] = kNoise;
      continue;
    }
    const int c = next++;
    label[i] = c;
    std::deque<std::size_t> queue(nbrs[i].begin(), nbrs[i].end());
    while (!queue.empty()) {
      const std::size_t j = queue.front();
      queue.pop_front();
      if (label[j] == kNoise) label[j] = c;  // border point
      if (label[j] != kUnvisited) continue;
      label[j] = c;
      if (static_cast<int>(nbrs[j].size()) >= min_pts) {
        queue.insert(queue.end(), nbrs[j].begin(), nbrs[j].end());
      }
    }
  }
  return label;
}

/// True when both labelings describe the same partition with the same noise
/// set, allowing any bijective renaming of cluster ids.
inline bool same_up_to_permutation(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) return false;
  std::map<int, int> ab;
  std::map<int, int> ba;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if ((a[i] < 0) != (b[i] < 0)) return false;
    if (a[i] < 0) continue;
    auto [it1, new1] = ab.emplace(a[i], b[i]);
    auto [it2, new2] = ba.emplace(b[i], a[i]);
    if (it1->second != b[i] || it2->second != a[i]) return false;
  }
  return true;
}

}  // namespace navi::oracle
