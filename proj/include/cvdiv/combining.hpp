// SPDX-License-Identifier: Apache-2.0
//
// cvdiv: diversity-assisted Earth-to-satellite CV quantum link simulation
// Copyright (C) 2026 The cvdiv authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

// Beam-splitter networks for M-way splitting and coherent recombination.

#include "cvdiv/gaussian.hpp"

#include <cmath>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cvdiv {

/// One beam splitter B(etas[eta_index]) on group ports (retained, merged).
/// The retained port keeps the transmitted output; the other output of the
/// merged port is discarded.
struct CombinerStep {
  std::size_t retained = 0;
  std::size_t merged = 0;
  std::size_t eta_index = 0;
};

enum class TreeLayout { balanced, chain };

/// Immutable combining plan over M group-local ports.
class CombinerTree {
 public:
  CombinerTree(std::size_t m, std::vector<double> etas, std::vector<CombinerStep> steps)
      : m_(m), etas_(std::move(etas)), steps_(std::move(steps)) {
    if (m_ == 0) throw std::invalid_argument("CombinerTree: M must be >= 1");
    if (etas_.size() != m_ - 1 || steps_.size() != m_ - 1)
      throw std::invalid_argument("CombinerTree: need exactly M-1 etas and steps");
    for (double e : etas_)
      if (!(e >= 0.0 && e <= 1.0)) throw std::domain_error("CombinerTree: eta outside [0, 1]");
    std::vector<bool> gone(m_, false), used(m_ - 1, false);
    for (const auto& st : steps_) {
      if (st.retained >= m_ || st.merged >= m_ || st.retained == st.merged)
        throw std::invalid_argument("CombinerTree: step ports must be distinct and < M");
      if (gone[st.retained] || gone[st.merged])
        throw std::invalid_argument("CombinerTree: step uses a port that was already merged");
      if (st.eta_index >= m_ - 1 || used[st.eta_index])
        throw std::invalid_argument("CombinerTree: each eta must be used by exactly one step");
      used[st.eta_index] = true;
      gone[st.merged] = true;
    }
    for (std::size_t p = 0; p < m_; ++p)
      if (!gone[p]) output_port_ = p;
  }

  std::size_t M() const { return m_; }
  const std::vector<double>& etas() const { return etas_; }
  const std::vector<CombinerStep>& steps() const { return steps_; }
  /// The port that carries the combined signal.
  std::size_t output_port() const { return output_port_; }

 private:
  std::size_t m_;
  std::vector<double> etas_;
  std::vector<CombinerStep> steps_;
  std::size_t output_port_ = 0;
};

namespace detail {
inline void build_balanced(std::size_t lo, std::size_t n, std::vector<double>& etas,
                           std::vector<CombinerStep>& steps) {
  if (n <= 1) return;
  const std::size_t left = (n + 1) / 2;
  build_balanced(lo, left, etas, steps);
  build_balanced(lo + left, n - left, etas, steps);
  steps.push_back({lo, lo + left, etas.size()});
  etas.push_back(std::sqrt(static_cast<double>(left) / static_cast<double>(n)));
}
}  // namespace detail

/// Equal-weight 1/sqrt(M) combiner. The balanced layout pairs halves
/// recursively (left half rounded up); at M=3 it is the chain
/// [1/sqrt2, sqrt(2/3)] and at M=4 the two-level tree with every eta 1/sqrt2.
inline CombinerTree equal_weight_tree(std::size_t m, TreeLayout layout = TreeLayout::balanced) {
  if (m == 0) throw std::invalid_argument("equal_weight_tree: M must be >= 1");
  std::vector<double> etas;
  std::vector<CombinerStep> steps;
  if (layout == TreeLayout::balanced) {
    detail::build_balanced(0, m, etas, steps);
  } else {
    for (std::size_t l = 1; l < m; ++l) {
      steps.push_back({0, l, l - 1});
      etas.push_back(std::sqrt(static_cast<double>(l) / static_cast<double>(l + 1)));
    }
  }
  return {m, std::move(etas), std::move(steps)};
}

/// Same topology as `layout` but with caller-chosen etas.
inline CombinerTree tree_with_etas(std::vector<double> etas, TreeLayout layout = TreeLayout::balanced) {
  const CombinerTree shape = equal_weight_tree(etas.size() + 1, layout);
  return {shape.M(), std::move(etas), shape.steps()};
}

/// Real orthogonal M x M matrix of the network; row output_port() holds the
/// combining weights.
inline std::vector<std::vector<double>> network_matrix(const CombinerTree& tree) {
  const std::size_t m = tree.M();
  std::vector<std::vector<double>> u(m, std::vector<double>(m, 0.0));
  for (std::size_t p = 0; p < m; ++p) u[p][p] = 1.0;
  for (const auto& st : tree.steps()) {
    const double eta = tree.etas()[st.eta_index];
    const double r = std::sqrt(1.0 - eta * eta);
    for (std::size_t c = 0; c < m; ++c) {
      const double a = u[st.retained][c], b = u[st.merged][c];
      u[st.retained][c] = eta * a + r * b;
      u[st.merged][c] = r * a - eta * b;
    }
  }
  return u;
}

/// Per-port amplitude weight of the retained output mode.
inline std::vector<double> combine_weights(const CombinerTree& tree) {
  return network_matrix(tree)[tree.output_port()];
}

/// Position of the combined mode after apply_combiner.
inline std::size_t combined_mode_index(std::span<const std::size_t> modes, const CombinerTree& tree) {
  const std::size_t out = modes[tree.output_port()];
  std::size_t removed_before = 0;
  for (std::size_t p = 0; p < modes.size(); ++p)
    if (p != tree.output_port() && modes[p] < out) ++removed_before;
  return out - removed_before;
}

/// Runs the network on global modes `modes` (port p -> modes[p]) and traces
/// the unused ports. Remaining modes keep their relative order.
inline GaussianState apply_combiner(const GaussianState& s, std::span<const std::size_t> modes,
                                    const CombinerTree& tree) {
  if (modes.size() != tree.M())
    throw std::invalid_argument("apply_combiner: expected " + std::to_string(tree.M()) + " modes, got " +
                                std::to_string(modes.size()));
  std::vector<bool> seen(s.n_modes(), false);
  for (std::size_t m : modes) {
    if (m >= s.n_modes()) throw std::invalid_argument("apply_combiner: mode index out of range");
    if (seen[m]) throw std::invalid_argument("apply_combiner: duplicate mode index");
    seen[m] = true;
  }
  if (tree.M() == 1) return s;
  GaussianState out = s;
  for (const auto& st : tree.steps())
    out = apply_beam_splitter(out, modes[st.retained], modes[st.merged], tree.etas()[st.eta_index]);
  std::vector<std::size_t> discard;
  for (std::size_t p = 0; p < modes.size(); ++p)
    if (p != tree.output_port()) discard.push_back(modes[p]);
  return trace_out(out, discard);
}

inline GaussianState apply_combiner(const GaussianState& s, std::initializer_list<std::size_t> modes,
                                    const CombinerTree& tree) {
  return apply_combiner(s, std::span<const std::size_t>(modes.begin(), modes.size()), tree);
}

/// Replaces `mode` by M contiguous modes, port p carrying weight w_p of the
/// input (vacuum ancillas fill the rest). apply_combiner with the same tree
/// on those modes is its exact inverse.
inline GaussianState split_equally(const GaussianState& s, std::size_t mode, const CombinerTree& tree) {
  if (mode >= s.n_modes()) throw std::invalid_argument("split_equally: mode index out of range");
  const std::size_t m = tree.M();
  if (m == 1) return s;
  const std::size_t n = s.n_modes();
  GaussianState out = direct_sum(s, make_vacuum(m - 1));
  std::vector<std::size_t> port_mode(m);
  for (std::size_t p = 0, next = n; p < m; ++p) port_mode[p] = (p == tree.output_port()) ? mode : next++;
  const auto& steps = tree.steps();
  for (auto it = steps.rbegin(); it != steps.rend(); ++it)
    out = apply_beam_splitter(out, port_mode[it->retained], port_mode[it->merged], tree.etas()[it->eta_index]);
  std::vector<std::size_t> order;
  order.reserve(n + m - 1);
  for (std::size_t i = 0; i < mode; ++i) order.push_back(i);
  for (std::size_t p = 0; p < m; ++p) order.push_back(port_mode[p]);
  for (std::size_t i = mode + 1; i < n; ++i) order.push_back(i);
  return permute_modes(out, order);
}

inline GaussianState split_equally(const GaussianState& s, std::size_t mode, std::size_t m) {
  return split_equally(s, mode, equal_weight_tree(m));
}

}  // namespace cvdiv
