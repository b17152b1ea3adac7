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

#include "cvdiv/entanglement.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

using namespace cvdiv;
using Catch::Approx;

namespace {

std::vector<ChannelRealization> random_draws(RandomStream& rng, std::size_t m) {
  std::vector<ChannelRealization> d(m);
  for (auto& r : d) {
    r.transmissivity = rng.uniform();
    r.excess_noise = 0.1 * rng.uniform();
  }
  return d;
}

ChannelStatistics two_point(double t_lo, double p_lo, double eps_tx) {
  ChannelStatistics st;
  const double s = p_lo * std::sqrt(t_lo) + (1 - p_lo) * 1.0;
  st.mean_T = p_lo * t_lo + (1 - p_lo);
  st.mean_sqrtT = s;
  st.var_sqrtT = st.mean_T - s * s;
  st.mean_eps = st.mean_T * eps_tx;
  return st;
}

}  // namespace

TEST_CASE("conditional CM examples", "[entanglement]") {
  const double vs = 4.0;
  const std::vector<ChannelRealization> ideal(3, {1.0, 0.0});
  const auto pure = conditional_cm(vs, ideal);
  CHECK(pure.a == vs);
  CHECK(pure.b == Approx(vs));
  CHECK(pure.c == Approx(std::sqrt(vs * vs - 1)));

  const std::vector<ChannelRealization> one{{0.3, 0.02}};
  CHECK(conditional_cm(vs, one).b == Approx(0.3 * (vs - 1) + 1 + 0.02));

  const std::vector<ChannelRealization> two{{1.0, 0.0}, {0.25, 0.0}};
  const auto cm = conditional_cm(3.0, two);
  CHECK(cm.c == Approx(2.1213203436));
  CHECK(cm.b == Approx(2.125));
  const auto pipe = conditional_cm_pipeline(3.0, two, equal_weight_tree(2));
  CHECK(pipe.b == Approx(cm.b).epsilon(1e-12));
  CHECK(pipe.c == Approx(cm.c).epsilon(1e-12));

  CHECK_THROWS_AS(conditional_cm(3.0, two, equal_weight_tree(3)), std::invalid_argument);
  CHECK_THROWS_AS(conditional_cm(0.5, two), std::domain_error);
}

TEST_CASE("conditional CM equals the explicit Gaussian pipeline", "[entanglement][property]") {
  RandomStream rng(2024, StreamKind::channel, 0, 0);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t m = 1 + rng.below(6);
    const double vs = 1.0 + 19.0 * rng.uniform();
    const auto draws = random_draws(rng, m);
    std::vector<double> etas(m - 1);
    for (auto& e : etas) e = rng.uniform();
    for (const auto& tree : {equal_weight_tree(m), tree_with_etas(etas, TreeLayout::chain)}) {
      const auto f = conditional_cm(vs, draws, tree);
      const auto p = conditional_cm_pipeline(vs, draws, tree);
      REQUIRE(std::abs(f.b - p.b) < 1e-10);
      REQUIRE(std::abs(f.c - p.c) < 1e-10);
      REQUIRE(std::abs(f.a - p.a) < 1e-10);
    }
  }
}

TEST_CASE("averaged CM", "[entanglement]") {
  const auto st = compute_stats(std::vector<double>{0.25, 1.0}, 0.03);
  const auto cm = averaged_cm_analytic(3.0, st, 2);
  CHECK(cm.b == Approx(2.20625));
  CHECK(cm.c == Approx(0.75 * std::sqrt(8.0)));

  ChannelStatistics flat;
  flat.mean_sqrtT = std::sqrt(0.4);
  flat.mean_T = 0.4;
  flat.mean_eps = 0.012;
  const auto a = averaged_cm_analytic(5.0, flat, 3);
  CHECK(a.b == Approx(0.4 * 4 + 1 + 0.012));

  const auto m1 = averaged_cm_analytic(5.0, st, 1);
  CHECK(m1.b == Approx(st.T_eff() * 4 + st.var_sqrtT * 4 + st.mean_eps + 1));

  const auto fixed = fixed_sampler({0.36, 0.01});
  const auto tree = equal_weight_tree(3);
  const auto mc = averaged_cm_montecarlo(5.0, fixed, tree, 50, 1);
  const std::vector<ChannelRealization> d(3, {0.36, 0.01});
  const auto exact = conditional_cm(5.0, d, tree);
  CHECK(mc.cm.b == Approx(exact.b).epsilon(1e-14));
  CHECK(mc.cm.c == Approx(exact.c).epsilon(1e-14));
  CHECK(mc.standard_error.b == Approx(0.0).margin(1e-14));

  const auto ln = lognormal_sampler({3.0, 1.0});
  const auto single = averaged_cm_montecarlo(3.0, ln, equal_weight_tree(2), 1, 8);
  const auto draw = ln(2, 0, 8);
  CHECK(single.cm.b == conditional_cm(3.0, draw, equal_weight_tree(2)).b);
  CHECK_THROWS_AS(averaged_cm_montecarlo(3.0, ln, equal_weight_tree(2), 0, 8), std::invalid_argument);
}

TEST_CASE("Monte Carlo averaging is independent of the worker count", "[entanglement]") {
  const auto ln = lognormal_sampler({3.0, 1.0});
  const auto a = averaged_cm_montecarlo(9.0, ln, equal_weight_tree(4), 500, 3, 1);
  const auto b = averaged_cm_montecarlo(9.0, ln, equal_weight_tree(4), 500, 3, 4);
  CHECK(a.cm.b == b.cm.b);
  CHECK(a.cm.c == b.cm.c);
  CHECK(a.standard_error.b == b.standard_error.b);
}

TEST_CASE("log-negativity", "[entanglement]") {
  CHECK(log_negativity({1.0, 1.0, 0.0}) == 0.0);
  for (double vs : {2.0, 3.0, 9.0, 25.0}) {
    const auto pure = to_two_mode_cm(make_tmsv(vs));
    CHECK(log_negativity(pure) == Approx(-std::log2(vs - std::sqrt(vs * vs - 1))).epsilon(1e-12));
    CHECK(scaled_log_negativity(pure, vs) == Approx(1.0).epsilon(1e-12));
  }
  CHECK(tmsv_log_negativity(2.0) == Approx(1.8999686).epsilon(1e-7));
  CHECK(tmsv_log_negativity(9.0) == Approx(4.1654515).epsilon(1e-7));
  CHECK(scaled_log_negativity({3.0, 3.0, 0.0}, 3.0) == 0.0);
  CHECK_THROWS_AS(scaled_log_negativity({1.0, 1.0, 0.0}, 1.0), std::domain_error);
  CHECK_THROWS_AS(log_negativity({std::nan(""), 1.0, 0.0}), NumericError);
}

TEST_CASE("reverse coherent information", "[entanglement]") {
  CHECK(rci({1.0, 1.0, 0.0}) == Approx(0.0).margin(1e-15));
  CHECK(rci(to_two_mode_cm(make_tmsv(3.0))) == Approx(2.0).epsilon(1e-9));
  CHECK(entropy_g(3.0) == Approx(2.0));
  CHECK(entropy_g(1.0 - 1e-12) == 0.0);
  CHECK_THROWS_AS(entropy_g(0.9), NumericError);
  const auto noisy = averaged_cm_analytic(9.0, two_point(0.05, 0.5, 0.03), 1);
  CHECK(rci(noisy) < 0.0);
}

TEST_CASE("diversity helps with diminishing returns", "[entanglement][property]") {
  const auto ln = lognormal_moments({3.0, 1.0});
  for (const auto& st : {ln, two_point(0.1, 0.3, 0.03), two_point(0.02, 0.6, 0.03)})
    for (double vs : {2.0, 3.0, 5.0, 9.0, 20.0}) {
      double prev_e = -1, prev_r = -1e300, prev_gain = 1e300;
      for (std::size_t m = 1; m <= 12; ++m) {
        const auto cm = averaged_cm_analytic(vs, st, m);
        REQUIRE(is_physical(cm));
        const double e = log_negativity(cm), r = rci(cm);
        const double s = scaled_log_negativity(cm, vs);
        REQUIRE(s >= 0.0);
        REQUIRE(s <= 1.0 + 1e-12);
        REQUIRE(e >= prev_e - 1e-14);
        REQUIRE(r >= prev_r - 1e-14);
        if (m > 1 && prev_e > 0.0) {
          const double gain = e - prev_e;
          REQUIRE(gain <= prev_gain + 1e-12);
          prev_gain = gain;
        }
        prev_e = e;
        prev_r = r;
      }
    }
}

TEST_CASE("large M approaches the non-fading channel", "[entanglement][property]") {
  const auto st = two_point(0.2, 0.4, 0.03);
  ChannelStatistics flat = st;
  flat.var_sqrtT = 0.0;
  const double target = log_negativity(averaged_cm_analytic(7.0, flat, 1));
  const double far = log_negativity(averaged_cm_analytic(7.0, st, 1000000000));
  CHECK(std::abs(far - target) < 1e-6);
  double prev_gap = 1e300;
  for (std::size_t m : {1, 10, 100, 1000, 10000}) {
    const double gap = target - log_negativity(averaged_cm_analytic(7.0, st, m));
    CHECK(gap >= -1e-15);
    CHECK(gap <= prev_gap);
    prev_gap = gap;
  }
}

TEST_CASE("entanglement breaking at M=1 rescued at M=2", "[entanglement][property]") {
  bool found = false;
  for (double t_lo = 0.001; t_lo < 0.5 && !found; t_lo *= 1.5)
    for (double p = 0.05; p < 1.0 && !found; p += 0.05)
      for (double vs : {3.0, 5.0, 9.0}) {
        const auto st = two_point(t_lo, p, 0.03);
        const auto cm1 = averaged_cm_analytic(vs, st, 1), cm2 = averaged_cm_analytic(vs, st, 2);
        if (log_negativity(cm1) == 0.0 && log_negativity(cm2) > 0.0) {
          const double lhs1 = st.var_sqrtT * (vs - 1) + st.mean_eps;
          CHECK(lhs1 >= 2 * st.T_eff());
          CHECK(st.var_sqrtT * (vs - 1) / 2 + st.mean_eps < 2 * st.T_eff());
          found = true;
          break;
        }
      }
  CHECK(found);
}

TEST_CASE("strong log-normal fading breaks entanglement without diversity", "[entanglement]") {
  const auto st = lognormal_moments({37.6, 6.2});
  const double vs = 9.0;
  CHECK(log_negativity(averaged_cm_analytic(vs, st, 1)) == 0.0);
  CHECK(scaled_log_negativity(averaged_cm_analytic(vs, st, 1), vs) == 0.0);
}

TEST_CASE("RCI has an interior optimum in Vs", "[entanglement]") {
  const auto st = lognormal_moments({3.0, 1.0});
  for (std::size_t m : {2, 4, 6, 8}) {
    std::size_t best = 0;
    std::vector<double> r;
    for (double vs = 1.0; vs <= 30.0 + 1e-9; vs += 0.5) r.push_back(rci(averaged_cm_analytic(vs, st, m)));
    for (std::size_t i = 1; i < r.size(); ++i)
      if (r[i] > r[best]) best = i;
    CHECK(best > 0);
    CHECK(best + 1 < r.size());
  }
}

TEST_CASE("sweep shape and ordering", "[entanglement]") {
  EntanglementSweep sw;
  sw.label = "ln";
  sw.vs = {3, 5, 7, 9};
  sw.m = {1, 2, 3, 4};
  sw.stats = lognormal_moments({3.0, 1.0});
  const auto rows = sweep_entanglement(sw);
  REQUIRE(rows.size() == 16);
  CHECK(rows[0].M == 1);
  CHECK(rows[0].vs == 3);
  CHECK(rows[5].M == 2);
  CHECK(rows[5].vs == 5);
  sw.m.clear();
  CHECK(sweep_entanglement(sw).empty());

  EntanglementSweep mc = sw;
  mc.m = {2};
  mc.vs = {3};
  mc.sampler = lognormal_sampler({3.0, 1.0});
  mc.n_samples = 400;
  const auto r = sweep_entanglement(mc);
  REQUIRE(r.size() == 1);
  CHECK(r[0].n_samples == 400);
  CHECK(r[0].stderr_b > 0.0);
}
