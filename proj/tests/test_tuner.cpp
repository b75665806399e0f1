// Copyright 2026 The edgefbg Authors. All Rights Reserved.
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

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "doctest.h"
#include "efbg/error.hpp"
#include "efbg/tuner.hpp"
#include "json.hpp"

using namespace efbg;

namespace {

// Deterministic pseudo-loss per (trial, epochs); more epochs help a little.
RungResult fake_result(std::size_t index, std::size_t epochs) {
  Rng rng = derived_rng(99, index);
  const double base = 1.0 + static_cast<double>(rng() % 1000) / 10.0;
  const double rmse = base / (1.0 + 0.01 * static_cast<double>(epochs));
  return {epochs, rmse / 3.0, rmse};
}

TrialRunner fake_runner(std::vector<std::pair<std::size_t, std::size_t>>* calls = nullptr,
                        std::set<std::size_t> diverge = {}) {
  return [calls, diverge](std::size_t index, const TrialConfig&, std::size_t epochs) {
    if (calls) calls->emplace_back(index, epochs);
    if (diverge.count(index)) fail(Errc::kDiverged, "synthetic divergence");
    return fake_result(index, epochs);
  };
}

std::vector<TrialConfig> configs(std::size_t n) {
  SearchSpace space;
  std::vector<TrialConfig> out;
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = derived_rng(5, i);
    out.push_back(sample_config(space, rng));
  }
  return out;
}

}  // namespace

TEST_CASE("sampled configs respect the space") {
  const SearchSpace space;
  Rng rng(17);
  std::set<int> n_convs;
  std::set<std::size_t> channels;
  for (int i = 0; i < 1000; ++i) {
    const auto c = sample_config(space, rng);
    const int n_conv = static_cast<int>(c.conv_channels.size());
    REQUIRE(n_conv >= 1);
    REQUIRE(n_conv <= 20);
    REQUIRE(c.n_fc >= 1);
    REQUIRE(c.n_fc <= 20);
    REQUIRE(c.smooth_l1_beta >= 0.0);
    REQUIRE(c.smooth_l1_beta <= 5.0);
    REQUIRE(c.dropout_rate >= 0.1);
    REQUIRE(c.dropout_rate <= 0.8);
    REQUIRE(space_contains(space, c));
    if (c.sort_conv) REQUIRE(std::is_sorted(c.conv_channels.begin(), c.conv_channels.end()));
    n_convs.insert(n_conv);
    channels.insert(c.conv_channels.begin(), c.conv_channels.end());
  }
  CHECK(n_convs.size() == 20);
  CHECK(channels == std::set<std::size_t>{16, 32, 64, 128, 256});

  Rng a(3), b(3);
  for (int i = 0; i < 20; ++i) CHECK(sample_config(space, a) == sample_config(space, b));
}

TEST_CASE("a degenerate space yields its only point") {
  const TrialConfig want = selected_trial_config();
  SearchSpace space;
  space.n_conv = {5, 5};
  space.n_fc = {5, 5};
  space.bn_per_layer = {true};
  space.dropout_after_fc = {true};
  space.dropout_rate = {0.37, 0.37};
  space.stride = {2};
  space.pool_kernel = {3};
  space.init_scheme = {nn::InitScheme::kXavierNormal};
  space.learning_rate = {1e-4};
  space.sort_conv = {true};
  space.l2 = {0.0};
  space.smooth_l1_beta = {4.04, 4.04};
  space.conv_channels = {16};
  Rng rng(1);
  auto got = sample_config(space, rng);
  CHECK(got.conv_channels == std::vector<std::size_t>(5, 16));
  got.conv_channels = want.conv_channels;
  CHECK(got == want);
}

TEST_CASE("the selected configuration is expressible and builds") {
  const SearchSpace space;
  const auto sel = selected_trial_config();
  CHECK(space_contains(space, sel));
  CHECK(sel.conv_channels.size() == 5);
  CHECK(sel.n_fc == 5);
  CHECK(sel.init_scheme == nn::InitScheme::kXavierNormal);
  CHECK(sel.learning_rate == 1e-4);
  CHECK(sel.l2 == 0.0);
  CHECK(sel.smooth_l1_beta == 4.04);
  const auto mc = sel.model_config();
  CHECK(mc.flatten_width() > 0);
  const auto tc = sel.train_config(nn::TrainConfig{});
  CHECK(tc.learning_rate == 1e-4);
  CHECK(tc.smooth_l1_beta == 4.04);

  // Deep stacks stop striding and pooling before the sequence vanishes.
  TrialConfig deep = sel;
  deep.conv_channels.assign(20, 16);
  deep.stride = 2;
  CHECK_NOTHROW(deep.model_config());
  nn::Model<float> m(deep.model_config(), 1);
  CHECK(m.parameter_count() > 0);
}

TEST_CASE("halving round arithmetic") {
  CHECK(halving_round_sizes(9, 3) == std::vector<std::size_t>{9, 3, 1});
  CHECK(halving_round_sizes(1, 3) == std::vector<std::size_t>{1});
  CHECK(halving_round_sizes(10, 3) == std::vector<std::size_t>{10, 4, 2, 1});
  CHECK(halving_round_sizes(8, 2) == std::vector<std::size_t>{8, 4, 2, 1});
  CHECK_THROWS_AS(halving_round_sizes(4, 1), Error);

  const auto cfgs = configs(9);
  const auto h = successive_halving(cfgs, 3, 9, fake_runner());
  REQUIRE(h.rungs.size() == 3);
  CHECK(h.rungs[0].size() == 9);
  CHECK(h.rungs[1].size() == 3);
  CHECK(h.rungs[2].size() == 1);
  CHECK(h.rung_epochs == std::vector<std::size_t>{1, 3, 9});
  CHECK(h.survivors.size() == 1);
}

TEST_CASE("survivors match a brute-force ranking of the recorded losses") {
  const auto cfgs = configs(10);
  const auto h = successive_halving(cfgs, 3, 27, fake_runner());
  for (std::size_t k = 0; k + 1 < h.rungs.size(); ++k) {
    std::vector<std::pair<double, std::size_t>> ranked;
    for (std::size_t idx : h.rungs[k]) ranked.emplace_back(h.trials[idx].history[k].val_rmse_mm, idx);
    std::sort(ranked.begin(), ranked.end());
    std::set<std::size_t> top;
    for (std::size_t i = 0; i < (h.rungs[k].size() + 2) / 3; ++i) top.insert(ranked[i].second);
    CHECK(std::set<std::size_t>(h.rungs[k + 1].begin(), h.rungs[k + 1].end()) == top);
  }
  // Monotone resource: survivors trained at least as long as anyone eliminated.
  const std::size_t winner = h.survivors.front();
  for (const auto& t : h.trials) CHECK(t.epochs <= h.trials[winner].epochs);

  const auto single = successive_halving(std::span(cfgs).subspan(0, 1), 3, 5, fake_runner());
  CHECK(single.survivors == std::vector<std::size_t>{0});
  CHECK(single.rung_epochs == std::vector<std::size_t>{5});
}

TEST_CASE("diverged trials are dropped first") {
  const auto cfgs = configs(9);
  // Trial 0 would be strong if it did not diverge; it must still be cut.
  const auto h = successive_halving(cfgs, 3, 9, fake_runner(nullptr, {0, 1, 2}));
  for (std::size_t i = 0; i < 3; ++i) CHECK(h.trials[i].status == TrialStatus::kDiverged);
  for (std::size_t k = 1; k < h.rungs.size(); ++k) {
    for (std::size_t idx : h.rungs[k]) CHECK(idx > 2);
  }

  std::set<std::size_t> all;
  for (std::size_t i = 0; i < 9; ++i) all.insert(i);
  try {
    successive_halving(cfgs, 3, 9, fake_runner(nullptr, all));
    FAIL("expected search-failed");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kSearchFailed);
  }
}

TEST_CASE("run_search returns the minimum and logs every trial") {
  const SearchSpace space;
  SearchOptions opt;
  opt.n_configs = 9;
  opt.max_epochs = 9;
  opt.seed = 4;
  std::ostringstream log;
  const auto r = run_search(space, opt, fake_runner(), &log);
  double best = 1e300;
  for (const auto& t : r.trials) best = std::min(best, t.val_rmse_mm);
  CHECK(r.best.val_rmse_mm == best);
  CHECK(r.trials.size() == 9);

  std::istringstream lines(log.str());
  std::string line;
  std::size_t n = 0;
  while (std::getline(lines, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j.at("trial").get<std::size_t>() == n);
    CHECK(j.at("config").at("conv_channels").size() >= 1);
    ++n;
  }
  CHECK(n == 9);

  std::ostringstream log2;
  const auto again = run_search(space, opt, fake_runner(), &log2);
  CHECK(again.best.config == r.best.config);
  CHECK(log2.str() == log.str());

  opt.multi_bracket = true;
  const auto hb = run_search(space, opt, fake_runner());
  std::set<std::size_t> brackets;
  for (const auto& t : hb.trials) brackets.insert(t.bracket);
  CHECK(brackets.size() == 3);
  CHECK(hb.trials.size() == 9 + 5 + 3);
}

TEST_CASE("search trains real models on a tiny set") {
  const auto data = generate_dataset(ScenarioKind::kRandom, 24, default_layout(), EffectsConfig{},
                                     ShapeSamplerConfig{}, 8)
                        .records;
  SearchSpace space;
  space.n_conv = {1, 2};
  space.n_fc = {1, 2};
  space.conv_channels = {4, 8};
  space.fc_units = 16;
  space.learning_rate = {1e-3};
  SearchOptions opt;
  opt.n_configs = 3;
  opt.max_epochs = 3;
  opt.base.batch_size = 8;
  const auto train = std::span(data).subspan(0, 16);
  const auto val = std::span(data).subspan(16);
  const auto r = run_search(space, train, val, opt);
  CHECK(r.trials.size() == 3);
  CHECK(r.best.status == TrialStatus::kOk);
  CHECK(r.best.epochs == 3);
  CHECK(std::isfinite(r.best.val_rmse_mm));
  const auto again = run_search(space, train, val, opt);
  CHECK(again.best.val_rmse_mm == r.best.val_rmse_mm);
}
