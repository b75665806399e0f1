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

#include "efbg/tuner.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <ostream>

#include "efbg/error.hpp"
#include "json.hpp"

namespace efbg {

namespace {

using nn::LayerSpec;

constexpr std::uint64_t kTrialInitStream = 0x696e6974ULL;
constexpr std::uint64_t kTrialShuffleStream = 0x73687566ULL;

std::size_t pick_index(Rng& rng, std::size_t n) { return static_cast<std::size_t>(rng() % n); }

template <typename V>
V pick(Rng& rng, const std::vector<V>& menu) {
  return menu[pick_index(rng, menu.size())];
}

bool pick_flag(Rng& rng, const std::vector<bool>& menu) { return menu[pick_index(rng, menu.size())]; }

int pick_int(Rng& rng, IntRange r) {
  const auto span = static_cast<std::uint64_t>(r.max - r.min) + 1;
  return r.min + static_cast<int>(rng() % span);
}

double pick_real(Rng& rng, RealRange r) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return r.min + u * (r.max - r.min);
}

template <typename V>
bool in_menu(const std::vector<V>& menu, const V& v) {
  return std::find(menu.begin(), menu.end(), v) != menu.end();
}

bool in_flags(const std::vector<bool>& menu, bool v) {
  return std::find(menu.begin(), menu.end(), v) != menu.end();
}

// Sequence length after Conv1D (kernel 3, padding 1) or MaxPool1D.
std::size_t conv_out(std::size_t len, std::size_t stride) { return (len - 1) / stride + 1; }
std::size_t pool_out(std::size_t len, std::size_t kernel, std::size_t stride) {
  return (len - kernel) / stride + 1;
}

bool diverged(const TrialRecord& t) { return t.status == TrialStatus::kDiverged; }

// Ok trials first by RMSE, then index; diverged trials last.
bool ranks_before(const TrialRecord& a, const TrialRecord& b) {
  if (diverged(a) != diverged(b)) return !diverged(a);
  if (!diverged(a) && a.val_rmse_mm != b.val_rmse_mm) return a.val_rmse_mm < b.val_rmse_mm;
  return a.index < b.index;
}

std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

std::size_t int_pow(std::size_t b, std::size_t e) {
  std::size_t r = 1;
  for (std::size_t i = 0; i < e; ++i) r *= b;
  return r;
}

class TrialState {
 public:
  virtual ~TrialState() = default;
  virtual RungResult advance(std::size_t epochs) = 0;
};

template <typename T>
class TrialStateT final : public TrialState {
 public:
  TrialStateT(const TrialConfig& cfg, const nn::TrainConfig& base, std::uint64_t seed, std::size_t index,
              std::span<const SampleRecord> train, std::span<const SampleRecord> val)
      : cfg_(cfg.train_config(base)),
        model_(cfg.model_config(), mix_seed(mix_seed(seed ^ index) ^ kTrialInitStream)),
        adam_(nn::AdamOptions{cfg_.learning_rate, 0.9, 0.999, 1e-8, cfg_.l2}),
        seed_(mix_seed(mix_seed(seed ^ index) ^ kTrialShuffleStream)),
        train_(train),
        val_(val) {}

  RungResult advance(std::size_t epochs) override {
    require(epochs >= done_, Errc::kState, "trial resource cannot shrink");
    if (epochs > done_) {
      nn::TrainConfig cfg = cfg_;
      cfg.epochs = epochs - done_;
      cfg.seed = mix_seed(seed_ ^ done_);
      const auto h = nn::train(model_, train_, val_, cfg, &adam_);
      last_ = {epochs, h.best_val_loss, h.best_val_rmse_mm};
      done_ = epochs;
    }
    return last_;
  }

 private:
  nn::TrainConfig cfg_;
  nn::Model<T> model_;
  nn::Adam<T> adam_;
  std::uint64_t seed_;
  std::span<const SampleRecord> train_, val_;
  std::size_t done_ = 0;
  RungResult last_;
};

}  // namespace

void SearchSpace::validate() const {
  require(n_conv.min >= 1 && n_conv.min <= n_conv.max, Errc::kConfig, "n_conv range is empty");
  require(n_fc.min >= 1 && n_fc.min <= n_fc.max, Errc::kConfig, "n_fc range is empty");
  require(!bn_per_layer.empty() && !dropout_after_fc.empty() && !sort_conv.empty(), Errc::kConfig,
          "flag menus must be non-empty");
  require(dropout_rate.min >= 0 && dropout_rate.min <= dropout_rate.max && dropout_rate.max < 1,
          Errc::kConfig, "dropout range must lie in [0, 1)");
  require(!stride.empty() && !pool_kernel.empty() && !init_scheme.empty() && !learning_rate.empty() &&
              !l2.empty() && !conv_channels.empty(),
          Errc::kConfig, "menus must be non-empty");
  for (auto s : stride) require(s >= 1, Errc::kConfig, "stride must be positive");
  for (auto k : pool_kernel) require(k >= 1, Errc::kConfig, "pool kernel must be positive");
  for (auto c : conv_channels) require(c >= 1, Errc::kConfig, "conv channels must be positive");
  for (double lr : learning_rate) require(lr > 0 && std::isfinite(lr), Errc::kConfig, "learning rates must be positive");
  for (double v : l2) require(v >= 0 && std::isfinite(v), Errc::kConfig, "l2 values must be non-negative");
  require(smooth_l1_beta.min >= 0 && smooth_l1_beta.min <= smooth_l1_beta.max, Errc::kConfig,
          "beta range must be non-negative and ordered");
  require(fc_units >= 1, Errc::kConfig, "fc_units must be positive");
}

nn::ModelConfig TrialConfig::model_config() const {
  require(!conv_channels.empty() && n_fc >= 1, Errc::kConfig, "trial needs conv and FC layers");
  nn::ModelConfig m;
  m.init = init_scheme;
  std::size_t len = kGridSize;
  if (bn_per_layer) m.layers.push_back(LayerSpec::batch_norm());
  for (std::size_t ch : conv_channels) {
    const std::size_t s = conv_out(len, stride) >= 2 ? stride : 1;
    m.layers.push_back(LayerSpec::conv(ch, s));
    len = conv_out(len, s);
    if (bn_per_layer) m.layers.push_back(LayerSpec::batch_norm());
    m.layers.push_back(LayerSpec::relu());
    if (len >= pool_kernel && pool_out(len, pool_kernel, 2) >= 2) {
      m.layers.push_back(LayerSpec::pool(pool_kernel, 2));
      len = pool_out(len, pool_kernel, 2);
    }
  }
  m.layers.push_back(LayerSpec::flatten());
  for (int i = 0; i < n_fc; ++i) {
    m.layers.push_back(LayerSpec::dense(fc_units));
    m.layers.push_back(LayerSpec::relu());
    if (bn_per_layer) m.layers.push_back(LayerSpec::batch_norm());
    if (dropout_after_fc) m.layers.push_back(LayerSpec::dropout(dropout_rate));
  }
  m.layers.push_back(LayerSpec::dense(kTargetSize));
  m.validate();
  return m;
}

nn::TrainConfig TrialConfig::train_config(const nn::TrainConfig& base) const {
  nn::TrainConfig t = base;
  t.learning_rate = learning_rate;
  t.l2 = l2;
  t.smooth_l1_beta = smooth_l1_beta;
  t.validate();
  return t;
}

bool space_contains(const SearchSpace& space, const TrialConfig& c) {
  const int n_conv = static_cast<int>(c.conv_channels.size());
  if (n_conv < space.n_conv.min || n_conv > space.n_conv.max) return false;
  if (c.n_fc < space.n_fc.min || c.n_fc > space.n_fc.max) return false;
  for (auto ch : c.conv_channels) {
    if (!in_menu(space.conv_channels, ch)) return false;
  }
  if (c.sort_conv && !std::is_sorted(c.conv_channels.begin(), c.conv_channels.end())) return false;
  return in_flags(space.bn_per_layer, c.bn_per_layer) && in_flags(space.dropout_after_fc, c.dropout_after_fc) &&
         c.dropout_rate >= space.dropout_rate.min && c.dropout_rate <= space.dropout_rate.max &&
         in_menu(space.stride, c.stride) && in_menu(space.pool_kernel, c.pool_kernel) &&
         in_menu(space.init_scheme, c.init_scheme) && in_menu(space.learning_rate, c.learning_rate) &&
         in_flags(space.sort_conv, c.sort_conv) && in_menu(space.l2, c.l2) &&
         c.smooth_l1_beta >= space.smooth_l1_beta.min && c.smooth_l1_beta <= space.smooth_l1_beta.max &&
         c.fc_units == space.fc_units;
}

TrialConfig sample_config(const SearchSpace& space, Rng& rng) {
  space.validate();
  TrialConfig c;
  const int n_conv = pick_int(rng, space.n_conv);
  for (int i = 0; i < n_conv; ++i) c.conv_channels.push_back(pick(rng, space.conv_channels));
  c.n_fc = pick_int(rng, space.n_fc);
  c.bn_per_layer = pick_flag(rng, space.bn_per_layer);
  c.dropout_after_fc = pick_flag(rng, space.dropout_after_fc);
  c.dropout_rate = pick_real(rng, space.dropout_rate);
  c.stride = pick(rng, space.stride);
  c.pool_kernel = pick(rng, space.pool_kernel);
  c.init_scheme = pick(rng, space.init_scheme);
  c.learning_rate = pick(rng, space.learning_rate);
  c.sort_conv = pick_flag(rng, space.sort_conv);
  c.l2 = pick(rng, space.l2);
  c.smooth_l1_beta = pick_real(rng, space.smooth_l1_beta);
  c.fc_units = space.fc_units;
  if (c.sort_conv) std::sort(c.conv_channels.begin(), c.conv_channels.end());
  return c;
}

TrialConfig selected_trial_config(std::size_t fc_units) {
  TrialConfig c;
  c.conv_channels = {16, 16, 32, 32, 256};
  c.n_fc = 5;
  c.bn_per_layer = true;
  c.dropout_after_fc = true;
  c.dropout_rate = 0.37;
  c.stride = 2;
  c.pool_kernel = 3;
  c.init_scheme = nn::InitScheme::kXavierNormal;
  c.learning_rate = 1e-4;
  c.sort_conv = true;
  c.l2 = 0.0;
  c.smooth_l1_beta = 4.04;
  c.fc_units = fc_units;
  return c;
}

const char* trial_status_name(TrialStatus s) noexcept {
  return s == TrialStatus::kOk ? "ok" : "diverged";
}

std::vector<std::size_t> halving_round_sizes(std::size_t n, std::size_t eta) {
  require(n >= 1, Errc::kInvalidInput, "halving needs at least one configuration");
  require(eta >= 2, Errc::kInvalidInput, "eta must be at least 2");
  std::vector<std::size_t> sizes{n};
  while (sizes.back() > 1) sizes.push_back(ceil_div(sizes.back(), eta));
  return sizes;
}

HalvingResult successive_halving(std::span<const TrialConfig> configs, std::size_t eta,
                                 std::size_t max_epochs, const TrialRunner& runner,
                                 std::size_t first_index, std::size_t bracket, std::size_t rounds) {
  require(!configs.empty(), Errc::kInvalidInput, "successive halving needs configurations");
  require(max_epochs >= 1, Errc::kInvalidInput, "max_epochs must be positive");
  std::vector<std::size_t> sizes = halving_round_sizes(configs.size(), eta);
  if (rounds > 0) sizes.resize(std::min(rounds, sizes.size()));
  const std::size_t n_rounds = sizes.size();

  HalvingResult out;
  out.trials.resize(configs.size());
  for (std::size_t i = 0; i < configs.size(); ++i) {
    out.trials[i].index = first_index + i;
    out.trials[i].bracket = bracket;
    out.trials[i].config = configs[i];
  }
  std::vector<std::size_t> alive(configs.size());
  for (std::size_t i = 0; i < alive.size(); ++i) alive[i] = i;

  for (std::size_t k = 0; k < n_rounds; ++k) {
    const std::size_t r = std::max<std::size_t>(1, max_epochs / int_pow(eta, n_rounds - 1 - k));
    out.rung_epochs.push_back(r);
    std::vector<std::size_t> evaluated;
    for (std::size_t i : alive) {
      auto& t = out.trials[i];
      evaluated.push_back(t.index);
      try {
        const RungResult res = runner(t.index, t.config, r);
        t.history.push_back(res);
        t.epochs = res.epochs;
        t.val_loss = res.val_loss;
        t.val_rmse_mm = res.val_rmse_mm;
        if (!std::isfinite(res.val_rmse_mm)) t.status = TrialStatus::kDiverged;
      } catch (const Error& e) {
        if (e.code() != Errc::kDiverged) throw;
        t.status = TrialStatus::kDiverged;
        t.epochs = r;
      }
    }
    out.rungs.push_back(std::move(evaluated));
    std::sort(alive.begin(), alive.end(),
              [&](std::size_t a, std::size_t b) { return ranks_before(out.trials[a], out.trials[b]); });
    const auto ok = static_cast<std::size_t>(std::count_if(
        alive.begin(), alive.end(), [&](std::size_t i) { return !diverged(out.trials[i]); }));
    require(ok > 0, Errc::kSearchFailed, "every trial in a halving round diverged");
    alive.resize(std::min(ok, ceil_div(alive.size(), eta)));
  }
  for (std::size_t i : alive) out.survivors.push_back(i);
  return out;
}

void SearchOptions::validate() const {
  require(n_configs >= 1, Errc::kConfig, "n_configs must be positive");
  require(eta >= 2, Errc::kConfig, "eta must be at least 2");
  require(max_epochs >= 1, Errc::kConfig, "max_epochs must cover one full training");
  base.validate();
}

std::string trial_record_json(const TrialRecord& t) {
  nlohmann::ordered_json j;
  j["trial"] = t.index;
  j["bracket"] = t.bracket;
  j["status"] = trial_status_name(t.status);
  j["epochs"] = t.epochs;
  j["val_loss"] = diverged(t) ? nlohmann::ordered_json() : nlohmann::ordered_json(t.val_loss);
  j["val_rmse_mm"] = diverged(t) ? nlohmann::ordered_json() : nlohmann::ordered_json(t.val_rmse_mm);
  nlohmann::ordered_json c;
  c["conv_channels"] = t.config.conv_channels;
  c["n_fc"] = t.config.n_fc;
  c["bn_per_layer"] = t.config.bn_per_layer;
  c["dropout_after_fc"] = t.config.dropout_after_fc;
  c["dropout_rate"] = t.config.dropout_rate;
  c["stride"] = t.config.stride;
  c["pool_kernel"] = t.config.pool_kernel;
  c["init_scheme"] = nn::init_scheme_name(t.config.init_scheme);
  c["learning_rate"] = t.config.learning_rate;
  c["sort_conv"] = t.config.sort_conv;
  c["l2"] = t.config.l2;
  c["smooth_l1_beta"] = t.config.smooth_l1_beta;
  c["fc_units"] = t.config.fc_units;
  j["config"] = c;
  auto hist = nlohmann::ordered_json::array();
  for (const auto& h : t.history) {
    hist.push_back({{"epochs", h.epochs}, {"val_loss", h.val_loss}, {"val_rmse_mm", h.val_rmse_mm}});
  }
  j["history"] = hist;
  return j.dump();
}

SearchResult run_search(const SearchSpace& space, const SearchOptions& options, const TrialRunner& runner,
                        std::ostream* log) {
  space.validate();
  options.validate();
  std::vector<std::pair<std::size_t, std::size_t>> brackets;  // (configs, rounds)
  if (options.multi_bracket) {
    std::size_t s_max = 0;
    while (int_pow(options.eta, s_max + 1) <= options.max_epochs) ++s_max;
    for (std::size_t s = s_max + 1; s-- > 0;) {
      const std::size_t n = ceil_div((s_max + 1) * int_pow(options.eta, s), s + 1);
      brackets.emplace_back(n, s + 1);
    }
  } else {
    brackets.emplace_back(options.n_configs, 0);
  }

  SearchResult result;
  std::size_t next = 0;
  for (std::size_t b = 0; b < brackets.size(); ++b) {
    std::vector<TrialConfig> configs;
    for (std::size_t i = 0; i < brackets[b].first; ++i) {
      Rng rng = derived_rng(options.seed, next + i);
      configs.push_back(sample_config(space, rng));
    }
    const auto h = successive_halving(configs, options.eta, options.max_epochs, runner, next, b,
                                      brackets[b].second);
    for (const auto& t : h.trials) {
      if (log) *log << trial_record_json(t) << '\n';
      result.trials.push_back(t);
    }
    next += configs.size();
  }
  const auto best = std::min_element(result.trials.begin(), result.trials.end(), ranks_before);
  require(best != result.trials.end() && !diverged(*best), Errc::kSearchFailed, "every trial diverged");
  result.best = *best;
  return result;
}

SearchResult run_search(const SearchSpace& space, std::span<const SampleRecord> train,
                        std::span<const SampleRecord> val, const SearchOptions& options, std::ostream* log) {
  require(!train.empty() && !val.empty(), Errc::kInvalidInput, "search needs training and validation data");
  std::map<std::size_t, std::unique_ptr<TrialState>> states;
  const TrialRunner runner = [&](std::size_t index, const TrialConfig& cfg, std::size_t epochs) {
    auto it = states.find(index);
    if (it == states.end()) {
      std::unique_ptr<TrialState> st;
      if (options.base.float64) {
        st = std::make_unique<TrialStateT<double>>(cfg, options.base, options.seed, index, train, val);
      } else {
        st = std::make_unique<TrialStateT<float>>(cfg, options.base, options.seed, index, train, val);
      }
      it = states.emplace(index, std::move(st)).first;
    }
    try {
      return it->second->advance(epochs);
    } catch (...) {
      states.erase(it);
      throw;
    }
  };
  return run_search(space, options, runner, log);
}

}  // namespace efbg
