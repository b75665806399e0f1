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

#include "efbg/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "efbg/error.hpp"
#include "json.hpp"

namespace efbg {

namespace {

using Json = nlohmann::ordered_json;
using nn::LayerSpec;

// Reads an object field by field and rejects keys nobody asked for.
class Reader {
 public:
  Reader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    require(j_.is_object(), Errc::kConfig, where() + " must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const nlohmann::json::exception&) {
      fail(Errc::kConfig, "wrong type for " + child(key));
    }
  }

  void get_u64(const char* key, std::uint64_t& out) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    require(it->is_number_unsigned() || (it->is_number_integer() && it->template get<std::int64_t>() >= 0),
            Errc::kConfig, child(key) + " must be a non-negative integer");
    out = it->template get<std::uint64_t>();
  }

  void get_size(const char* key, std::size_t& out) {
    std::uint64_t v = out;
    get_u64(key, v);
    out = static_cast<std::size_t>(v);
  }

  template <typename Fn>
  void object(const char* key, Fn&& fn) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    Reader sub(*it, child(key));
    fn(sub);
    sub.finish();
  }

  template <typename Fn>
  void array(const char* key, Fn&& fn) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    require(it->is_array(), Errc::kConfig, child(key) + " must be an array");
    fn(*it, child(key));
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      require(seen_.count(it.key()) > 0, Errc::kConfig, "unknown key " + child(it.key().c_str()));
    }
  }

  std::string child(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  std::string where() const { return path_.empty() ? "document" : path_; }

  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

Json parse_text(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(Errc::kConfig, std::string("malformed JSON: ") + e.what());
  }
}

template <typename Fn>
auto parse_section(const std::string& text, Fn&& fn) {
  const Json j = parse_text(text);
  Reader r(j, "");
  auto out = fn(r);
  r.finish();
  return out;
}

// ---- layout, effects, sampler -------------------------------------------

Json to_json(const SensorLayout& l) {
  Json j;
  j["length"] = l.length;
  j["plane_positions"] = l.plane_positions;
  Json fbgs = Json::array();
  for (const auto& f : l.fbgs) {
    fbgs.push_back({{"plane_index", f.plane_index},
                    {"lambda_bragg_nm", f.lambda_bragg_nm},
                    {"phi", f.phi},
                    {"r_offset_um", f.r_offset_um},
                    {"peak_fwhm_nm", f.peak_fwhm_nm},
                    {"base_amplitude", f.base_amplitude}});
  }
  j["fbgs"] = fbgs;
  j["grid"] = l.grid;
  return j;
}

void read(Reader& r, SensorLayout& l) {
  r.get("length", l.length);
  r.get("plane_positions", l.plane_positions);
  r.array("fbgs", [&](const Json& arr, const std::string& path) {
    l.fbgs.clear();
    for (std::size_t i = 0; i < arr.size(); ++i) {
      FbgDescriptor f;
      Reader fr(arr[i], path + "[" + std::to_string(i) + "]");
      fr.get("plane_index", f.plane_index);
      fr.get("lambda_bragg_nm", f.lambda_bragg_nm);
      fr.get("phi", f.phi);
      fr.get("r_offset_um", f.r_offset_um);
      fr.get("peak_fwhm_nm", f.peak_fwhm_nm);
      fr.get("base_amplitude", f.base_amplitude);
      fr.finish();
      l.fbgs.push_back(f);
    }
  });
  r.get("grid", l.grid);
}

Json to_json(const EffectsConfig& e) {
  Json j;
  j["mode_field_gain"] = e.mode_field_gain;
  j["bragg_shift_on"] = e.bragg_shift_on;
  j["photoelastic"] = e.photoelastic;
  j["bendloss"] = {{"enabled", e.bendloss.enabled},
                   {"base", e.bendloss.base},
                   {"short_period_nm", e.bendloss.short_period_nm},
                   {"long_period_nm", e.bendloss.long_period_nm},
                   {"short_depth", e.bendloss.short_depth},
                   {"long_depth", e.bendloss.long_depth},
                   {"short_phase_gain", e.bendloss.short_phase_gain},
                   {"long_phase_gain", e.bendloss.long_phase_gain}};
  j["pdl"] = {{"enabled", e.pdl.enabled},
              {"depth", e.pdl.depth},
              {"period_nm", e.pdl.period_nm},
              {"birefringence_gain", e.pdl.birefringence_gain}};
  j["cladding"] = {{"enabled", e.cladding.enabled},
                   {"depth", e.cladding.depth},
                   {"offset_nm", e.cladding.offset_nm},
                   {"width_nm", e.cladding.width_nm},
                   {"curvature_gain", e.cladding.curvature_gain}};
  j["fresnel"] = {{"enabled", e.fresnel.enabled},
                  {"ripple", e.fresnel.ripple},
                  {"tail_length_um", e.fresnel.tail_length_um},
                  {"mod_gain", e.fresnel.mod_gain},
                  {"phase_gain", e.fresnel.phase_gain}};
  j["noise_sigma"] = e.noise_sigma;
  return j;
}

void read(Reader& r, EffectsConfig& e) {
  r.get("mode_field_gain", e.mode_field_gain);
  r.get("bragg_shift_on", e.bragg_shift_on);
  r.get("photoelastic", e.photoelastic);
  r.object("bendloss", [&](Reader& s) {
    s.get("enabled", e.bendloss.enabled);
    s.get("base", e.bendloss.base);
    s.get("short_period_nm", e.bendloss.short_period_nm);
    s.get("long_period_nm", e.bendloss.long_period_nm);
    s.get("short_depth", e.bendloss.short_depth);
    s.get("long_depth", e.bendloss.long_depth);
    s.get("short_phase_gain", e.bendloss.short_phase_gain);
    s.get("long_phase_gain", e.bendloss.long_phase_gain);
  });
  r.object("pdl", [&](Reader& s) {
    s.get("enabled", e.pdl.enabled);
    s.get("depth", e.pdl.depth);
    s.get("period_nm", e.pdl.period_nm);
    s.get("birefringence_gain", e.pdl.birefringence_gain);
  });
  r.object("cladding", [&](Reader& s) {
    s.get("enabled", e.cladding.enabled);
    s.get("depth", e.cladding.depth);
    s.get("offset_nm", e.cladding.offset_nm);
    s.get("width_nm", e.cladding.width_nm);
    s.get("curvature_gain", e.cladding.curvature_gain);
  });
  r.object("fresnel", [&](Reader& s) {
    s.get("enabled", e.fresnel.enabled);
    s.get("ripple", e.fresnel.ripple);
    s.get("tail_length_um", e.fresnel.tail_length_um);
    s.get("mod_gain", e.fresnel.mod_gain);
    s.get("phase_gain", e.fresnel.phase_gain);
  });
  r.get("noise_sigma", e.noise_sigma);
}

Json to_json(const ShapeSamplerConfig& s) {
  return {{"kappa_min", s.kappa_min},
          {"kappa_max", s.kappa_max},
          {"n_modes", s.n_modes},
          {"trajectory_correlation", s.trajectory_correlation},
          {"trajectory_session", s.trajectory_session},
          {"kappa_logit_mean", s.kappa_logit_mean},
          {"kappa_logit_spread", s.kappa_logit_spread},
          {"theta_spread", s.theta_spread}};
}

void read(Reader& r, ShapeSamplerConfig& s) {
  r.get("kappa_min", s.kappa_min);
  r.get("kappa_max", s.kappa_max);
  r.get("n_modes", s.n_modes);
  r.get("trajectory_correlation", s.trajectory_correlation);
  r.get_size("trajectory_session", s.trajectory_session);
  r.get("kappa_logit_mean", s.kappa_logit_mean);
  r.get("kappa_logit_spread", s.kappa_logit_spread);
  r.get("theta_spread", s.theta_spread);
}

// ---- model, training ----------------------------------------------------

LayerSpec::Kind parse_kind(const std::string& name) {
  for (auto k : {LayerSpec::Kind::kConv1D, LayerSpec::Kind::kMaxPool1D, LayerSpec::Kind::kBatchNorm1D,
                 LayerSpec::Kind::kDropout, LayerSpec::Kind::kFullyConnected, LayerSpec::Kind::kReLU,
                 LayerSpec::Kind::kFlatten}) {
    LayerSpec probe;
    probe.kind = k;
    if (probe.kind_name() == name) return k;
  }
  fail(Errc::kConfig, "unknown layer kind '" + name + "'");
}

Json to_json(const LayerSpec& l) {
  Json j;
  j["kind"] = l.kind_name();
  switch (l.kind) {
    case LayerSpec::Kind::kConv1D:
      j["out_channels"] = l.out_channels;
      j["kernel"] = l.kernel;
      j["stride"] = l.stride;
      j["padding"] = l.padding;
      break;
    case LayerSpec::Kind::kMaxPool1D:
      j["kernel"] = l.kernel;
      j["stride"] = l.stride;
      break;
    case LayerSpec::Kind::kBatchNorm1D:
      j["momentum"] = l.momentum;
      j["eps"] = l.eps;
      break;
    case LayerSpec::Kind::kDropout: j["p"] = l.p; break;
    case LayerSpec::Kind::kFullyConnected: j["units"] = l.units; break;
    case LayerSpec::Kind::kReLU:
    case LayerSpec::Kind::kFlatten: break;
  }
  return j;
}

LayerSpec read_layer(const Json& j, const std::string& path) {
  Reader r(j, path);
  std::string kind;
  r.get("kind", kind);
  LayerSpec l;
  switch (parse_kind(kind)) {
    case LayerSpec::Kind::kConv1D:
      l = LayerSpec::conv(16);
      r.get_size("out_channels", l.out_channels);
      r.get_size("kernel", l.kernel);
      r.get_size("stride", l.stride);
      r.get_size("padding", l.padding);
      break;
    case LayerSpec::Kind::kMaxPool1D:
      l = LayerSpec::pool(2, 2);
      r.get_size("kernel", l.kernel);
      r.get_size("stride", l.stride);
      break;
    case LayerSpec::Kind::kBatchNorm1D:
      l = LayerSpec::batch_norm();
      r.get("momentum", l.momentum);
      r.get("eps", l.eps);
      break;
    case LayerSpec::Kind::kDropout:
      l = LayerSpec::dropout(0.0);
      r.get("p", l.p);
      break;
    case LayerSpec::Kind::kFullyConnected:
      l = LayerSpec::dense(1);
      r.get_size("units", l.units);
      break;
    case LayerSpec::Kind::kReLU: l = LayerSpec::relu(); break;
    case LayerSpec::Kind::kFlatten: l = LayerSpec::flatten(); break;
  }
  r.finish();
  return l;
}

Json layers_json(const std::vector<LayerSpec>& layers) {
  Json arr = Json::array();
  for (const auto& l : layers) arr.push_back(to_json(l));
  return arr;
}

std::vector<LayerSpec> read_layers(const Json& arr, const std::string& path) {
  std::vector<LayerSpec> out;
  for (std::size_t i = 0; i < arr.size(); ++i) out.push_back(read_layer(arr[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

Json to_json(const nn::ModelConfig& m) {
  return {{"init", nn::init_scheme_name(m.init)},
          {"in_channels", m.in_channels},
          {"in_length", m.in_length},
          {"output_size", m.output_size},
          {"layers", layers_json(m.layers)}};
}

void read(Reader& r, nn::ModelConfig& m) {
  std::string init = nn::init_scheme_name(m.init);
  r.get("init", init);
  m.init = nn::parse_init_scheme(init);
  r.get_size("in_channels", m.in_channels);
  r.get_size("in_length", m.in_length);
  r.get_size("output_size", m.output_size);
  r.array("layers", [&](const Json& arr, const std::string& path) { m.layers = read_layers(arr, path); });
}

Json to_json(const nn::TrainConfig& t) {
  return {{"batch_size", t.batch_size},
          {"learning_rate", t.learning_rate},
          {"smooth_l1_beta", t.smooth_l1_beta},
          {"l2", t.l2},
          {"epochs", t.epochs},
          {"seed", t.seed},
          {"float64", t.float64},
          {"init_output_bias_to_mean", t.init_output_bias_to_mean}};
}

void read(Reader& r, nn::TrainConfig& t) {
  r.get_size("batch_size", t.batch_size);
  r.get("learning_rate", t.learning_rate);
  r.get("smooth_l1_beta", t.smooth_l1_beta);
  r.get("l2", t.l2);
  r.get_size("epochs", t.epochs);
  r.get_u64("seed", t.seed);
  r.get("float64", t.float64);
  r.get("init_output_bias_to_mean", t.init_output_bias_to_mean);
}

Json to_json(const ModelSection& m) {
  return {{"architecture", m.architecture},
          {"fc_width", m.fc_width},
          {"init", nn::init_scheme_name(m.init)},
          {"layers", layers_json(m.layers)},
          {"seed", m.seed}};
}

void read(Reader& r, ModelSection& m) {
  r.get("architecture", m.architecture);
  r.get_size("fc_width", m.fc_width);
  std::string init = nn::init_scheme_name(m.init);
  r.get("init", init);
  m.init = nn::parse_init_scheme(init);
  r.array("layers", [&](const Json& arr, const std::string& path) { m.layers = read_layers(arr, path); });
  r.get_u64("seed", m.seed);
}

// ---- tuner, split, eval, ablation --------------------------------------

Json to_json(const TrialConfig& c) {
  return {{"conv_channels", c.conv_channels},
          {"n_fc", c.n_fc},
          {"bn_per_layer", c.bn_per_layer},
          {"dropout_after_fc", c.dropout_after_fc},
          {"dropout_rate", c.dropout_rate},
          {"stride", c.stride},
          {"pool_kernel", c.pool_kernel},
          {"init_scheme", nn::init_scheme_name(c.init_scheme)},
          {"learning_rate", c.learning_rate},
          {"sort_conv", c.sort_conv},
          {"l2", c.l2},
          {"smooth_l1_beta", c.smooth_l1_beta},
          {"fc_units", c.fc_units}};
}

void read(Reader& r, TrialConfig& c) {
  r.get("conv_channels", c.conv_channels);
  r.get("n_fc", c.n_fc);
  r.get("bn_per_layer", c.bn_per_layer);
  r.get("dropout_after_fc", c.dropout_after_fc);
  r.get("dropout_rate", c.dropout_rate);
  r.get_size("stride", c.stride);
  r.get_size("pool_kernel", c.pool_kernel);
  std::string init = nn::init_scheme_name(c.init_scheme);
  r.get("init_scheme", init);
  c.init_scheme = nn::parse_init_scheme(init);
  r.get("learning_rate", c.learning_rate);
  r.get("sort_conv", c.sort_conv);
  r.get("l2", c.l2);
  r.get("smooth_l1_beta", c.smooth_l1_beta);
  r.get_size("fc_units", c.fc_units);
}

Json to_json(const SearchSpace& s) {
  std::vector<std::string> inits;
  for (auto i : s.init_scheme) inits.emplace_back(nn::init_scheme_name(i));
  return {{"n_conv", {s.n_conv.min, s.n_conv.max}},
          {"n_fc", {s.n_fc.min, s.n_fc.max}},
          {"bn_per_layer", s.bn_per_layer},
          {"dropout_after_fc", s.dropout_after_fc},
          {"dropout_rate", {s.dropout_rate.min, s.dropout_rate.max}},
          {"stride", s.stride},
          {"pool_kernel", s.pool_kernel},
          {"init_scheme", inits},
          {"learning_rate", s.learning_rate},
          {"sort_conv", s.sort_conv},
          {"l2", s.l2},
          {"smooth_l1_beta", {s.smooth_l1_beta.min, s.smooth_l1_beta.max}},
          {"conv_channels", s.conv_channels},
          {"fc_units", s.fc_units}};
}

template <typename R, typename V>
void read_range(Reader& r, const char* key, R& range) {
  std::vector<V> v{range.min, range.max};
  r.get(key, v);
  require(v.size() == 2, Errc::kConfig, r.child(key) + " must be [min, max]");
  range.min = v[0];
  range.max = v[1];
}

void read(Reader& r, SearchSpace& s) {
  read_range<IntRange, int>(r, "n_conv", s.n_conv);
  read_range<IntRange, int>(r, "n_fc", s.n_fc);
  r.get("bn_per_layer", s.bn_per_layer);
  r.get("dropout_after_fc", s.dropout_after_fc);
  read_range<RealRange, double>(r, "dropout_rate", s.dropout_rate);
  r.get("stride", s.stride);
  r.get("pool_kernel", s.pool_kernel);
  std::vector<std::string> inits;
  for (auto i : s.init_scheme) inits.emplace_back(nn::init_scheme_name(i));
  r.get("init_scheme", inits);
  s.init_scheme.clear();
  for (const auto& name : inits) s.init_scheme.push_back(nn::parse_init_scheme(name));
  r.get("learning_rate", s.learning_rate);
  r.get("sort_conv", s.sort_conv);
  r.get("l2", s.l2);
  read_range<RealRange, double>(r, "smooth_l1_beta", s.smooth_l1_beta);
  r.get("conv_channels", s.conv_channels);
  r.get_size("fc_units", s.fc_units);
}

Json to_json(const TunerSection& t) {
  return {{"space", to_json(t.space)},
          {"n_configs", t.options.n_configs},
          {"eta", t.options.eta},
          {"max_epochs", t.options.max_epochs},
          {"multi_bracket", t.options.multi_bracket},
          {"seed", t.options.seed}};
}

void read(Reader& r, TunerSection& t) {
  r.object("space", [&](Reader& s) { read(s, t.space); });
  r.get_size("n_configs", t.options.n_configs);
  r.get_size("eta", t.options.eta);
  r.get_size("max_epochs", t.options.max_epochs);
  r.get("multi_bracket", t.options.multi_bracket);
  r.get_u64("seed", t.options.seed);
}

Json to_json(const ExperimentConfig& c) {
  Json j;
  j["layout"] = to_json(c.layout);
  j["effects"] = to_json(c.effects);
  j["sampler"] = to_json(c.sampler);
  j["model"] = to_json(c.model);
  j["train"] = to_json(c.train);
  j["split"] = {{"train", c.split.train}, {"val", c.split.val}, {"test", c.split.test}, {"seed", c.split.seed}};
  j["tuner"] = to_json(c.tuner);
  j["eval"] = {{"census_rmse_mm", c.eval.census_rmse_mm},
               {"census_count", c.eval.census_count},
               {"saliency_step", c.eval.saliency_step}};
  j["ablation"] = {{"spacings_mm", c.ablation.spacings_mm},
                   {"count", c.ablation.count},
                   {"seed", c.ablation.seed}};
  return j;
}

template <typename Fn>
void wrap_validation(const char* section, Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    fail(Errc::kConfig, std::string(section) + ": " + e.what());
  }
}

}  // namespace

nn::ModelConfig ModelSection::build() const {
  nn::ModelConfig m;
  if (architecture == "scaled") {
    m = nn::scaled_architecture(fc_width);
  } else if (architecture == "paper") {
    m = nn::paper_architecture();
  } else if (architecture == "custom") {
    require(!layers.empty(), Errc::kConfig, "custom architecture needs layers");
    m.layers = layers;
  } else {
    fail(Errc::kConfig, "unknown architecture '" + architecture + "'");
  }
  m.init = init;
  wrap_validation("model", [&] { m.validate(); });
  return m;
}

void ExperimentConfig::validate() const {
  wrap_validation("layout", [&] { layout.validate(); });
  wrap_validation("effects", [&] { effects.validate(); });
  wrap_validation("sampler", [&] { sampler.validate(); });
  (void)model.build();
  wrap_validation("train", [&] { train.validate(); });
  wrap_validation("split", [&] { split.validate(); });
  wrap_validation("tuner", [&] {
    tuner.space.validate();
    SearchOptions o = tuner.options;
    o.base = train;
    o.validate();
  });
  require(eval.census_rmse_mm >= 0 && eval.census_count >= 1, Errc::kConfig, "eval: census thresholds");
  require(std::isfinite(eval.saliency_step) && eval.saliency_step != 0, Errc::kConfig,
          "eval: saliency_step must be finite and nonzero");
  require(!ablation.spacings_mm.empty() && ablation.count >= 1, Errc::kConfig,
          "ablation: spacings and count must be non-empty");
  for (double s : ablation.spacings_mm) require(s > 0, Errc::kConfig, "ablation: spacings must be positive");
}

ExperimentConfig parse_config(const std::string& json_text) {
  const Json j = parse_text(json_text);
  ExperimentConfig c;
  Reader r(j, "");
  r.object("layout", [&](Reader& s) { read(s, c.layout); });
  r.object("effects", [&](Reader& s) { read(s, c.effects); });
  r.object("sampler", [&](Reader& s) { read(s, c.sampler); });
  r.object("model", [&](Reader& s) { read(s, c.model); });
  r.object("train", [&](Reader& s) { read(s, c.train); });
  r.object("split", [&](Reader& s) {
    s.get("train", c.split.train);
    s.get("val", c.split.val);
    s.get("test", c.split.test);
    s.get_u64("seed", c.split.seed);
  });
  r.object("tuner", [&](Reader& s) { read(s, c.tuner); });
  r.object("eval", [&](Reader& s) {
    s.get("census_rmse_mm", c.eval.census_rmse_mm);
    s.get_size("census_count", c.eval.census_count);
    s.get("saliency_step", c.eval.saliency_step);
  });
  r.object("ablation", [&](Reader& s) {
    s.get("spacings_mm", c.ablation.spacings_mm);
    s.get_size("count", c.ablation.count);
    s.get_u64("seed", c.ablation.seed);
  });
  r.finish();
  c.tuner.options.base = c.train;
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), Errc::kIo, "cannot open config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  require(!in.bad(), Errc::kIo, "cannot read config file " + path);
  return parse_config(ss.str());
}

std::string config_json(const ExperimentConfig& cfg, int indent) { return to_json(cfg).dump(indent); }

std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t seed) {
  std::uint64_t h = seed;
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string fnv1a_hex(const std::string& bytes) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(bytes.data(), bytes.size())));
  return buf;
}

std::string config_hash(const ExperimentConfig& cfg) { return fnv1a_hex(config_json(cfg, -1)); }

std::string layout_json(const SensorLayout& layout) { return to_json(layout).dump(); }
SensorLayout parse_layout(const std::string& text) {
  return parse_section(text, [](Reader& r) {
    SensorLayout l = default_layout();
    read(r, l);
    return l;
  });
}

std::string effects_json(const EffectsConfig& effects) { return to_json(effects).dump(); }
EffectsConfig parse_effects(const std::string& text) {
  return parse_section(text, [](Reader& r) {
    EffectsConfig e;
    read(r, e);
    return e;
  });
}

std::string sampler_json(const ShapeSamplerConfig& sampler) { return to_json(sampler).dump(); }
ShapeSamplerConfig parse_sampler(const std::string& text) {
  return parse_section(text, [](Reader& r) {
    ShapeSamplerConfig s;
    read(r, s);
    return s;
  });
}

std::string model_config_json(const nn::ModelConfig& model) { return to_json(model).dump(); }
nn::ModelConfig parse_model_config(const std::string& text) {
  return parse_section(text, [](Reader& r) {
    nn::ModelConfig m;
    read(r, m);
    return m;
  });
}

std::string train_config_json(const nn::TrainConfig& train) { return to_json(train).dump(); }
nn::TrainConfig parse_train_config(const std::string& text) {
  return parse_section(text, [](Reader& r) {
    nn::TrainConfig t;
    read(r, t);
    return t;
  });
}

std::string trial_config_json(const TrialConfig& trial) { return to_json(trial).dump(); }
TrialConfig parse_trial_config(const std::string& text) {
  return parse_section(text, [](Reader& r) {
    TrialConfig t;
    read(r, t);
    return t;
  });
}

}  // namespace efbg
