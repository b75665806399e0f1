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

#include "efbg/efbg.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <optional>
#include <sstream>
#include <string>
#include <variant>

#include "efbg/baseline.hpp"
#include "efbg/config.hpp"
#include "efbg/dictionary.hpp"
#include "efbg/error.hpp"
#include "efbg/evaluation.hpp"
#include "efbg/explainer.hpp"
#include "efbg/io.hpp"
#include "efbg/nn.hpp"
#include "efbg/optics.hpp"
#include "efbg/tuner.hpp"

struct efbg_config {
  efbg::ExperimentConfig cfg;
};

struct efbg_dataset {
  efbg::Dataset ds;
};

struct efbg_calibration {
  efbg::BlCalibration calib;
};

struct efbg_dictionary {
  efbg::SpectrumDictionary dict;
};

namespace {

template <typename T>
struct ModelState {
  efbg::nn::Model<T> model;
  std::optional<efbg::nn::Adam<T>> adam;
};

}  // namespace

struct efbg_model {
  std::variant<ModelState<float>, ModelState<double>> state;
  efbg::CheckpointMeta meta;
};

namespace {

using efbg::Errc;
using efbg::require;

thread_local std::string g_last_error;

efbg_status set_error(efbg_status s, const char* what) {
  g_last_error = what;
  return s;
}

template <typename F>
efbg_status guard(F&& fn) {
  try {
    fn();
    g_last_error.clear();
    return EFBG_OK;
  } catch (const efbg::Error& e) {
    return set_error(static_cast<efbg_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return set_error(EFBG_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(EFBG_ERR_INTERNAL, e.what());
  } catch (...) {
    return set_error(EFBG_ERR_INTERNAL, "unknown failure");
  }
}

void need(const void* p, const char* name) {
  require(p != nullptr, Errc::kInvalidInput, std::string(name) + " must not be null");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void write_shape(const efbg::MarkerShape& shape, float* out) {
  require(shape.size() == efbg::kMarkerCount, Errc::kState, "reconstruction returned the wrong marker count");
  for (std::size_t m = 0; m < efbg::kMarkerCount; ++m) {
    for (int d = 0; d < 3; ++d) out[3 * m + static_cast<std::size_t>(d)] = static_cast<float>(shape.coords[m][d]);
  }
}

std::span<const efbg::ShapeArray> as_shapes(const float* pred, std::size_t n) {
  return {reinterpret_cast<const efbg::ShapeArray*>(pred), n};
}

std::vector<efbg::ShapeArray> truth_shapes(const efbg::Dataset& ds) {
  std::vector<efbg::ShapeArray> out;
  out.reserve(ds.size());
  for (const auto& r : ds.records) out.push_back(r.shape_mm);
  return out;
}

template <typename F>
decltype(auto) visit_model(efbg_model* m, F&& fn) {
  return std::visit([&](auto& st) -> decltype(auto) { return fn(st); }, m->state);
}

}  // namespace

extern "C" {

const char* efbg_last_error(void) { return g_last_error.c_str(); }

const char* efbg_status_name(int status) {
  if (status == EFBG_OK) return "ok";
  if (status >= 1 && status <= 10) return efbg::errc_name(static_cast<Errc>(status));
  if (status == EFBG_ERR_INTERNAL) return "internal";
  return "unknown";
}

const char* efbg_version(void) { return "0.1.0"; }

void efbg_string_free(char* s) { std::free(s); }

// ---- configuration ---------------------------------------------------------

efbg_status efbg_config_default(efbg_config** out) {
  return guard([&] {
    need(out, "out");
    *out = new efbg_config{};
  });
}

efbg_status efbg_config_parse(const char* json_text, efbg_config** out) {
  return guard([&] {
    need(json_text, "json_text");
    need(out, "out");
    *out = new efbg_config{efbg::parse_config(json_text)};
  });
}

efbg_status efbg_config_load(const char* path, efbg_config** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = new efbg_config{efbg::load_config(path)};
  });
}

efbg_status efbg_config_json(const efbg_config* cfg, char** out) {
  return guard([&] {
    need(cfg, "config");
    need(out, "out");
    *out = dup_string(efbg::config_json(cfg->cfg));
  });
}

efbg_status efbg_config_hash(const efbg_config* cfg, char** out) {
  return guard([&] {
    need(cfg, "config");
    need(out, "out");
    *out = dup_string(efbg::config_hash(cfg->cfg));
  });
}

void efbg_config_free(efbg_config* cfg) { delete cfg; }

// ---- datasets --------------------------------------------------------------

efbg_status efbg_dataset_generate(const efbg_config* cfg, efbg_scenario kind, size_t count, uint64_t seed,
                                  efbg_dataset** out) {
  return guard([&] {
    need(cfg, "config");
    need(out, "out");
    require(kind >= EFBG_RANDOM && kind <= EFBG_TEMPLATE, Errc::kInvalidInput, "unknown scenario kind");
    const auto& c = cfg->cfg;
    *out = new efbg_dataset{efbg::generate_dataset(static_cast<efbg::ScenarioKind>(kind), count, c.layout,
                                                   c.effects, c.sampler, seed, efbg::configured_threads())};
  });
}

efbg_status efbg_dataset_load(const char* path, efbg_dataset** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = new efbg_dataset{efbg::load_dataset(path)};
  });
}

efbg_status efbg_dataset_save(const efbg_dataset* ds, const char* path) {
  return guard([&] {
    need(ds, "dataset");
    need(path, "path");
    efbg::save_dataset(ds->ds, path);
  });
}

efbg_status efbg_dataset_save_csv(const efbg_dataset* ds, const char* path) {
  return guard([&] {
    need(ds, "dataset");
    need(path, "path");
    std::ostringstream os;
    efbg::write_dataset_csv(ds->ds, os);
    efbg::write_file(path, os.str());
  });
}

efbg_status efbg_dataset_split(const efbg_dataset* ds, const efbg_config* cfg, uint64_t seed, efbg_dataset** train,
                               efbg_dataset** val, efbg_dataset** test) {
  return guard([&] {
    need(ds, "dataset");
    need(cfg, "config");
    need(train, "train");
    need(val, "val");
    need(test, "test");
    efbg::SplitSpec spec = cfg->cfg.split;
    spec.seed = seed;
    auto parts = efbg::split_dataset(ds->ds, spec);
    auto* a = new efbg_dataset{std::move(parts.train)};
    auto* b = new efbg_dataset{std::move(parts.val)};
    auto* c = new efbg_dataset{std::move(parts.test)};
    *train = a;
    *val = b;
    *test = c;
  });
}

size_t efbg_dataset_size(const efbg_dataset* ds) { return ds ? ds->ds.size() : 0; }

uint64_t efbg_dataset_seed(const efbg_dataset* ds) { return ds ? ds->ds.header.seed : 0; }

efbg_scenario efbg_dataset_kind(const efbg_dataset* ds) {
  return ds ? static_cast<efbg_scenario>(ds->ds.header.kind) : EFBG_RANDOM;
}

efbg_status efbg_dataset_sample(const efbg_dataset* ds, size_t index, float* spectra, float* shape_mm,
                                uint32_t* group) {
  return guard([&] {
    need(ds, "dataset");
    require(index < ds->ds.size(), Errc::kOutOfRange, "sample index out of range");
    const auto& r = ds->ds.records[index];
    if (spectra) std::memcpy(spectra, r.spectra.data(), sizeof(float) * efbg::kFeatureSize);
    if (shape_mm) std::memcpy(shape_mm, r.shape_mm.data(), sizeof(float) * efbg::kTargetSize);
    if (group) *group = r.group;
  });
}

efbg_status efbg_dataset_grid(const efbg_dataset* ds, double* out) {
  return guard([&] {
    need(ds, "dataset");
    need(out, "out");
    const auto& grid = ds->ds.header.layout.grid;
    std::copy(grid.begin(), grid.end(), out);
  });
}

void efbg_dataset_free(efbg_dataset* ds) { delete ds; }

// ---- baseline --------------------------------------------------------------

efbg_status efbg_calibrate(const efbg_dataset* ds, efbg_calibration** out) {
  return guard([&] {
    need(ds, "dataset");
    need(out, "out");
    *out = new efbg_calibration{efbg::calibrate(ds->ds)};
  });
}

efbg_status efbg_calibration_load(const char* path, efbg_calibration** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = new efbg_calibration{efbg::load_calibration(path)};
  });
}

efbg_status efbg_calibration_save(const efbg_calibration* calib, const char* path) {
  return guard([&] {
    need(calib, "calibration");
    need(path, "path");
    efbg::save_calibration(calib->calib, path);
  });
}

efbg_status efbg_calibration_json(const efbg_calibration* calib, char** out) {
  return guard([&] {
    need(calib, "calibration");
    need(out, "out");
    *out = dup_string(efbg::calibration_json(calib->calib));
  });
}

efbg_status efbg_predict_bl(const efbg_calibration* calib, const efbg_dataset* ds, float* out) {
  return guard([&] {
    need(calib, "calibration");
    need(ds, "dataset");
    need(out, "out");
    for (std::size_t i = 0; i < ds->ds.size(); ++i) {
      const auto scans = ds->ds.records[i].scans();
      write_shape(efbg::predict_shape_bl(scans, calib->calib, ds->ds.header.layout), out + i * efbg::kTargetSize);
    }
  });
}

void efbg_calibration_free(efbg_calibration* calib) { delete calib; }

// ---- dictionary ------------------------------------------------------------

efbg_status efbg_dictionary_build(const efbg_dataset* ds, efbg_dictionary** out) {
  return guard([&] {
    need(ds, "dataset");
    need(out, "out");
    *out = new efbg_dictionary{efbg::SpectrumDictionary::build(std::span(ds->ds.records))};
  });
}

efbg_status efbg_dictionary_load(const char* path, efbg_dictionary** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = new efbg_dictionary{efbg::load_dictionary(path)};
  });
}

efbg_status efbg_dictionary_save(const efbg_dictionary* dict, const char* path) {
  return guard([&] {
    need(dict, "dictionary");
    need(path, "path");
    efbg::save_dictionary(dict->dict, path);
  });
}

size_t efbg_dictionary_size(const efbg_dictionary* dict) { return dict ? dict->dict.size() : 0; }

efbg_status efbg_predict_dict(const efbg_dictionary* dict, const efbg_dataset* ds, float* out) {
  return guard([&] {
    need(dict, "dictionary");
    need(ds, "dataset");
    need(out, "out");
    require(dict->dict.size() > 0, Errc::kState, "dictionary is empty");
    for (std::size_t i = 0; i < ds->ds.size(); ++i) {
      const auto match = dict->dict.query_indexed(ds->ds.records[i].spectra);
      const auto shape = dict->dict.shape_mm(match.index);
      std::memcpy(out + i * efbg::kTargetSize, shape.data(), sizeof(float) * efbg::kTargetSize);
    }
  });
}

void efbg_dictionary_free(efbg_dictionary* dict) { delete dict; }

// ---- network ---------------------------------------------------------------

efbg_status efbg_model_create(const efbg_config* cfg, efbg_model** out) {
  return guard([&] {
    need(cfg, "config");
    need(out, "out");
    const auto& c = cfg->cfg;
    const auto mc = c.model.build();
    auto* m = c.train.float64
                  ? new efbg_model{ModelState<double>{efbg::nn::Model<double>(mc, c.model.seed), std::nullopt}, {}}
                  : new efbg_model{ModelState<float>{efbg::nn::Model<float>(mc, c.model.seed), std::nullopt}, {}};
    m->meta.seed = c.model.seed;
    *out = m;
  });
}

efbg_status efbg_model_train(efbg_model* model, const efbg_config* cfg, const efbg_dataset* train,
                             const efbg_dataset* val, efbg_epoch_callback on_epoch, void* user) {
  return guard([&] {
    need(model, "model");
    need(cfg, "config");
    need(train, "train");
    need(val, "val");
    const auto& tc = cfg->cfg.train;
    efbg::nn::EpochCallback cb;
    if (on_epoch) {
      cb = [&](std::size_t e, double tl, double vl, double vr) { on_epoch(e, tl, vl, vr, user); };
    }
    const auto hist = visit_model(model, [&](auto& st) {
      if (!st.adam) st.adam.emplace(efbg::nn::AdamOptions{.lr = tc.learning_rate, .l2 = tc.l2});
      return efbg::nn::train(st.model, std::span(train->ds.records), std::span(val->ds.records), tc,
                                &*st.adam, cb);
    });
    model->meta.config_hash = efbg::config_hash(cfg->cfg);
    model->meta.seed = tc.seed;
    model->meta.epochs += tc.epochs;
    model->meta.best_val_rmse_mm = hist.best_val_rmse_mm;
  });
}

efbg_status efbg_model_load(const char* path, efbg_model** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    const auto ck = efbg::load_checkpoint(path);
    efbg_model* m = nullptr;
    if (ck.float64) {
      auto model = ck.instantiate<double>();
      auto adam = ck.restore_optimizer(model);
      m = new efbg_model{ModelState<double>{std::move(model), std::nullopt}, ck.meta};
      if (ck.has_optimizer) std::get<ModelState<double>>(m->state).adam.emplace(std::move(adam));
    } else {
      auto model = ck.instantiate<float>();
      auto adam = ck.restore_optimizer(model);
      m = new efbg_model{ModelState<float>{std::move(model), std::nullopt}, ck.meta};
      if (ck.has_optimizer) std::get<ModelState<float>>(m->state).adam.emplace(std::move(adam));
    }
    *out = m;
  });
}

efbg_status efbg_model_save(const efbg_model* model, const char* path) {
  return guard([&] {
    need(model, "model");
    need(path, "path");
    auto* m = const_cast<efbg_model*>(model);  // parameter views are non-const
    visit_model(m, [&](auto& st) {
      efbg::save_checkpoint(st.model, m->meta, path, st.adam ? &*st.adam : nullptr);
    });
  });
}

size_t efbg_model_parameter_count(const efbg_model* model) {
  if (!model) return 0;
  return visit_model(const_cast<efbg_model*>(model), [](auto& st) { return st.model.parameter_count(); });
}

double efbg_model_best_val_rmse(const efbg_model* model) { return model ? model->meta.best_val_rmse_mm : 0.0; }

const char* efbg_model_config_hash(const efbg_model* model) {
  return model ? model->meta.config_hash.c_str() : "";
}

efbg_status efbg_predict_dl(efbg_model* model, const efbg_dataset* ds, float* out) {
  return guard([&] {
    need(model, "model");
    need(ds, "dataset");
    need(out, "out");
    const auto pred = visit_model(model, [&](auto& st) { return efbg::nn::predict_batch(st.model, std::span(ds->ds.records)); });
    std::memcpy(out, pred.data(), sizeof(float) * efbg::kTargetSize * pred.size());
  });
}

void efbg_model_free(efbg_model* model) { delete model; }

// ---- evaluation ------------------------------------------------------------

efbg_status efbg_error_summary(const float* pred, const efbg_dataset* ds, efbg_summary* tip, efbg_summary* rmse) {
  return guard([&] {
    need(pred, "pred");
    need(ds, "dataset");
    const auto truth = truth_shapes(ds->ds);
    const auto stats = efbg::shape_error_stats(as_shapes(pred, ds->ds.size()), truth);
    auto copy = [](const efbg::ErrorSummary& s, efbg_summary* o) {
      if (o) *o = efbg_summary{s.median, s.q1, s.q3, s.iqr, s.mean, s.count};
    };
    copy(stats.tip, tip);
    copy(stats.rmse, rmse);
  });
}

efbg_status efbg_tip_errors(const float* pred, const efbg_dataset* ds, double* out) {
  return guard([&] {
    need(pred, "pred");
    need(ds, "dataset");
    need(out, "out");
    for (std::size_t i = 0; i < ds->ds.size(); ++i) {
      out[i] = efbg::tip_error(std::span(pred + i * efbg::kTargetSize, efbg::kTargetSize),
                               std::span(ds->ds.records[i].shape_mm));
    }
  });
}

efbg_status efbg_precision(const float* pred, const efbg_dataset* ds, double* out) {
  return guard([&] {
    need(pred, "pred");
    need(ds, "dataset");
    need(out, "out");
    const auto groups = efbg::group_tips(as_shapes(pred, ds->ds.size()), std::span(ds->ds.records));
    *out = efbg::precision_metric(groups);
  });
}

efbg_status efbg_similarity_census(const efbg_dataset* test, const efbg_dataset* train, double rmse_thresh_mm,
                                   size_t count_thresh, double* out) {
  return guard([&] {
    need(test, "test");
    need(train, "train");
    need(out, "out");
    *out = efbg::similarity_census(std::span(test->ds.records), std::span(train->ds.records), rmse_thresh_mm,
                                   count_thresh);
  });
}

efbg_status efbg_ablation(const efbg_config* cfg, const double* spacings_mm, size_t n_spacings, size_t count,
                          uint64_t seed, double* medians, double* q1, double* q3, size_t* planes) {
  return guard([&] {
    need(cfg, "config");
    need(spacings_mm, "spacings_mm");
    require(n_spacings > 0 && count > 0, Errc::kInvalidInput, "ablation needs spacings and shapes");
    const auto& c = cfg->cfg;
    std::vector<efbg::CurvatureProfile> truths;
    truths.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      efbg::Rng rng = efbg::derived_rng(seed, i);
      truths.push_back(efbg::sample_random_shape(c.sampler, rng, c.layout.length));
    }
    std::vector<double> spacings(spacings_mm, spacings_mm + n_spacings);
    for (double& s : spacings) s *= 1e-3;
    const auto rows = efbg::resolution_ablation(truths, spacings, c.layout.length, efbg::configured_threads());
    for (std::size_t k = 0; k < rows.size(); ++k) {
      if (medians) medians[k] = rows[k].tip.median;
      if (q1) q1[k] = rows[k].tip.q1;
      if (q3) q3[k] = rows[k].tip.q3;
      if (planes) planes[k] = rows[k].planes;
    }
  });
}

// ---- saliency --------------------------------------------------------------

efbg_status efbg_explain(efbg_model* model, const efbg_dataset* ds, size_t index, double beta, double step,
                         double* loss_map, double* marker_map) {
  return guard([&] {
    need(model, "model");
    need(ds, "dataset");
    require(index < ds->ds.size(), Errc::kOutOfRange, "sample index out of range");
    const auto& rec = ds->ds.records[index];
    visit_model(model, [&](auto& st) {
      if (loss_map) {
        const auto map = efbg::loss_saliency(st.model, rec, beta, step);
        std::copy(map.deltas.begin(), map.deltas.end(), loss_map);
      }
      if (marker_map) {
        const auto map = efbg::marker_saliency(st.model, rec, step);
        std::copy(map.distances.begin(), map.distances.end(), marker_map);
      }
    });
  });
}

efbg_status efbg_bragg_contrast(const efbg_config* cfg, const double* magnitude, double* ratio) {
  return guard([&] {
    need(cfg, "config");
    need(magnitude, "magnitude");
    need(ratio, "ratio");
    *ratio = efbg::bragg_contrast(std::span(magnitude, efbg::kGridSize), cfg->cfg.layout).ratio;
  });
}

// ---- search ----------------------------------------------------------------

efbg_status efbg_tune(const efbg_config* cfg, const efbg_dataset* train, const efbg_dataset* val,
                      const char* log_path, char** best_json) {
  return guard([&] {
    need(cfg, "config");
    need(train, "train");
    need(val, "val");
    auto options = cfg->cfg.tuner.options;
    options.base = cfg->cfg.train;
    std::ostringstream log;
    const auto result = efbg::run_search(cfg->cfg.tuner.space, std::span(train->ds.records),
                                         std::span(val->ds.records), options, log_path ? &log : nullptr);
    if (log_path) efbg::write_file(log_path, log.str());
    if (best_json) *best_json = dup_string(efbg::trial_record_json(result.best));
  });
}

}  // extern "C"
