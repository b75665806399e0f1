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

// efbg: command-line experiments over the C interface. Every subcommand
// writes its artifact plus a CSV report headed by the config hash and seeds.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "efbg/efbg.h"
#include "json.hpp"

namespace {

// Exit codes: 0 ok, 1 other failure, 2 config or usage, 3 I/O, 4 divergence.
int exit_code(efbg_status s) {
  switch (s) {
    case EFBG_OK: return 0;
    case EFBG_ERR_CONFIG: return 2;
    case EFBG_ERR_IO: return 3;
    case EFBG_ERR_DIVERGED: return 4;
    default: return 1;
  }
}

struct Failure {
  efbg_status status;
  std::string message;
};

void check(efbg_status s) {
  if (s != EFBG_OK) throw Failure{s, efbg_last_error()};
}

template <typename H, void (*Free)(H*)>
struct Deleter {
  void operator()(H* h) const { Free(h); }
};
using Config = std::unique_ptr<efbg_config, Deleter<efbg_config, efbg_config_free>>;
using Dataset = std::unique_ptr<efbg_dataset, Deleter<efbg_dataset, efbg_dataset_free>>;
using Calibration = std::unique_ptr<efbg_calibration, Deleter<efbg_calibration, efbg_calibration_free>>;
using Dictionary = std::unique_ptr<efbg_dictionary, Deleter<efbg_dictionary, efbg_dictionary_free>>;
using Model = std::unique_ptr<efbg_model, Deleter<efbg_model, efbg_model_free>>;

std::string take_string(char* s) {
  std::string out(s);
  efbg_string_free(s);
  return out;
}

Config load_config(const std::string& path) {
  efbg_config* c = nullptr;
  check(path.empty() ? efbg_config_default(&c) : efbg_config_load(path.c_str(), &c));
  return Config(c);
}

std::string config_hash(const efbg_config* cfg) {
  char* h = nullptr;
  check(efbg_config_hash(cfg, &h));
  return take_string(h);
}

Dataset load_dataset(const std::string& path) {
  efbg_dataset* d = nullptr;
  check(efbg_dataset_load(path.c_str(), &d));
  return Dataset(d);
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

class Report {
 public:
  Report(std::string name, std::string hash, std::vector<std::pair<std::string, std::uint64_t>> seeds,
         std::vector<std::string> columns)
      : name_(std::move(name)), hash_(std::move(hash)), seeds_(std::move(seeds)), columns_(std::move(columns)) {}

  void row(std::vector<std::string> cells) {
    if (cells.size() != columns_.size()) throw Failure{EFBG_ERR_INTERNAL, "report row width mismatch"};
    rows_.push_back(std::move(cells));
  }

  void save(const std::string& path) const {
    std::ostringstream os;
    os << "# report: " << name_ << "\n# config_hash: " << hash_ << "\n# seeds:";
    for (const auto& [k, v] : seeds_) os << ' ' << k << '=' << v;
    os << '\n';
    line(os, columns_);
    for (const auto& r : rows_) line(os, r);
    std::ofstream out(path, std::ios::binary);
    out << os.str();
    out.close();
    if (!out) throw Failure{EFBG_ERR_IO, "cannot write report " + path};
  }

 private:
  static void line(std::ostream& os, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << cells[i];
    os << '\n';
  }

  std::string name_, hash_;
  std::vector<std::pair<std::string, std::uint64_t>> seeds_;
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

std::string default_report(const std::string& report, const std::string& artifact) {
  return report.empty() ? artifact + ".report.csv" : report;
}

efbg_scenario parse_kind(const std::string& k) {
  if (k == "random") return EFBG_RANDOM;
  if (k == "trajectory") return EFBG_TRAJECTORY;
  return EFBG_TEMPLATE;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// ---- subcommands -------------------------------------------------------------

struct GenArgs {
  std::string kind = "random", config, out, csv, report;
  std::size_t count = 1000;
  std::uint64_t seed = 1;
};

void run_gen(const GenArgs& a) {
  const Config cfg = load_config(a.config);
  efbg_dataset* d = nullptr;
  check(efbg_dataset_generate(cfg.get(), parse_kind(a.kind), a.count, a.seed, &d));
  const Dataset ds(d);
  check(efbg_dataset_save(ds.get(), a.out.c_str()));
  if (!a.csv.empty()) check(efbg_dataset_save_csv(ds.get(), a.csv.c_str()));
  Report r("gen", config_hash(cfg.get()), {{"data", a.seed}}, {"kind", "count", "seed"});
  r.row({a.kind, std::to_string(efbg_dataset_size(ds.get())), std::to_string(a.seed)});
  r.save(default_report(a.report, a.out));
}

struct SplitArgs {
  std::string dataset, config, prefix, report;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

void run_split(const SplitArgs& a) {
  const Config cfg = load_config(a.config);
  const Dataset ds = load_dataset(a.dataset);
  std::uint64_t seed = a.seed;
  if (!a.seed_set) {
    const auto j = nlohmann::json::parse(take_string([&] {
      char* s = nullptr;
      check(efbg_config_json(cfg.get(), &s));
      return s;
    }()));
    seed = j["split"]["seed"].get<std::uint64_t>();
  }
  efbg_dataset *tr = nullptr, *va = nullptr, *te = nullptr;
  check(efbg_dataset_split(ds.get(), cfg.get(), seed, &tr, &va, &te));
  const Dataset parts[3] = {Dataset(tr), Dataset(va), Dataset(te)};
  const char* names[3] = {"train", "val", "test"};
  Report r("split", config_hash(cfg.get()), {{"data", efbg_dataset_seed(ds.get())}, {"split", seed}},
           {"part", "count", "path"});
  for (int i = 0; i < 3; ++i) {
    const std::string path = a.prefix + "_" + names[i] + ".efbg";
    check(efbg_dataset_save(parts[i].get(), path.c_str()));
    r.row({names[i], std::to_string(efbg_dataset_size(parts[i].get())), path});
  }
  r.save(default_report(a.report, a.prefix + "_split"));
}

struct CalibrateArgs {
  std::string dataset, config, out, report;
};

void run_calibrate(const CalibrateArgs& a) {
  const Config cfg = load_config(a.config);
  const Dataset ds = load_dataset(a.dataset);
  efbg_calibration* c = nullptr;
  check(efbg_calibrate(ds.get(), &c));
  const Calibration calib(c);
  check(efbg_calibration_save(calib.get(), a.out.c_str()));
  char* s = nullptr;
  check(efbg_calibration_json(calib.get(), &s));
  const auto j = nlohmann::json::parse(take_string(s));
  Report r("calibrate", config_hash(cfg.get()), {{"data", efbg_dataset_seed(ds.get())}},
           {"fbg", "plane", "phi_rad", "gain_m", "i0", "residual_rms"});
  const auto& fbgs = j.at("fbgs");
  for (std::size_t i = 0; i < fbgs.size(); ++i) {
    const auto& f = fbgs[i];
    r.row({std::to_string(i), std::to_string(i / 3), num(f.at("phi").get<double>()), num(f.at("gain").get<double>()),
           num(f.at("i0").get<double>()), num(f.at("residual_rms").get<double>())});
  }
  r.save(default_report(a.report, a.out));
}

struct DictArgs {
  std::string dataset, config, out, report;
};

void run_dict(const DictArgs& a) {
  const Config cfg = load_config(a.config);
  const Dataset ds = load_dataset(a.dataset);
  efbg_dictionary* d = nullptr;
  check(efbg_dictionary_build(ds.get(), &d));
  const Dictionary dict(d);
  check(efbg_dictionary_save(dict.get(), a.out.c_str()));
  Report r("dict", config_hash(cfg.get()), {{"data", efbg_dataset_seed(ds.get())}}, {"entries"});
  r.row({std::to_string(efbg_dictionary_size(dict.get()))});
  r.save(default_report(a.report, a.out));
}

struct TrainArgs {
  std::string train, val, config, out, report, init;
  bool quiet = false;
};

struct TrainLog {
  Report* report;
  bool quiet;
};

void on_epoch(size_t epoch, double train_loss, double val_loss, double val_rmse, void* user) {
  auto* log = static_cast<TrainLog*>(user);
  log->report->row({std::to_string(epoch), num(train_loss), num(val_loss), num(val_rmse)});
  if (!log->quiet) {
    std::fprintf(stderr, "epoch %zu train %.4f val %.4f rmse %.3f mm\n", epoch, train_loss, val_loss, val_rmse);
  }
}

void run_train(const TrainArgs& a) {
  const Config cfg = load_config(a.config);
  const Dataset tr = load_dataset(a.train);
  const Dataset va = load_dataset(a.val);
  efbg_model* m = nullptr;
  check(a.init.empty() ? efbg_model_create(cfg.get(), &m) : efbg_model_load(a.init.c_str(), &m));
  const Model model(m);
  const auto j = nlohmann::json::parse(take_string([&] {
    char* s = nullptr;
    check(efbg_config_json(cfg.get(), &s));
    return s;
  }()));
  Report r("train", config_hash(cfg.get()),
           {{"data", efbg_dataset_seed(tr.get())},
            {"model", j["model"]["seed"].get<std::uint64_t>()},
            {"train", j["train"]["seed"].get<std::uint64_t>()}},
           {"epoch", "train_loss", "val_loss", "val_rmse_mm"});
  TrainLog log{&r, a.quiet};
  check(efbg_model_train(model.get(), cfg.get(), tr.get(), va.get(), on_epoch, &log));
  check(efbg_model_save(model.get(), a.out.c_str()));
  r.save(default_report(a.report, a.out));
}

struct TuneArgs {
  std::string train, val, config, log, report;
};

void run_tune(const TuneArgs& a) {
  const Config cfg = load_config(a.config);
  const Dataset tr = load_dataset(a.train);
  const Dataset va = load_dataset(a.val);
  char* best = nullptr;
  check(efbg_tune(cfg.get(), tr.get(), va.get(), a.log.c_str(), &best));
  const std::string best_json = take_string(best);
  const auto j = nlohmann::json::parse(take_string([&] {
    char* s = nullptr;
    check(efbg_config_json(cfg.get(), &s));
    return s;
  }()));
  Report r("tune", config_hash(cfg.get()),
           {{"data", efbg_dataset_seed(tr.get())}, {"tuner", j["tuner"]["seed"].get<std::uint64_t>()}},
           {"trial", "bracket", "status", "epochs", "val_rmse_mm"});
  std::ifstream in(a.log);
  for (std::string line; std::getline(in, line);) {
    const auto t = nlohmann::json::parse(line);
    const auto& rmse = t.at("val_rmse_mm");
    r.row({std::to_string(t.at("trial").get<std::size_t>()), std::to_string(t.at("bracket").get<std::size_t>()),
           t.at("status").get<std::string>(), std::to_string(t.at("epochs").get<std::size_t>()),
           rmse.is_null() ? "" : num(rmse.get<double>())});
  }
  r.save(default_report(a.report, a.log));
  std::cout << best_json << '\n';
}

struct EvalArgs {
  std::string dataset, config, methods = "bl,dl,dict", model, calibration, dictionary, out;
};

void run_eval(const EvalArgs& a) {
  const Config cfg = load_config(a.config);
  const Dataset ds = load_dataset(a.dataset);
  const std::size_t n = efbg_dataset_size(ds.get());
  const bool repeated = efbg_dataset_kind(ds.get()) == EFBG_TEMPLATE;
  Report r("eval", config_hash(cfg.get()), {{"data", efbg_dataset_seed(ds.get())}},
           {"method", "count", "tip_median_mm", "tip_q1_mm", "tip_q3_mm", "tip_iqr_mm", "rmse_median_mm",
            "rmse_iqr_mm", "precision_mm"});
  std::vector<float> pred(n * EFBG_TARGET_SIZE);
  for (const auto& method : split_list(a.methods)) {
    auto require_path = [&](const std::string& p, const char* flag) {
      if (p.empty()) throw Failure{EFBG_ERR_CONFIG, "method " + method + " needs " + flag};
    };
    if (method == "bl") {
      require_path(a.calibration, "--calibration");
      efbg_calibration* c = nullptr;
      check(efbg_calibration_load(a.calibration.c_str(), &c));
      const Calibration calib(c);
      check(efbg_predict_bl(calib.get(), ds.get(), pred.data()));
    } else if (method == "dl") {
      require_path(a.model, "--model");
      efbg_model* m = nullptr;
      check(efbg_model_load(a.model.c_str(), &m));
      const Model model(m);
      check(efbg_predict_dl(model.get(), ds.get(), pred.data()));
    } else if (method == "dict") {
      require_path(a.dictionary, "--dictionary");
      efbg_dictionary* d = nullptr;
      check(efbg_dictionary_load(a.dictionary.c_str(), &d));
      const Dictionary dict(d);
      check(efbg_predict_dict(dict.get(), ds.get(), pred.data()));
    } else {
      throw Failure{EFBG_ERR_CONFIG, "unknown method '" + method + "' (expected bl, dl or dict)"};
    }
    efbg_summary tip{}, rmse{};
    check(efbg_error_summary(pred.data(), ds.get(), &tip, &rmse));
    std::string precision;
    if (repeated) {
      double p = 0;
      check(efbg_precision(pred.data(), ds.get(), &p));
      precision = num(p);
    }
    r.row({method, std::to_string(tip.count), num(tip.median), num(tip.q1), num(tip.q3), num(tip.iqr),
           num(rmse.median), num(rmse.iqr), precision});
  }
  r.save(a.out);
}

struct ExplainArgs {
  std::string model, dataset, config, out_loss, out_markers;
  std::size_t sample = 0;
};

void run_explain(const ExplainArgs& a) {
  const Config cfg = load_config(a.config);
  const Dataset ds = load_dataset(a.dataset);
  efbg_model* m = nullptr;
  check(efbg_model_load(a.model.c_str(), &m));
  const Model model(m);
  const auto j = nlohmann::json::parse(take_string([&] {
    char* s = nullptr;
    check(efbg_config_json(cfg.get(), &s));
    return s;
  }()));
  const double beta = j["train"]["smooth_l1_beta"].get<double>();
  const double step = j["eval"]["saliency_step"].get<double>();
  std::vector<double> loss(EFBG_GRID_SIZE), markers(EFBG_GRID_SIZE * EFBG_MARKER_COUNT), grid(EFBG_GRID_SIZE);
  check(efbg_explain(model.get(), ds.get(), a.sample, beta, step, loss.data(), markers.data()));
  check(efbg_dataset_grid(ds.get(), grid.data()));
  const std::string hash = config_hash(cfg.get());
  const std::vector<std::pair<std::string, std::uint64_t>> seeds{{"data", efbg_dataset_seed(ds.get())},
                                                                 {"sample", a.sample}};

  Report lr("explain-loss", hash, seeds, {"element", "wavelength_nm", "loss_delta"});
  for (std::size_t e = 0; e < EFBG_GRID_SIZE; ++e) lr.row({std::to_string(e), num(grid[e]), num(loss[e])});
  lr.save(a.out_loss);

  std::vector<std::string> cols{"element", "wavelength_nm"};
  for (int k = 0; k < EFBG_MARKER_COUNT; ++k) cols.push_back("marker_" + std::to_string(k));
  Report mr("explain-markers", hash, seeds, cols);
  for (std::size_t e = 0; e < EFBG_GRID_SIZE; ++e) {
    std::vector<std::string> row{std::to_string(e), num(grid[e])};
    for (std::size_t k = 0; k < EFBG_MARKER_COUNT; ++k) row.push_back(num(markers[e * EFBG_MARKER_COUNT + k]));
    mr.row(std::move(row));
  }
  mr.save(a.out_markers);
}

struct AblateArgs {
  std::string config, spacings, out;
  std::size_t count = 0;
  std::uint64_t seed = 0;
  bool count_set = false, seed_set = false;
};

void run_ablate(const AblateArgs& a) {
  const Config cfg = load_config(a.config);
  const auto j = nlohmann::json::parse(take_string([&] {
    char* s = nullptr;
    check(efbg_config_json(cfg.get(), &s));
    return s;
  }()));
  std::vector<double> spacings;
  if (a.spacings.empty()) {
    spacings = j["ablation"]["spacings_mm"].get<std::vector<double>>();
  } else {
    for (const auto& s : split_list(a.spacings)) {
      try {
        spacings.push_back(std::stod(s));
      } catch (const std::exception&) {
        throw Failure{EFBG_ERR_CONFIG, "bad spacing '" + s + "'"};
      }
    }
  }
  const std::size_t count = a.count_set ? a.count : j["ablation"]["count"].get<std::size_t>();
  const std::uint64_t seed = a.seed_set ? a.seed : j["ablation"]["seed"].get<std::uint64_t>();
  std::vector<double> med(spacings.size()), q1(spacings.size()), q3(spacings.size());
  std::vector<size_t> planes(spacings.size());
  check(efbg_ablation(cfg.get(), spacings.data(), spacings.size(), count, seed, med.data(), q1.data(), q3.data(),
                      planes.data()));
  Report r("ablate", config_hash(cfg.get()), {{"shapes", seed}},
           {"spacing_mm", "planes", "count", "tip_median_mm", "tip_q1_mm", "tip_q3_mm"});
  for (std::size_t k = 0; k < spacings.size(); ++k) {
    r.row({num(spacings[k]), std::to_string(planes[k]), std::to_string(count), num(med[k]), num(q1[k]), num(q3[k])});
  }
  r.save(a.out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"edgefbg shape-sensing toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", efbg_version());

  const std::vector<std::string> kinds{"random", "trajectory", "template"};

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "Generate a synthetic dataset");
  g->add_option("--kind", gen.kind, "random | trajectory | template")->check(CLI::IsMember(kinds));
  g->add_option("--count", gen.count, "Samples (ignored for templates)");
  g->add_option("--seed", gen.seed, "Dataset seed");
  g->add_option("--config", gen.config, "Experiment config (JSON)");
  g->add_option("--out", gen.out, "Dataset file")->required();
  g->add_option("--csv", gen.csv, "Also export CSV");
  g->add_option("--report", gen.report, "Report path (default <out>.report.csv)");

  SplitArgs split;
  auto* sp = app.add_subcommand("split", "Split a dataset into train/val/test files");
  sp->add_option("--dataset", split.dataset)->required();
  sp->add_option("--config", split.config);
  auto* split_seed = sp->add_option("--seed", split.seed, "Split seed (default from config)");
  sp->add_option("--out-prefix", split.prefix, "Writes <prefix>_{train,val,test}.efbg")->required();
  sp->add_option("--report", split.report);

  CalibrateArgs cal;
  auto* c = app.add_subcommand("calibrate", "Fit the baseline calibration");
  c->add_option("--dataset", cal.dataset)->required();
  c->add_option("--config", cal.config);
  c->add_option("--out", cal.out, "Calibration file (JSON)")->required();
  c->add_option("--report", cal.report);

  DictArgs dict;
  auto* d = app.add_subcommand("dict", "Build the nearest-spectrum dictionary");
  d->add_option("--dataset", dict.dataset)->required();
  d->add_option("--config", dict.config);
  d->add_option("--out", dict.out)->required();
  d->add_option("--report", dict.report);

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Train the network");
  t->add_option("--train", train.train)->required();
  t->add_option("--val", train.val)->required();
  t->add_option("--config", train.config);
  t->add_option("--init", train.init, "Continue from a checkpoint");
  t->add_option("--out", train.out, "Checkpoint")->required();
  t->add_option("--report", train.report);
  t->add_flag("--quiet", train.quiet);

  TuneArgs tune;
  auto* tu = app.add_subcommand("tune", "Hyperparameter search with successive halving");
  tu->add_option("--train", tune.train)->required();
  tu->add_option("--val", tune.val)->required();
  tu->add_option("--config", tune.config);
  tu->add_option("--log", tune.log, "Trial log (JSON lines)")->required();
  tu->add_option("--report", tune.report);

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Tip error and RMSE per method");
  e->add_option("--dataset", ev.dataset)->required();
  e->add_option("--config", ev.config);
  e->add_option("--methods", ev.methods, "Comma-separated: bl, dl, dict");
  e->add_option("--model", ev.model);
  e->add_option("--calibration", ev.calibration);
  e->add_option("--dictionary", ev.dictionary);
  e->add_option("--out", ev.out, "Report")->required();

  ExplainArgs ex;
  auto* x = app.add_subcommand("explain", "Saliency maps for one sample");
  x->add_option("--model", ex.model)->required();
  x->add_option("--dataset", ex.dataset)->required();
  x->add_option("--config", ex.config);
  x->add_option("--sample-id", ex.sample)->required();
  x->add_option("--out-loss", ex.out_loss, "190 x 1 loss map")->required();
  x->add_option("--out-markers", ex.out_markers, "190 x 20 marker map")->required();

  AblateArgs ab;
  auto* a = app.add_subcommand("ablate", "Tip error versus sensing-plane spacing");
  a->add_option("--config", ab.config);
  a->add_option("--spacings", ab.spacings, "Comma-separated spacings in mm");
  auto* ab_count = a->add_option("--count", ab.count, "Random shapes");
  auto* ab_seed = a->add_option("--seed", ab.seed, "Shape seed");
  a->add_option("--out", ab.out, "Report")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& s) {
    return app.exit(s);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return 2;
  }

  try {
    if (*g) run_gen(gen);
    if (*sp) {
      split.seed_set = split_seed->count() > 0;
      run_split(split);
    }
    if (*c) run_calibrate(cal);
    if (*d) run_dict(dict);
    if (*t) run_train(train);
    if (*tu) run_tune(tune);
    if (*e) run_eval(ev);
    if (*x) run_explain(ex);
    if (*a) {
      ab.count_set = ab_count->count() > 0;
      ab.seed_set = ab_seed->count() > 0;
      run_ablate(ab);
    }
  } catch (const Failure& f) {
    std::fprintf(stderr, "efbg: %s: %s\n", efbg_status_name(f.status), f.message.c_str());
    return exit_code(f.status);
  } catch (const nlohmann::json::exception& err) {
    std::fprintf(stderr, "efbg: io: %s\n", err.what());
    return 3;
  }
  return 0;
}
