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

#include <cstdio>
#include <cstring>
#include <filesystem>

#include "doctest.h"
#include "efbg/config.hpp"
#include "efbg/error.hpp"
#include "efbg/io.hpp"

using namespace efbg;

namespace {

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return static_cast<Errc>(0);
}

Dataset small_dataset(std::size_t n = 6) {
  return generate_dataset(ScenarioKind::kRandom, n, default_layout(), EffectsConfig{}, ShapeSamplerConfig{}, 21);
}

// Rewrites the trailing checksum so structural checks can be reached.
void reseal(std::string& bytes) {
  const std::uint64_t h = fnv1a64(bytes.data(), bytes.size() - 8);
  std::memcpy(bytes.data() + bytes.size() - 8, &h, 8);
}

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / (std::string("efbg_test_") + name)).string();
}

}  // namespace

TEST_CASE("dataset files round-trip bitwise") {
  const Dataset ds = small_dataset();
  const std::string bytes = encode_dataset(ds);
  CHECK(bytes.substr(0, 8) == "EFBGDSET");
  const Dataset back = decode_dataset(bytes);
  CHECK(back.records == ds.records);
  CHECK(back.header.seed == ds.header.seed);
  CHECK(back.header.kind == ds.header.kind);
  CHECK(effects_json(back.header.effects) == effects_json(ds.header.effects));
  CHECK(layout_json(back.header.layout) == layout_json(ds.header.layout));
  CHECK(encode_dataset(back) == bytes);

  const std::string path = temp_path("ds.efbg");
  save_dataset(ds, path);
  CHECK(load_dataset(path).records == ds.records);
  std::filesystem::remove(path);
  CHECK(code_of([&] { load_dataset(path); }) == Errc::kIo);
}

TEST_CASE("corrupted dataset files are rejected before decoding") {
  const std::string bytes = encode_dataset(small_dataset(3));

  std::string truncated = bytes.substr(0, bytes.size() - 1);
  CHECK(code_of([&] { decode_dataset(truncated); }) == Errc::kIo);
  CHECK(code_of([&] { decode_dataset(bytes.substr(0, 10)); }) == Errc::kIo);

  std::string flipped = bytes;
  flipped[bytes.size() / 2] ^= 0x10;
  CHECK(code_of([&] { decode_dataset(flipped); }) == Errc::kIo);

  std::string magic = bytes;
  magic[0] = 'X';
  reseal(magic);
  CHECK(code_of([&] { decode_dataset(magic); }) == Errc::kIo);

  std::string version = bytes;
  version[8] = 9;
  reseal(version);
  CHECK(code_of([&] { decode_dataset(version); }) == Errc::kIo);

  // A record dropped from the payload no longer matches the header count.
  std::string short_payload = bytes.substr(0, bytes.size() - 8 - dataset_record_bytes()) + std::string(8, '\0');
  reseal(short_payload);
  CHECK(code_of([&] { decode_dataset(short_payload); }) == Errc::kIo);
}

TEST_CASE("checkpoints restore identical predictions") {
  const Dataset ds = small_dataset(4);
  nn::Model<float> model(nn::scaled_architecture(32), 3);
  nn::TrainConfig cfg;
  cfg.batch_size = 2;
  cfg.epochs = 1;
  nn::train(model, std::span(ds.records), std::span(ds.records), cfg);
  const CheckpointMeta meta{"abc", 3, 1, 2.5};
  const std::string bytes = encode_checkpoint(model, meta);
  const LoadedCheckpoint ck = decode_checkpoint(bytes);
  CHECK_FALSE(ck.float64);
  CHECK_FALSE(ck.has_optimizer);
  CHECK(ck.meta.config_hash == "abc");
  CHECK(ck.meta.best_val_rmse_mm == 2.5);
  auto restored = ck.instantiate<float>();
  CHECK(nn::predict_batch(restored, std::span(ds.records)) == nn::predict_batch(model, std::span(ds.records)));

  nn::Model<double> dmodel(nn::scaled_architecture(16), 4);
  auto dback = decode_checkpoint(encode_checkpoint(dmodel, meta)).instantiate<double>();
  CHECK(nn::predict_batch(dback, std::span(ds.records)) == nn::predict_batch(dmodel, std::span(ds.records)));

  // Optimizer moments survive, so training resumes on the same path.
  nn::Adam<double> adam(nn::AdamOptions{.lr = 1e-3});
  nn::TrainConfig dcfg = cfg;
  dcfg.learning_rate = 1e-3;
  nn::train(dmodel, std::span(ds.records), std::span(ds.records), dcfg, &adam);
  const auto ck2 = decode_checkpoint(encode_checkpoint(dmodel, meta, &adam));
  REQUIRE(ck2.has_optimizer);
  auto resumed = ck2.instantiate<double>();
  auto radam = ck2.restore_optimizer(resumed);
  CHECK(radam.steps() == adam.steps());
  CHECK(radam.first_moments() == adam.first_moments());
  CHECK(radam.second_moments() == adam.second_moments());
  CHECK(bytes.find("\"shape_trace\"") != std::string::npos);

  std::string bad = bytes;
  bad[bad.size() - 20] ^= 1;
  CHECK(code_of([&] { decode_checkpoint(bad); }) == Errc::kIo);
}

TEST_CASE("calibration and dictionary files") {
  const Dataset ds = small_dataset(40);
  const BlCalibration calib = calibrate(ds);
  const BlCalibration back = parse_calibration(calibration_json(calib));
  for (std::size_t i = 0; i < kFbgCount; ++i) {
    CHECK(back.fbgs[i].phi == calib.fbgs[i].phi);
    CHECK(back.fbgs[i].gain == calib.fbgs[i].gain);
    CHECK(back.fbgs[i].i0 == calib.fbgs[i].i0);
  }
  CHECK(back.plane_positions == calib.plane_positions);
  CHECK(code_of([] { parse_calibration("{\"length\": 0.3}"); }) == Errc::kIo);

  const auto dict = SpectrumDictionary::build(std::span(ds.records));
  const std::string bytes = encode_dictionary(dict);
  const auto dback = decode_dictionary(bytes);
  REQUIRE(dback.size() == dict.size());
  CHECK(dback.norms() == dict.norms());
  const auto q = dback.query(ds.records[7].spectra);
  CHECK(q.index == 7);
  CHECK(q.distance == 0.0);

  // A norm sidecar that disagrees with the entries is caught.
  std::string tampered = bytes;
  tampered[tampered.size() - 9] ^= 0x01;
  reseal(tampered);
  CHECK(code_of([&] { decode_dictionary(tampered); }) == Errc::kIo);
}

TEST_CASE("strict experiment config") {
  const ExperimentConfig def = parse_config("{}");
  CHECK(def.train.batch_size == 256);
  CHECK(def.model.architecture == "scaled");
  CHECK(def.split.train == 0.8);

  const auto c = parse_config(R"({"train": {"epochs": 3, "seed": 9}, "effects": {"fresnel": {"enabled": false}}})");
  CHECK(c.train.epochs == 3);
  CHECK(c.train.seed == 9);
  CHECK_FALSE(c.effects.fresnel.enabled);
  CHECK(c.effects.pdl.enabled);

  CHECK(code_of([] { parse_config(R"({"trian": {}})"); }) == Errc::kConfig);
  CHECK(code_of([] { parse_config(R"({"effects": {"fresnel": {"enabld": false}}})"); }) == Errc::kConfig);
  CHECK(code_of([] { parse_config(R"({"train": {"epochs": "ten"}})"); }) == Errc::kConfig);
  CHECK(code_of([] { parse_config(R"({"train": {"seed": -1}})"); }) == Errc::kConfig);
  CHECK(code_of([] { parse_config("{not json"); }) == Errc::kConfig);
  CHECK(code_of([] { parse_config(R"({"split": {"train": 0.9}})"); }) == Errc::kConfig);
  CHECK(code_of([] { parse_config(R"({"model": {"architecture": "huge"}})"); }) == Errc::kConfig);
  CHECK(code_of([] { parse_config(R"({"effects": {"noise_sigma": -1}})"); }) == Errc::kConfig);
  CHECK(code_of([] { load_config("/nonexistent/config.json"); }) == Errc::kIo);

  // The resolved document parses back to itself.
  const std::string doc = config_json(c);
  CHECK(config_json(parse_config(doc)) == doc);
  CHECK(config_hash(parse_config(doc)) == config_hash(c));
  CHECK(config_hash(c) != config_hash(def));
  CHECK(config_hash(c).size() == 16);

  const auto custom = parse_config(R"({"model": {"architecture": "custom",
      "layers": [{"kind": "flatten"}, {"kind": "fc", "units": 60}]}})");
  CHECK(custom.model.build().layers.size() == 2);
  CHECK(parse_model_config(model_config_json(nn::scaled_architecture())).layers ==
        nn::scaled_architecture().layers);
}

TEST_CASE("csv reports carry provenance") {
  CsvReport r("demo", "0123456789abcdef", {{"data", 5}, {"train", 7}}, {"method", "median_mm"});
  r.add_row({"bl", CsvReport::num(1.5)});
  r.add_row({"a,b", CsvReport::num(2.0, 2)});
  CHECK(r.str() ==
        "# report: demo\n# config_hash: 0123456789abcdef\n# seeds: data=5 train=7\n"
        "method,median_mm\nbl,1.500000\n\"a,b\",2.00\n");
  CHECK_THROWS_AS(r.add_row({"x"}), Error);
}
