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

#include "efbg/io.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <ostream>
#include <sstream>

#include "efbg/config.hpp"
#include "efbg/error.hpp"
#include "json.hpp"

namespace efbg {

namespace {

using Json = nlohmann::ordered_json;

constexpr char kDatasetMagic[8] = {'E', 'F', 'B', 'G', 'D', 'S', 'E', 'T'};
constexpr char kCheckpointMagic[8] = {'E', 'F', 'B', 'G', 'C', 'K', 'P', 'T'};
constexpr char kDictionaryMagic[8] = {'E', 'F', 'B', 'G', 'D', 'I', 'C', 'T'};
constexpr std::uint64_t kMaxHeaderBytes = 1u << 24;

template <typename U>
U to_little(U v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    U out = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) out = static_cast<U>((out << 8) | ((v >> (8 * i)) & 0xff));
    return out;
  }
}

class ByteWriter {
 public:
  void raw(const void* p, std::size_t n) { buf_.append(static_cast<const char*>(p), n); }
  template <typename U>
  void uint(U v) {
    v = to_little(v);
    raw(&v, sizeof v);
  }
  void f32(float v) { uint(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { uint(std::bit_cast<std::uint64_t>(v)); }
  void header(const char (&magic)[8], std::uint32_t version, const std::string& json) {
    raw(magic, 8);
    uint<std::uint32_t>(version);
    uint<std::uint64_t>(json.size());
    raw(json.data(), json.size());
  }
  std::string finish() {
    uint<std::uint64_t>(fnv1a64(buf_.data(), buf_.size()));
    return std::move(buf_);
  }

 private:
  std::string buf_;
};

class ByteReader {
 public:
  ByteReader(const std::string& bytes, const char* what) : b_(bytes), what_(what) {}

  void need(std::size_t n) const {
    require(pos_ + n <= end_, Errc::kIo, std::string(what_) + " file is truncated");
  }
  template <typename U>
  U uint() {
    need(sizeof(U));
    U v;
    std::memcpy(&v, b_.data() + pos_, sizeof v);
    pos_ += sizeof v;
    return to_little(v);
  }
  float f32() { return std::bit_cast<float>(uint<std::uint32_t>()); }
  double f64() { return std::bit_cast<double>(uint<std::uint64_t>()); }
  std::string str(std::size_t n) {
    need(n);
    std::string s = b_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  // Magic, checksum and version; returns the JSON header text.
  std::string open(const char (&magic)[8], std::uint32_t version) {
    require(b_.size() >= 8 + 4 + 8 + 8, Errc::kIo, std::string(what_) + " file is truncated");
    require(std::memcmp(b_.data(), magic, 8) == 0, Errc::kIo, std::string(what_) + " file has a bad magic");
    end_ = b_.size() - 8;
    std::uint64_t stored;
    std::memcpy(&stored, b_.data() + end_, 8);
    require(to_little(stored) == fnv1a64(b_.data(), end_), Errc::kIo,
            std::string(what_) + " file checksum mismatch");
    pos_ = 8;
    const auto v = uint<std::uint32_t>();
    require(v == version, Errc::kIo, std::string(what_) + " file has unsupported version " + std::to_string(v));
    const auto len = uint<std::uint64_t>();
    require(len <= kMaxHeaderBytes, Errc::kIo, std::string(what_) + " header is too large");
    return str(static_cast<std::size_t>(len));
  }
  std::size_t remaining() const { return end_ - pos_; }

 private:
  const std::string& b_;
  const char* what_;
  std::size_t pos_ = 0;
  std::size_t end_ = 0;
};

Json parse_header(const std::string& text, const char* what) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::exception&) {
    fail(Errc::kIo, std::string(what) + " header is not valid JSON");
  }
}

// Header sections are re-parsed strictly; any problem is a file problem.
template <typename Fn>
auto header_field(const char* what, Fn&& fn) {
  try {
    return fn();
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::kIo, std::string(what) + " header: " + e.what());
  } catch (const Error& e) {
    fail(Errc::kIo, std::string(what) + " header: " + e.what());
  }
}

std::string format_double(double v, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

// ---- files ----------------------------------------------------------------

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), Errc::kIo, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  require(!in.bad(), Errc::kIo, "cannot read " + path);
  return ss.str();
}

void write_file(const std::string& path, const std::string& bytes) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(out.good(), Errc::kIo, "cannot create " + tmp);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    require(out.good(), Errc::kIo, "cannot write " + tmp);
  }
  require(std::rename(tmp.c_str(), path.c_str()) == 0, Errc::kIo, "cannot move " + tmp + " to " + path);
}

// ---- datasets ---------------------------------------------------------------

std::size_t dataset_record_bytes() noexcept {
  return 8 + 1 + 4 + 4 * (kFeatureSize + kTargetSize + 2 * kPlaneCount + 1);
}

std::string encode_dataset(const Dataset& ds) {
  Json h;
  h["format_version"] = kDatasetFormatVersion;
  h["kind"] = scenario_name(ds.header.kind);
  h["seed"] = ds.header.seed;
  h["count"] = ds.records.size();
  h["layout"] = Json::parse(layout_json(ds.header.layout));
  h["effects"] = Json::parse(effects_json(ds.header.effects));
  h["sampler"] = Json::parse(sampler_json(ds.header.sampler));
  ByteWriter w;
  w.header(kDatasetMagic, kDatasetFormatVersion, h.dump());
  for (const auto& r : ds.records) {
    w.uint<std::uint64_t>(r.seed);
    w.uint<std::uint8_t>(static_cast<std::uint8_t>(r.scenario));
    w.uint<std::uint32_t>(r.group);
    for (float v : r.spectra) w.f32(v);
    for (float v : r.shape_mm) w.f32(v);
    for (float v : r.plane_truth) w.f32(v);
    w.f32(r.max_kappa);
  }
  return w.finish();
}

Dataset decode_dataset(const std::string& bytes) {
  ByteReader rd(bytes, "dataset");
  const Json h = parse_header(rd.open(kDatasetMagic, kDatasetFormatVersion), "dataset");
  Dataset ds;
  const std::size_t count = header_field("dataset", [&] {
    ds.header.version = h.at("format_version").get<std::uint32_t>();
    ds.header.kind = parse_scenario(h.at("kind").get<std::string>());
    ds.header.seed = h.at("seed").get<std::uint64_t>();
    ds.header.layout = parse_layout(h.at("layout").dump());
    ds.header.layout.validate();
    ds.header.effects = parse_effects(h.at("effects").dump());
    ds.header.sampler = parse_sampler(h.at("sampler").dump());
    return h.at("count").get<std::size_t>();
  });
  require(rd.remaining() == count * dataset_record_bytes(), Errc::kIo,
          "dataset record count does not match the header");
  ds.records.resize(count);
  for (auto& r : ds.records) {
    r.seed = rd.uint<std::uint64_t>();
    const auto kind = rd.uint<std::uint8_t>();
    require(kind <= static_cast<std::uint8_t>(ScenarioKind::kTemplate), Errc::kIo, "dataset record has a bad kind");
    r.scenario = static_cast<ScenarioKind>(kind);
    r.group = rd.uint<std::uint32_t>();
    for (float& v : r.spectra) v = rd.f32();
    for (float& v : r.shape_mm) v = rd.f32();
    for (float& v : r.plane_truth) v = rd.f32();
    r.max_kappa = rd.f32();
  }
  return ds;
}

void save_dataset(const Dataset& ds, const std::string& path) { write_file(path, encode_dataset(ds)); }

Dataset load_dataset(const std::string& path) { return decode_dataset(read_file(path)); }

void write_dataset_csv(const Dataset& ds, std::ostream& out) {
  out << "index,seed,kind,group";
  for (std::size_t c = 0; c < kScanCount; ++c) {
    for (std::size_t j = 0; j < kGridSize; ++j) out << ",s" << c << "_" << j;
  }
  for (std::size_t m = 0; m < kMarkerCount; ++m) out << ",m" << m << "_x,m" << m << "_y,m" << m << "_z";
  out << "\n";
  char buf[32];
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    const auto& r = ds.records[i];
    out << i << "," << r.seed << "," << scenario_name(r.scenario) << "," << r.group;
    for (float v : r.spectra) {
      std::snprintf(buf, sizeof buf, ",%.9g", static_cast<double>(v));
      out << buf;
    }
    for (float v : r.shape_mm) {
      std::snprintf(buf, sizeof buf, ",%.9g", static_cast<double>(v));
      out << buf;
    }
    out << "\n";
  }
}

// ---- checkpoints ------------------------------------------------------------

template <typename T>
std::string encode_checkpoint(nn::Model<T>& model, const CheckpointMeta& meta, const nn::Adam<T>* optimizer) {
  Json h;
  h["format_version"] = kCheckpointFormatVersion;
  h["model"] = Json::parse(model_config_json(model.config()));
  Json trace = Json::array();
  for (const auto& shape : model.config().shape_trace()) trace.push_back(nn::shape_string(shape));
  h["shape_trace"] = trace;
  h["float64"] = std::is_same_v<T, double>;
  h["config_hash"] = meta.config_hash;
  h["seed"] = meta.seed;
  h["epochs"] = meta.epochs;
  h["best_val_rmse_mm"] = meta.best_val_rmse_mm;
  std::vector<double> values;
  const auto params = model.parameters();
  for (const auto& p : params) values.insert(values.end(), p.value.begin(), p.value.end());
  for (const auto& b : model.buffers()) values.insert(values.end(), b.begin(), b.end());
  h["values"] = values.size();

  std::vector<double> moments;
  if (optimizer != nullptr && optimizer->steps() > 0) {
    for (const auto* set : {&optimizer->first_moments(), &optimizer->second_moments()}) {
      require(set->size() == params.size(), Errc::kState, "optimizer state does not match the model");
      for (const auto& m : *set) moments.insert(moments.end(), m.begin(), m.end());
    }
    const auto& o = optimizer->options();
    h["optimizer"] = {{"kind", "adam"}, {"steps", optimizer->steps()}, {"lr", o.lr}, {"beta1", o.beta1},
                      {"beta2", o.beta2}, {"eps", o.eps}, {"l2", o.l2}, {"moments", moments.size()}};
  }
  ByteWriter w;
  w.header(kCheckpointMagic, kCheckpointFormatVersion, h.dump());
  for (double v : values) w.f64(v);
  for (double v : moments) w.f64(v);
  return w.finish();
}

template <typename T>
void save_checkpoint(nn::Model<T>& model, const CheckpointMeta& meta, const std::string& path,
                     const nn::Adam<T>* optimizer) {
  write_file(path, encode_checkpoint(model, meta, optimizer));
}

LoadedCheckpoint decode_checkpoint(const std::string& bytes) {
  ByteReader rd(bytes, "checkpoint");
  const Json h = parse_header(rd.open(kCheckpointMagic, kCheckpointFormatVersion), "checkpoint");
  LoadedCheckpoint ck;
  std::size_t n_moments = 0;
  const std::size_t n = header_field("checkpoint", [&] {
    ck.config = parse_model_config(h.at("model").dump());
    ck.config.validate();
    ck.float64 = h.at("float64").get<bool>();
    ck.meta.config_hash = h.at("config_hash").get<std::string>();
    ck.meta.seed = h.at("seed").get<std::uint64_t>();
    ck.meta.epochs = h.at("epochs").get<std::size_t>();
    ck.meta.best_val_rmse_mm = h.at("best_val_rmse_mm").get<double>();
    if (h.contains("optimizer")) {
      const auto& o = h.at("optimizer");
      ck.has_optimizer = true;
      ck.adam_steps = o.at("steps").get<std::uint64_t>();
      ck.adam.lr = o.at("lr").get<double>();
      ck.adam.beta1 = o.at("beta1").get<double>();
      ck.adam.beta2 = o.at("beta2").get<double>();
      ck.adam.eps = o.at("eps").get<double>();
      ck.adam.l2 = o.at("l2").get<double>();
      n_moments = o.at("moments").get<std::size_t>();
    }
    return h.at("values").get<std::size_t>();
  });
  require(n_moments % 2 == 0 && rd.remaining() == (n + n_moments) * 8, Errc::kIo,
          "checkpoint value count does not match the header");
  ck.values.resize(n);
  for (double& v : ck.values) v = rd.f64();
  ck.first_moments.resize(n_moments / 2);
  ck.second_moments.resize(n_moments / 2);
  for (double& v : ck.first_moments) v = rd.f64();
  for (double& v : ck.second_moments) v = rd.f64();
  return ck;
}

LoadedCheckpoint load_checkpoint(const std::string& path) { return decode_checkpoint(read_file(path)); }

template <typename T>
nn::Model<T> LoadedCheckpoint::instantiate() const {
  nn::Model<T> model(config, meta.seed);
  std::size_t k = 0;
  auto take = [&](std::span<T> dst) {
    require(k + dst.size() <= values.size(), Errc::kIo, "checkpoint holds too few values for its model");
    for (auto& v : dst) v = static_cast<T>(values[k++]);
  };
  for (auto& p : model.parameters()) take(p.value);
  for (auto& b : model.buffers()) take(b);
  require(k == values.size(), Errc::kIo, "checkpoint holds too many values for its model");
  return model;
}

template <typename T>
nn::Adam<T> LoadedCheckpoint::restore_optimizer(nn::Model<T>& model) const {
  nn::Adam<T> opt(has_optimizer ? adam : nn::AdamOptions{});
  if (!has_optimizer) return opt;
  std::size_t k = 0;
  for (const auto& p : model.parameters()) {
    const std::size_t n = p.value.size();
    require(k + n <= first_moments.size(), Errc::kIo, "checkpoint optimizer state is too short");
    opt.first_moments().emplace_back(first_moments.begin() + k, first_moments.begin() + k + n);
    opt.second_moments().emplace_back(second_moments.begin() + k, second_moments.begin() + k + n);
    k += n;
  }
  require(k == first_moments.size(), Errc::kIo, "checkpoint optimizer state does not match its model");
  opt.set_steps(adam_steps);
  return opt;
}

// ---- calibration ------------------------------------------------------------

std::string calibration_json(const BlCalibration& c) {
  Json j;
  j["length"] = c.length;
  j["plane_positions"] = c.plane_positions;
  Json fbgs = Json::array();
  for (const auto& f : c.fbgs) {
    fbgs.push_back({{"phi", f.phi}, {"gain", f.gain}, {"i0", f.i0}, {"residual_rms", f.residual_rms}});
  }
  j["fbgs"] = fbgs;
  return j.dump(2);
}

BlCalibration parse_calibration(const std::string& text) {
  const Json j = parse_header(text, "calibration");
  return header_field("calibration", [&] {
    BlCalibration c;
    c.length = j.at("length").get<double>();
    c.plane_positions = j.at("plane_positions").get<std::array<double, kPlaneCount>>();
    const auto& fbgs = j.at("fbgs");
    require(fbgs.is_array() && fbgs.size() == kFbgCount, Errc::kIo, "calibration needs 15 FBG entries");
    for (std::size_t i = 0; i < kFbgCount; ++i) {
      c.fbgs[i].phi = fbgs[i].at("phi").get<double>();
      c.fbgs[i].gain = fbgs[i].at("gain").get<double>();
      c.fbgs[i].i0 = fbgs[i].at("i0").get<double>();
      c.fbgs[i].residual_rms = fbgs[i].at("residual_rms").get<double>();
      require(fbgs[i].size() == 4, Errc::kIo, "calibration entry has unknown keys");
    }
    require(j.size() == 3, Errc::kIo, "calibration has unknown keys");
    return c;
  });
}

void save_calibration(const BlCalibration& calib, const std::string& path) {
  write_file(path, calibration_json(calib) + "\n");
}

BlCalibration load_calibration(const std::string& path) { return parse_calibration(read_file(path)); }

// ---- dictionary -------------------------------------------------------------

std::string encode_dictionary(const SpectrumDictionary& dict) {
  Json h;
  h["format_version"] = kDictionaryFormatVersion;
  h["entries"] = dict.size();
  ByteWriter w;
  w.header(kDictionaryMagic, kDictionaryFormatVersion, h.dump());
  for (std::size_t i = 0; i < dict.size(); ++i) {
    for (float v : dict.features(i)) w.f32(v);
    for (float v : dict.shape_mm(i)) w.f32(v);
  }
  for (double n : dict.norms()) w.f64(n);
  return w.finish();
}

SpectrumDictionary decode_dictionary(const std::string& bytes) {
  ByteReader rd(bytes, "dictionary");
  const Json h = parse_header(rd.open(kDictionaryMagic, kDictionaryFormatVersion), "dictionary");
  const std::size_t n = header_field("dictionary", [&] { return h.at("entries").get<std::size_t>(); });
  require(n >= 1 && rd.remaining() == n * (4 * (kFeatureSize + kTargetSize) + 8), Errc::kIo,
          "dictionary entry count does not match the header");
  std::vector<SampleRecord> recs(n);
  for (auto& r : recs) {
    for (float& v : r.spectra) v = rd.f32();
    for (float& v : r.shape_mm) v = rd.f32();
  }
  SpectrumDictionary dict = SpectrumDictionary::build(recs);
  for (std::size_t i = 0; i < n; ++i) {
    require(rd.f64() == dict.norms()[i], Errc::kIo, "dictionary norm sidecar does not match its entries");
  }
  return dict;
}

void save_dictionary(const SpectrumDictionary& dict, const std::string& path) {
  write_file(path, encode_dictionary(dict));
}

SpectrumDictionary load_dictionary(const std::string& path) { return decode_dictionary(read_file(path)); }

// ---- reports ----------------------------------------------------------------

CsvReport::CsvReport(std::string name, std::string config_hash,
                     std::vector<std::pair<std::string, std::uint64_t>> seeds, std::vector<std::string> columns)
    : name_(std::move(name)), hash_(std::move(config_hash)), seeds_(std::move(seeds)), columns_(std::move(columns)) {}

void CsvReport::add_row(std::vector<std::string> cells) {
  require(cells.size() == columns_.size(), Errc::kInvalidInput, "report row width does not match its header");
  rows_.push_back(std::move(cells));
}

std::string CsvReport::num(double v, int precision) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return format_double(v, precision);
}

std::string CsvReport::str() const {
  std::string out = "# report: " + name_ + "\n# config_hash: " + hash_ + "\n# seeds:";
  for (const auto& [k, v] : seeds_) out += " " + k + "=" + std::to_string(v);
  out += "\n";
  for (std::size_t i = 0; i < columns_.size(); ++i) out += (i ? "," : "") + csv_escape(columns_[i]);
  out += "\n";
  for (const auto& row : rows_) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + csv_escape(row[i]);
    out += "\n";
  }
  return out;
}

void CsvReport::save(const std::string& path) const { write_file(path, str()); }

template std::string encode_checkpoint<float>(nn::Model<float>&, const CheckpointMeta&, const nn::Adam<float>*);
template std::string encode_checkpoint<double>(nn::Model<double>&, const CheckpointMeta&, const nn::Adam<double>*);
template void save_checkpoint<float>(nn::Model<float>&, const CheckpointMeta&, const std::string&,
                                     const nn::Adam<float>*);
template void save_checkpoint<double>(nn::Model<double>&, const CheckpointMeta&, const std::string&,
                                      const nn::Adam<double>*);
template nn::Model<float> LoadedCheckpoint::instantiate<float>() const;
template nn::Model<double> LoadedCheckpoint::instantiate<double>() const;
template nn::Adam<float> LoadedCheckpoint::restore_optimizer<float>(nn::Model<float>&) const;
template nn::Adam<double> LoadedCheckpoint::restore_optimizer<double>(nn::Model<double>&) const;

}  // namespace efbg
