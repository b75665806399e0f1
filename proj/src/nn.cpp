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

#include "efbg/nn.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "efbg/error.hpp"

namespace efbg::nn {

namespace {

template <typename T>
using MatRM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using Map = Eigen::Map<MatRM<T>>;
template <typename T>
using CMap = Eigen::Map<const MatRM<T>>;

using Kind = LayerSpec::Kind;

std::size_t channels_of(const Shape& s) { return s.at(0); }
std::size_t length_of(const Shape& s) { return s.size() == 2 ? s[1] : 1; }

// Per-sample output shape of one layer; throws kInvalidInput on misuse.
Shape output_shape(const LayerSpec& l, const Shape& in) {
  require(!in.empty() && numel(in) > 0, Errc::kInvalidInput, "empty layer input");
  switch (l.kind) {
    case Kind::kConv1D: {
      require(in.size() == 2, Errc::kInvalidInput, "Conv1D needs a [C, L] input");
      require(l.out_channels >= 1 && l.kernel >= 1 && l.stride >= 1, Errc::kInvalidInput,
              "Conv1D needs channels, kernel and stride >= 1");
      const std::size_t padded = in[1] + 2 * l.padding;
      require(padded >= l.kernel, Errc::kInvalidInput, "Conv1D kernel longer than its input");
      return {l.out_channels, (padded - l.kernel) / l.stride + 1};
    }
    case Kind::kMaxPool1D: {
      require(in.size() == 2, Errc::kInvalidInput, "MaxPool1D needs a [C, L] input");
      require(l.kernel >= 1 && l.stride >= 1, Errc::kInvalidInput, "pool kernel and stride >= 1");
      require(in[1] >= l.kernel, Errc::kInvalidInput,
              "MaxPool1D kernel longer than its input (length " + std::to_string(in[1]) + ")");
      return {in[0], (in[1] - l.kernel) / l.stride + 1};
    }
    case Kind::kBatchNorm1D:
      require(l.eps > 0 && l.momentum >= 0 && l.momentum <= 1, Errc::kInvalidInput,
              "BatchNorm1D needs eps > 0 and momentum in [0, 1]");
      return in;
    case Kind::kDropout:
      require(l.p >= 0 && l.p < 1, Errc::kInvalidInput, "dropout p must lie in [0, 1)");
      return in;
    case Kind::kFullyConnected:
      require(l.units >= 1, Errc::kInvalidInput, "FullyConnected needs units >= 1");
      return {l.units};
    case Kind::kReLU:
      return in;
    case Kind::kFlatten:
      return {numel(in)};
  }
  fail(Errc::kInvalidInput, "unknown layer kind");
}

template <typename T>
void fill_weights(std::span<T> w, InitScheme scheme, double fan_in, double fan_out, Rng& rng) {
  auto uniform = [&](double bound) {
    std::uniform_real_distribution<double> d(-bound, bound);
    for (auto& x : w) x = static_cast<T>(d(rng));
  };
  auto normal = [&](double sd) {
    std::normal_distribution<double> d(0.0, sd);
    for (auto& x : w) x = static_cast<T>(d(rng));
  };
  switch (scheme) {
    case InitScheme::kStandard: uniform(1.0 / std::sqrt(fan_in)); break;
    case InitScheme::kXavierUniform: uniform(std::sqrt(6.0 / (fan_in + fan_out))); break;
    case InitScheme::kXavierNormal: normal(std::sqrt(2.0 / (fan_in + fan_out))); break;
    case InitScheme::kKaimingUniform: uniform(std::sqrt(6.0 / fan_in)); break;
    case InitScheme::kKaimingNormal: normal(std::sqrt(2.0 / fan_in)); break;
  }
}

template <typename T>
void fill_bias(std::span<T> b, InitScheme scheme, double fan_in, Rng& rng) {
  if (scheme == InitScheme::kStandard) {
    const double bound = 1.0 / std::sqrt(fan_in);
    std::uniform_real_distribution<double> d(-bound, bound);
    for (auto& x : b) x = static_cast<T>(d(rng));
  } else {
    std::fill(b.begin(), b.end(), T(0));
  }
}

template <typename T>
void require_shape(const Tensor<T>& x, const Shape& per_sample, const char* who) {
  require(x.shape.size() == per_sample.size() + 1 &&
              std::equal(per_sample.begin(), per_sample.end(), x.shape.begin() + 1),
          Errc::kInvalidInput,
          std::string(who) + " expected [B, " + shape_string(per_sample).substr(1) + " got " +
              shape_string(x.shape));
  require(x.batch() >= 1, Errc::kInvalidInput, std::string(who) + " got an empty batch");
}

Shape with_batch(std::size_t b, const Shape& s) {
  Shape out{b};
  out.insert(out.end(), s.begin(), s.end());
  return out;
}

// ---------------------------------------------------------------------------

template <typename T>
class Conv1D final : public Layer<T> {
 public:
  Conv1D(const LayerSpec& spec, const Shape& in)
      : spec_(spec), in_(in), out_(output_shape(spec, in)) {
    cin_ = in[0];
    lin_ = in[1];
    lout_ = out_[1];
    w_.assign(spec.out_channels * cin_ * spec.kernel, T(0));
    b_.assign(spec.out_channels, T(0));
    gw_.assign(w_.size(), T(0));
    gb_.assign(b_.size(), T(0));
  }

  const LayerSpec& spec() const override { return spec_; }

  Tensor<T> forward(const Tensor<T>& x, bool train) override {
    require_shape(x, in_, "Conv1D");
    const std::size_t bsz = x.batch();
    const std::size_t rows = cin_ * spec_.kernel;
    const std::size_t cols = bsz * lout_;
    std::vector<T> local;
    std::vector<T>& buf = train ? cols_ : local;
    buf.assign(rows * cols, T(0));
    for (std::size_t b = 0; b < bsz; ++b) {
      for (std::size_t c = 0; c < cin_; ++c) {
        const T* src = x.values.data() + (b * cin_ + c) * lin_;
        for (std::size_t k = 0; k < spec_.kernel; ++k) {
          T* dst = buf.data() + (c * spec_.kernel + k) * cols + b * lout_;
          for (std::size_t o = 0; o < lout_; ++o) {
            const auto pos = static_cast<std::ptrdiff_t>(o * spec_.stride + k) -
                             static_cast<std::ptrdiff_t>(spec_.padding);
            if (pos >= 0 && pos < static_cast<std::ptrdiff_t>(lin_)) dst[o] = src[pos];
          }
        }
      }
    }
    const std::size_t cout = spec_.out_channels;
    MatRM<T> y = CMap<T>(w_.data(), static_cast<Eigen::Index>(cout), static_cast<Eigen::Index>(rows)) *
                 CMap<T>(buf.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    Tensor<T> out(with_batch(bsz, out_));
    for (std::size_t b = 0; b < bsz; ++b) {
      for (std::size_t c = 0; c < cout; ++c) {
        T* dst = out.values.data() + (b * cout + c) * lout_;
        const T* src = y.data() + c * cols + b * lout_;
        for (std::size_t o = 0; o < lout_; ++o) dst[o] = src[o] + b_[c];
      }
    }
    if (train) batch_ = bsz;
    return out;
  }

  Tensor<T> backward(const Tensor<T>& g) override {
    require(batch_ > 0, Errc::kState, "Conv1D backward without a train-mode forward");
    const std::size_t bsz = batch_;
    const std::size_t cout = spec_.out_channels;
    const std::size_t rows = cin_ * spec_.kernel;
    const std::size_t cols = bsz * lout_;
    require(g.values.size() == bsz * cout * lout_, Errc::kInvalidInput, "Conv1D gradient shape");
    MatRM<T> gy(static_cast<Eigen::Index>(cout), static_cast<Eigen::Index>(cols));
    for (std::size_t b = 0; b < bsz; ++b) {
      for (std::size_t c = 0; c < cout; ++c) {
        const T* src = g.values.data() + (b * cout + c) * lout_;
        T* dst = gy.data() + c * cols + b * lout_;
        std::copy(src, src + lout_, dst);
      }
    }
    const CMap<T> colm(cols_.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    Map<T>(gw_.data(), static_cast<Eigen::Index>(cout), static_cast<Eigen::Index>(rows)).noalias() +=
        gy * colm.transpose();
    for (std::size_t c = 0; c < cout; ++c) gb_[c] += gy.row(static_cast<Eigen::Index>(c)).sum();
    const MatRM<T> gcols =
        CMap<T>(w_.data(), static_cast<Eigen::Index>(cout), static_cast<Eigen::Index>(rows)).transpose() * gy;

    Tensor<T> gx(with_batch(bsz, in_));
    for (std::size_t b = 0; b < bsz; ++b) {
      for (std::size_t c = 0; c < cin_; ++c) {
        T* dst = gx.values.data() + (b * cin_ + c) * lin_;
        for (std::size_t k = 0; k < spec_.kernel; ++k) {
          const T* src = gcols.data() + (c * spec_.kernel + k) * cols + b * lout_;
          for (std::size_t o = 0; o < lout_; ++o) {
            const auto pos = static_cast<std::ptrdiff_t>(o * spec_.stride + k) -
                             static_cast<std::ptrdiff_t>(spec_.padding);
            if (pos >= 0 && pos < static_cast<std::ptrdiff_t>(lin_)) dst[pos] += src[o];
          }
        }
      }
    }
    return gx;
  }

  std::vector<ParamView<T>> params() override { return {{w_, gw_}, {b_, gb_}}; }

  void init(InitScheme scheme, Rng& rng) override {
    const double fan_in = static_cast<double>(cin_ * spec_.kernel);
    const double fan_out = static_cast<double>(spec_.out_channels * spec_.kernel);
    fill_weights<T>(w_, scheme, fan_in, fan_out, rng);
    fill_bias<T>(b_, scheme, fan_in, rng);
  }

  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Conv1D>(*this); }

 private:
  LayerSpec spec_;
  Shape in_, out_;
  std::size_t cin_ = 0, lin_ = 0, lout_ = 0, batch_ = 0;
  std::vector<T> w_, b_, gw_, gb_, cols_;
};

template <typename T>
class MaxPool1D final : public Layer<T> {
 public:
  MaxPool1D(const LayerSpec& spec, const Shape& in)
      : spec_(spec), in_(in), out_(output_shape(spec, in)) {}

  const LayerSpec& spec() const override { return spec_; }

  Tensor<T> forward(const Tensor<T>& x, bool train) override {
    require_shape(x, in_, "MaxPool1D");
    const std::size_t bsz = x.batch(), c = in_[0], lin = in_[1], lout = out_[1];
    Tensor<T> out(with_batch(bsz, out_));
    if (train) arg_.assign(out.size(), 0);
    for (std::size_t r = 0; r < bsz * c; ++r) {
      const T* src = x.values.data() + r * lin;
      for (std::size_t o = 0; o < lout; ++o) {
        std::size_t best = o * spec_.stride;
        for (std::size_t k = 1; k < spec_.kernel; ++k) {
          if (src[o * spec_.stride + k] > src[best]) best = o * spec_.stride + k;
        }
        out.values[r * lout + o] = src[best];
        if (train) arg_[r * lout + o] = r * lin + best;
      }
    }
    if (train) batch_ = bsz;
    return out;
  }

  Tensor<T> backward(const Tensor<T>& g) override {
    require(batch_ > 0, Errc::kState, "MaxPool1D backward without a train-mode forward");
    require(g.values.size() == arg_.size(), Errc::kInvalidInput, "MaxPool1D gradient shape");
    Tensor<T> gx(with_batch(batch_, in_));
    for (std::size_t i = 0; i < arg_.size(); ++i) gx.values[arg_[i]] += g.values[i];
    return gx;
  }

  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<MaxPool1D>(*this); }

 private:
  LayerSpec spec_;
  Shape in_, out_;
  std::size_t batch_ = 0;
  std::vector<std::size_t> arg_;
};

template <typename T>
class BatchNorm1D final : public Layer<T> {
 public:
  BatchNorm1D(const LayerSpec& spec, const Shape& in) : spec_(spec), in_(output_shape(spec, in)) {
    c_ = channels_of(in_);
    l_ = length_of(in_);
    gamma_.assign(c_, T(1));
    beta_.assign(c_, T(0));
    ggamma_.assign(c_, T(0));
    gbeta_.assign(c_, T(0));
    mean_.assign(c_, T(0));
    var_.assign(c_, T(1));
  }

  const LayerSpec& spec() const override { return spec_; }

  Tensor<T> forward(const Tensor<T>& x, bool train) override {
    require_shape(x, in_, "BatchNorm1D");
    const std::size_t bsz = x.batch();
    Tensor<T> out(x.shape);
    if (!train) {
      for (std::size_t b = 0; b < bsz; ++b) {
        for (std::size_t c = 0; c < c_; ++c) {
          const double scale = gamma_[c] / std::sqrt(static_cast<double>(var_[c]) + spec_.eps);
          const std::size_t base = (b * c_ + c) * l_;
          for (std::size_t i = 0; i < l_; ++i) {
            out.values[base + i] = static_cast<T>(
                (static_cast<double>(x.values[base + i]) - mean_[c]) * scale + beta_[c]);
          }
        }
      }
      return out;
    }
    require(bsz >= 2, Errc::kBatchTooSmall, "BatchNorm1D in train mode needs a batch of at least 2");
    const double n = static_cast<double>(bsz * l_);
    xhat_.assign(x.size(), T(0));
    invstd_.assign(c_, 0.0);
    for (std::size_t c = 0; c < c_; ++c) {
      double sum = 0;
      for (std::size_t b = 0; b < bsz; ++b) {
        const T* p = x.values.data() + (b * c_ + c) * l_;
        for (std::size_t i = 0; i < l_; ++i) sum += p[i];
      }
      const double mu = sum / n;
      double ss = 0;
      for (std::size_t b = 0; b < bsz; ++b) {
        const T* p = x.values.data() + (b * c_ + c) * l_;
        for (std::size_t i = 0; i < l_; ++i) ss += (p[i] - mu) * (p[i] - mu);
      }
      const double var = ss / n;
      const double inv = 1.0 / std::sqrt(var + spec_.eps);
      invstd_[c] = inv;
      for (std::size_t b = 0; b < bsz; ++b) {
        const std::size_t base = (b * c_ + c) * l_;
        for (std::size_t i = 0; i < l_; ++i) {
          const double xh = (x.values[base + i] - mu) * inv;
          xhat_[base + i] = static_cast<T>(xh);
          out.values[base + i] = static_cast<T>(gamma_[c] * xh + beta_[c]);
        }
      }
      const double m = spec_.momentum;
      mean_[c] = static_cast<T>((1 - m) * mean_[c] + m * mu);
      var_[c] = static_cast<T>((1 - m) * var_[c] + m * ss / (n - 1));
    }
    batch_ = bsz;
    return out;
  }

  Tensor<T> backward(const Tensor<T>& g) override {
    require(batch_ > 0, Errc::kState, "BatchNorm1D backward without a train-mode forward");
    require(g.values.size() == xhat_.size(), Errc::kInvalidInput, "BatchNorm1D gradient shape");
    const std::size_t bsz = batch_;
    const double n = static_cast<double>(bsz * l_);
    Tensor<T> gx(with_batch(bsz, in_));
    for (std::size_t c = 0; c < c_; ++c) {
      double sg = 0, sgx = 0;
      for (std::size_t b = 0; b < bsz; ++b) {
        const std::size_t base = (b * c_ + c) * l_;
        for (std::size_t i = 0; i < l_; ++i) {
          sg += g.values[base + i];
          sgx += static_cast<double>(g.values[base + i]) * xhat_[base + i];
        }
      }
      ggamma_[c] += static_cast<T>(sgx);
      gbeta_[c] += static_cast<T>(sg);
      const double k = gamma_[c] * invstd_[c] / n;
      for (std::size_t b = 0; b < bsz; ++b) {
        const std::size_t base = (b * c_ + c) * l_;
        for (std::size_t i = 0; i < l_; ++i) {
          gx.values[base + i] =
              static_cast<T>(k * (n * g.values[base + i] - sg - xhat_[base + i] * sgx));
        }
      }
    }
    return gx;
  }

  std::vector<ParamView<T>> params() override { return {{gamma_, ggamma_}, {beta_, gbeta_}}; }
  std::vector<std::span<T>> buffers() override { return {mean_, var_}; }

  void init(InitScheme, Rng&) override {
    std::fill(gamma_.begin(), gamma_.end(), T(1));
    std::fill(beta_.begin(), beta_.end(), T(0));
  }

  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<BatchNorm1D>(*this); }

 private:
  LayerSpec spec_;
  Shape in_;
  std::size_t c_ = 0, l_ = 0, batch_ = 0;
  std::vector<T> gamma_, beta_, ggamma_, gbeta_, mean_, var_, xhat_;
  std::vector<double> invstd_;
};

template <typename T>
class Dropout final : public Layer<T> {
 public:
  Dropout(const LayerSpec& spec, const Shape& in, Rng* rng)
      : spec_(spec), in_(output_shape(spec, in)), rng_(rng) {}

  const LayerSpec& spec() const override { return spec_; }

  Tensor<T> forward(const Tensor<T>& x, bool train) override {
    require_shape(x, in_, "Dropout");
    if (!train || spec_.p == 0) {
      if (train) {
        mask_.assign(x.size(), T(1));
        batch_ = x.batch();
      }
      return x;
    }
    require(rng_ != nullptr, Errc::kState, "Dropout has no random source");
    std::bernoulli_distribution keep(1.0 - spec_.p);
    const T scale = static_cast<T>(1.0 / (1.0 - spec_.p));
    mask_.resize(x.size());
    Tensor<T> out(x.shape);
    for (std::size_t i = 0; i < x.size(); ++i) {
      mask_[i] = keep(*rng_) ? scale : T(0);
      out.values[i] = x.values[i] * mask_[i];
    }
    batch_ = x.batch();
    return out;
  }

  Tensor<T> backward(const Tensor<T>& g) override {
    require(batch_ > 0, Errc::kState, "Dropout backward without a train-mode forward");
    require(g.values.size() == mask_.size(), Errc::kInvalidInput, "Dropout gradient shape");
    Tensor<T> gx(g.shape);
    for (std::size_t i = 0; i < mask_.size(); ++i) gx.values[i] = g.values[i] * mask_[i];
    return gx;
  }

  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Dropout>(*this); }
  void bind(Rng* rng) { rng_ = rng; }

 private:
  LayerSpec spec_;
  Shape in_;
  Rng* rng_;
  std::size_t batch_ = 0;
  std::vector<T> mask_;
};

template <typename T>
class FullyConnected final : public Layer<T> {
 public:
  FullyConnected(const LayerSpec& spec, const Shape& in)
      : spec_(spec), in_(in), fin_(numel(in)) {
    output_shape(spec, in);
    w_.assign(spec.units * fin_, T(0));
    b_.assign(spec.units, T(0));
    gw_.assign(w_.size(), T(0));
    gb_.assign(b_.size(), T(0));
  }

  const LayerSpec& spec() const override { return spec_; }

  Tensor<T> forward(const Tensor<T>& x, bool train) override {
    require_shape(x, in_, "FullyConnected");
    const auto bsz = static_cast<Eigen::Index>(x.batch());
    const auto fin = static_cast<Eigen::Index>(fin_);
    const auto units = static_cast<Eigen::Index>(spec_.units);
    Tensor<T> out({x.batch(), spec_.units});
    Map<T> y(out.values.data(), bsz, units);
    y.noalias() = CMap<T>(x.values.data(), bsz, fin) * CMap<T>(w_.data(), units, fin).transpose();
    y.rowwise() += Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>(b_.data(), units);
    if (train) {
      x_ = x.values;
      batch_ = x.batch();
    }
    return out;
  }

  Tensor<T> backward(const Tensor<T>& g) override {
    require(batch_ > 0, Errc::kState, "FullyConnected backward without a train-mode forward");
    const auto bsz = static_cast<Eigen::Index>(batch_);
    const auto fin = static_cast<Eigen::Index>(fin_);
    const auto units = static_cast<Eigen::Index>(spec_.units);
    require(g.values.size() == batch_ * spec_.units, Errc::kInvalidInput,
            "FullyConnected gradient shape");
    const CMap<T> gy(g.values.data(), bsz, units);
    Map<T>(gw_.data(), units, fin).noalias() += gy.transpose() * CMap<T>(x_.data(), bsz, fin);
    Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>>(gb_.data(), units) += gy.colwise().sum();
    Tensor<T> gx(with_batch(batch_, in_));
    Map<T>(gx.values.data(), bsz, fin).noalias() = gy * CMap<T>(w_.data(), units, fin);
    return gx;
  }

  std::vector<ParamView<T>> params() override { return {{w_, gw_}, {b_, gb_}}; }

  void init(InitScheme scheme, Rng& rng) override {
    fill_weights<T>(w_, scheme, static_cast<double>(fin_), static_cast<double>(spec_.units), rng);
    fill_bias<T>(b_, scheme, static_cast<double>(fin_), rng);
  }

  std::unique_ptr<Layer<T>> clone() const override {
    return std::make_unique<FullyConnected>(*this);
  }

 private:
  LayerSpec spec_;
  Shape in_;
  std::size_t fin_;
  std::size_t batch_ = 0;
  std::vector<T> w_, b_, gw_, gb_, x_;
};

template <typename T>
class ReLU final : public Layer<T> {
 public:
  ReLU(const LayerSpec& spec, const Shape& in) : spec_(spec), in_(in) {}

  const LayerSpec& spec() const override { return spec_; }

  Tensor<T> forward(const Tensor<T>& x, bool train) override {
    require_shape(x, in_, "ReLU");
    Tensor<T> out(x.shape);
    for (std::size_t i = 0; i < x.size(); ++i) out.values[i] = x.values[i] > T(0) ? x.values[i] : T(0);
    if (train) {
      active_.resize(x.size());
      for (std::size_t i = 0; i < x.size(); ++i) active_[i] = x.values[i] > T(0);
      batch_ = x.batch();
    }
    return out;
  }

  Tensor<T> backward(const Tensor<T>& g) override {
    require(batch_ > 0, Errc::kState, "ReLU backward without a train-mode forward");
    require(g.values.size() == active_.size(), Errc::kInvalidInput, "ReLU gradient shape");
    Tensor<T> gx(g.shape);
    for (std::size_t i = 0; i < active_.size(); ++i) gx.values[i] = active_[i] ? g.values[i] : T(0);
    return gx;
  }

  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<ReLU>(*this); }

 private:
  LayerSpec spec_;
  Shape in_;
  std::size_t batch_ = 0;
  std::vector<bool> active_;
};

template <typename T>
class Flatten final : public Layer<T> {
 public:
  Flatten(const LayerSpec& spec, const Shape& in) : spec_(spec), in_(in) {}

  const LayerSpec& spec() const override { return spec_; }

  Tensor<T> forward(const Tensor<T>& x, bool train) override {
    require_shape(x, in_, "Flatten");
    Tensor<T> out;
    out.shape = {x.batch(), numel(in_)};
    out.values = x.values;
    if (train) batch_ = x.batch();
    return out;
  }

  Tensor<T> backward(const Tensor<T>& g) override {
    require(batch_ > 0, Errc::kState, "Flatten backward without a train-mode forward");
    Tensor<T> gx;
    gx.shape = with_batch(batch_, in_);
    gx.values = g.values;
    return gx;
  }

  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Flatten>(*this); }

 private:
  LayerSpec spec_;
  Shape in_;
  std::size_t batch_ = 0;
};

bool has_batch_norm(const ModelConfig& cfg) {
  return std::any_of(cfg.layers.begin(), cfg.layers.end(),
                     [](const LayerSpec& l) { return l.kind == Kind::kBatchNorm1D; });
}

double sample_rmse_mm(const float* pred, const float* truth) {
  double acc = 0;
  for (std::size_t k = 0; k < kMarkerCount; ++k) {
    double d2 = 0;
    for (std::size_t a = 0; a < 3; ++a) {
      const double d = static_cast<double>(pred[3 * k + a]) - truth[3 * k + a];
      d2 += d * d;
    }
    acc += d2;
  }
  return std::sqrt(acc / static_cast<double>(kMarkerCount));
}

template <typename T>
Tensor<T> gather_inputs(std::span<const SampleRecord> records, std::span<const std::size_t> idx) {
  Tensor<T> x({idx.size(), kScanCount, kGridSize});
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const auto& r = records[idx[i]];
    std::copy(r.spectra.begin(), r.spectra.end(), x.values.begin() + static_cast<std::ptrdiff_t>(i * kFeatureSize));
  }
  return x;
}

template <typename T>
std::vector<T> gather_targets(std::span<const SampleRecord> records, std::span<const std::size_t> idx) {
  std::vector<T> y(idx.size() * kTargetSize);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const auto& r = records[idx[i]];
    std::copy(r.shape_mm.begin(), r.shape_mm.end(), y.begin() + static_cast<std::ptrdiff_t>(i * kTargetSize));
  }
  return y;
}

}  // namespace

// ---------------------------------------------------------------------------

std::size_t numel(const Shape& shape) noexcept {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

const char* init_scheme_name(InitScheme s) noexcept {
  switch (s) {
    case InitScheme::kStandard: return "standard";
    case InitScheme::kXavierUniform: return "xavier_uniform";
    case InitScheme::kXavierNormal: return "xavier_normal";
    case InitScheme::kKaimingUniform: return "kaiming_uniform";
    case InitScheme::kKaimingNormal: return "kaiming_normal";
  }
  return "unknown";
}

InitScheme parse_init_scheme(const std::string& name) {
  for (auto s : {InitScheme::kStandard, InitScheme::kXavierUniform, InitScheme::kXavierNormal,
                 InitScheme::kKaimingUniform, InitScheme::kKaimingNormal}) {
    if (name == init_scheme_name(s)) return s;
  }
  fail(Errc::kConfig, "unknown init scheme '" + name + "'");
}

LayerSpec LayerSpec::conv(std::size_t channels, std::size_t stride) {
  LayerSpec l;
  l.kind = Kind::kConv1D;
  l.out_channels = channels;
  l.kernel = 3;
  l.stride = stride;
  l.padding = 1;
  return l;
}

LayerSpec LayerSpec::pool(std::size_t kernel, std::size_t stride) {
  LayerSpec l;
  l.kind = Kind::kMaxPool1D;
  l.kernel = kernel;
  l.stride = stride;
  l.padding = 0;
  return l;
}

LayerSpec LayerSpec::batch_norm() {
  LayerSpec l;
  l.kind = Kind::kBatchNorm1D;
  return l;
}

LayerSpec LayerSpec::dropout(double p) {
  LayerSpec l;
  l.kind = Kind::kDropout;
  l.p = p;
  return l;
}

LayerSpec LayerSpec::dense(std::size_t units) {
  LayerSpec l;
  l.kind = Kind::kFullyConnected;
  l.units = units;
  return l;
}

LayerSpec LayerSpec::relu() { return LayerSpec{}; }

LayerSpec LayerSpec::flatten() {
  LayerSpec l;
  l.kind = Kind::kFlatten;
  return l;
}

std::string LayerSpec::kind_name() const {
  switch (kind) {
    case Kind::kConv1D: return "conv1d";
    case Kind::kMaxPool1D: return "maxpool1d";
    case Kind::kBatchNorm1D: return "batchnorm1d";
    case Kind::kDropout: return "dropout";
    case Kind::kFullyConnected: return "fc";
    case Kind::kReLU: return "relu";
    case Kind::kFlatten: return "flatten";
  }
  return "unknown";
}

std::vector<Shape> ModelConfig::shape_trace() const {
  require(in_channels >= 1 && in_length >= 1, Errc::kInvalidInput, "input shape must be positive");
  std::vector<Shape> out;
  Shape s{in_channels, in_length};
  for (const auto& l : layers) {
    s = output_shape(l, s);
    out.push_back(s);
  }
  return out;
}

void ModelConfig::validate() const {
  require(!layers.empty(), Errc::kInvalidInput, "model has no layers");
  require(layers.back().kind == Kind::kFullyConnected && layers.back().units == output_size,
          Errc::kInvalidInput,
          "model must end in a FullyConnected layer with " + std::to_string(output_size) + " units");
  shape_trace();
}

std::size_t ModelConfig::flatten_width() const {
  Shape s{in_channels, in_length};
  for (const auto& l : layers) {
    if (l.kind == Kind::kFullyConnected) return numel(s);
    s = output_shape(l, s);
  }
  return numel(s);
}

ModelConfig scaled_architecture(std::size_t fc_width) {
  using L = LayerSpec;
  ModelConfig m;
  m.init = InitScheme::kXavierNormal;
  m.layers = {
      L::batch_norm(),
      L::conv(16), L::relu(), L::pool(3, 2),
      L::conv(16), L::relu(), L::pool(2, 2),
      L::conv(32), L::relu(), L::pool(3, 2),
      L::conv(32, 2), L::relu(), L::pool(3, 3),
      L::conv(256), L::relu(), L::batch_norm(), L::pool(2, 2),
      L::flatten(),
      L::dense(fc_width), L::relu(), L::batch_norm(), L::dropout(0.37),
      L::dense(fc_width), L::relu(),
      L::dense(fc_width), L::relu(), L::batch_norm(),
      L::dense(fc_width), L::relu(), L::dropout(0.16),
      L::dense(fc_width), L::relu(),
      L::dense(kTargetSize),
  };
  return m;
}

ModelConfig paper_architecture() { return scaled_architecture(2000); }

void TrainConfig::validate() const {
  require(batch_size >= 1, Errc::kConfig, "batch_size must be at least 1");
  require(std::isfinite(learning_rate) && learning_rate > 0, Errc::kConfig,
          "learning_rate must be positive");
  require(std::isfinite(smooth_l1_beta) && smooth_l1_beta >= 0, Errc::kConfig,
          "smooth_l1_beta must be non-negative");
  require(std::isfinite(l2) && l2 >= 0, Errc::kConfig, "l2 must be non-negative");
}

// ---------------------------------------------------------------------------

template <typename T>
std::unique_ptr<Layer<T>> make_layer(const LayerSpec& spec, const Shape& in, Rng* dropout_rng) {
  switch (spec.kind) {
    case Kind::kConv1D: return std::make_unique<Conv1D<T>>(spec, in);
    case Kind::kMaxPool1D: return std::make_unique<MaxPool1D<T>>(spec, in);
    case Kind::kBatchNorm1D: return std::make_unique<BatchNorm1D<T>>(spec, in);
    case Kind::kDropout: return std::make_unique<Dropout<T>>(spec, in, dropout_rng);
    case Kind::kFullyConnected: return std::make_unique<FullyConnected<T>>(spec, in);
    case Kind::kReLU: return std::make_unique<ReLU<T>>(spec, in);
    case Kind::kFlatten: return std::make_unique<Flatten<T>>(spec, in);
  }
  fail(Errc::kInvalidInput, "unknown layer kind");
}

template <typename T>
Model<T>::Model(ModelConfig config, std::uint64_t init_seed)
    : config_(std::move(config)), dropout_rng_(std::make_unique<Rng>(derived_rng(init_seed, 1))) {
  config_.validate();
  Shape s{config_.in_channels, config_.in_length};
  Rng rng = derived_rng(init_seed);
  for (const auto& spec : config_.layers) {
    layers_.push_back(make_layer<T>(spec, s, dropout_rng_.get()));
    layers_.back()->init(config_.init, rng);
    s = output_shape(spec, s);
  }
}

template <typename T>
Model<T>::Model(const Model& other)
    : config_(other.config_), dropout_rng_(std::make_unique<Rng>(*other.dropout_rng_)),
      has_forward_(false) {
  for (const auto& l : other.layers_) {
    layers_.push_back(l->clone());
    if (auto* d = dynamic_cast<Dropout<T>*>(layers_.back().get())) d->bind(dropout_rng_.get());
  }
}

template <typename T>
Model<T>& Model<T>::operator=(const Model& other) {
  if (this != &other) {
    Model tmp(other);
    *this = std::move(tmp);
  }
  return *this;
}

template <typename T>
void Model<T>::reseed_dropout(std::uint64_t seed) {
  *dropout_rng_ = derived_rng(seed);
}

template <typename T>
Tensor<T> Model<T>::forward(const Tensor<T>& batch, bool train) {
  require(batch.shape.size() == 3 && batch.shape[1] == config_.in_channels &&
              batch.shape[2] == config_.in_length,
          Errc::kInvalidInput,
          "model input must be [B, " + std::to_string(config_.in_channels) + ", " +
              std::to_string(config_.in_length) + "], got " + shape_string(batch.shape));
  require(batch.batch() >= 1, Errc::kInvalidInput, "empty batch");
  require(batch.values.size() == numel(batch.shape), Errc::kInvalidInput, "tensor size mismatch");
  for (T v : batch.values) require(std::isfinite(v), Errc::kInvalidInput, "non-finite model input");
  if (train && batch.batch() < 2 && has_batch_norm(config_)) {
    fail(Errc::kBatchTooSmall, "train-mode forward with BatchNorm needs a batch of at least 2");
  }
  Tensor<T> x = layers_.front()->forward(batch, train);
  for (std::size_t i = 1; i < layers_.size(); ++i) x = layers_[i]->forward(x, train);
  if (train) has_forward_ = true;
  return x;
}

template <typename T>
Tensor<T> Model<T>::backward(const Tensor<T>& grad_output) {
  require(has_forward_, Errc::kState, "backward called without a train-mode forward");
  Tensor<T> g = grad_output;
  for (std::size_t i = layers_.size(); i-- > 0;) g = layers_[i]->backward(g);
  has_forward_ = false;
  return g;
}

template <typename T>
std::vector<ParamView<T>> Model<T>::parameters() {
  std::vector<ParamView<T>> out;
  for (auto& l : layers_) {
    for (auto& p : l->params()) out.push_back(p);
  }
  return out;
}

template <typename T>
std::vector<std::span<T>> Model<T>::buffers() {
  std::vector<std::span<T>> out;
  for (auto& l : layers_) {
    for (auto& b : l->buffers()) out.push_back(b);
  }
  return out;
}

template <typename T>
void Model<T>::zero_grad() {
  for (auto& p : parameters()) std::fill(p.grad.begin(), p.grad.end(), T(0));
}

template <typename T>
std::size_t Model<T>::parameter_count() {
  std::size_t n = 0;
  for (auto& p : parameters()) n += p.value.size();
  return n;
}

// ---------------------------------------------------------------------------

template <typename T>
double smooth_l1(std::span<const T> pred, std::span<const T> target, double beta,
                 std::vector<T>* grad) {
  require(pred.size() == target.size() && !pred.empty(), Errc::kInvalidInput,
          "smooth_l1 needs equal, non-empty shapes");
  require(std::isfinite(beta) && beta >= 0, Errc::kInvalidInput, "smooth_l1 beta must be non-negative");
  const double n = static_cast<double>(pred.size());
  if (grad) grad->assign(pred.size(), T(0));
  double acc = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = static_cast<double>(pred[i]) - static_cast<double>(target[i]);
    const double a = std::abs(d);
    if (a < beta) {
      acc += 0.5 * d * d / beta;
      if (grad) (*grad)[i] = static_cast<T>(d / beta / n);
    } else {
      acc += a - 0.5 * beta;
      if (grad) (*grad)[i] = static_cast<T>((d > 0 ? 1.0 : d < 0 ? -1.0 : 0.0) / n);
    }
  }
  return acc / n;
}

template <typename T>
void Adam<T>::step(std::vector<ParamView<T>> params) {
  if (m_.empty()) {
    for (const auto& p : params) {
      m_.emplace_back(p.value.size(), T(0));
      v_.emplace_back(p.value.size(), T(0));
    }
  }
  require(m_.size() == params.size(), Errc::kState, "optimizer state does not match parameters");
  for (const auto& p : params) {
    for (T g : p.grad) require(std::isfinite(g), Errc::kDiverged, "non-finite gradient");
  }
  ++t_;
  const double b1 = opts_.beta1, b2 = opts_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& p = params[k];
    require(m_[k].size() == p.value.size(), Errc::kState, "optimizer state size mismatch");
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = static_cast<double>(p.grad[i]) + opts_.l2 * static_cast<double>(p.value[i]);
      const double m = b1 * m_[k][i] + (1 - b1) * g;
      const double v = b2 * v_[k][i] + (1 - b2) * g * g;
      m_[k][i] = static_cast<T>(m);
      v_[k][i] = static_cast<T>(v);
      const double update = opts_.lr * (m / c1) / (std::sqrt(v / c2) + opts_.eps);
      p.value[i] = static_cast<T>(static_cast<double>(p.value[i]) - update);
    }
  }
}

// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> pack_inputs(std::span<const SampleRecord> records) {
  std::vector<std::size_t> idx(records.size());
  std::iota(idx.begin(), idx.end(), 0);
  return gather_inputs<T>(records, idx);
}

template <typename T>
std::vector<std::array<float, kTargetSize>> predict_batch(Model<T>& model,
                                                          std::span<const SampleRecord> records) {
  constexpr std::size_t kChunk = 512;
  std::vector<std::array<float, kTargetSize>> out(records.size());
  for (std::size_t start = 0; start < records.size(); start += kChunk) {
    const std::size_t n = std::min(kChunk, records.size() - start);
    const auto y = model.forward(pack_inputs<T>(records.subspan(start, n)), false);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < kTargetSize; ++j) {
        out[start + i][j] = static_cast<float>(y.values[i * kTargetSize + j]);
      }
    }
  }
  return out;
}

template <typename T>
MarkerShape predict(Model<T>& model, std::span<const SpectrumScan> scans) {
  require(scans.size() == kScanCount, Errc::kInvalidInput, "prediction needs three scans");
  Tensor<T> x({1, kScanCount, kGridSize});
  for (std::size_t c = 0; c < kScanCount; ++c) {
    require(scans[c].intensities.size() == kGridSize, Errc::kInvalidInput, "scan must have 190 elements");
    for (std::size_t j = 0; j < kGridSize; ++j) {
      x.values[c * kGridSize + j] = static_cast<T>(scans[c].intensities[j]);
    }
  }
  const auto y = model.forward(x, false);
  MarkerShape m;
  for (std::size_t k = 0; k < kMarkerCount; ++k) {
    m.coords.emplace_back(y.values[3 * k], y.values[3 * k + 1], y.values[3 * k + 2]);
  }
  return m;
}

template <typename T>
std::vector<double> forward_features(Model<T>& model, std::span<const double> inputs,
                                     std::size_t count) {
  const std::size_t width = model.config().in_channels * model.config().in_length;
  require(inputs.size() == count * width && count >= 1, Errc::kInvalidInput,
          "forward_features input size mismatch");
  Tensor<T> x({count, model.config().in_channels, model.config().in_length});
  for (std::size_t i = 0; i < inputs.size(); ++i) x.values[i] = static_cast<T>(inputs[i]);
  const auto y = model.forward(x, false);
  return std::vector<double>(y.values.begin(), y.values.end());
}

template <typename T>
TrainHistory train(Model<T>& model, std::span<const SampleRecord> train_set,
                   std::span<const SampleRecord> val_set, const TrainConfig& cfg,
                   Adam<T>* optimizer, const EpochCallback& on_epoch) {
  cfg.validate();
  require(!train_set.empty() && !val_set.empty(), Errc::kInvalidInput,
          "training and validation sets must be non-empty");
  require(model.config().in_channels == kScanCount && model.config().in_length == kGridSize &&
              model.config().output_size == kTargetSize,
          Errc::kInvalidInput, "model shape does not match the sample records");
  AdamOptions opts;
  opts.lr = cfg.learning_rate;
  opts.l2 = cfg.l2;
  Adam<T> local(opts);
  Adam<T>& adam = optimizer ? *optimizer : local;

  if (cfg.init_output_bias_to_mean && adam.steps() == 0) {
    auto params = model.parameters();
    auto& bias = params.back().value;
    std::vector<double> mean(kTargetSize, 0.0);
    for (const auto& r : train_set) {
      for (std::size_t j = 0; j < kTargetSize; ++j) mean[j] += r.shape_mm[j];
    }
    for (std::size_t j = 0; j < kTargetSize; ++j) {
      bias[j] = static_cast<T>(mean[j] / static_cast<double>(train_set.size()));
    }
  }

  model.reseed_dropout(mix_seed(cfg.seed ^ 0x64726f70ULL));
  Rng shuffle_rng = derived_rng(cfg.seed, 0x73687566ULL);
  const bool needs_pairs = has_batch_norm(model.config());
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::size_t> val_idx(val_set.size());
  std::iota(val_idx.begin(), val_idx.end(), 0);

  TrainHistory hist;
  std::vector<std::vector<T>> best_params, best_buffers;
  auto snapshot = [&] {
    best_params.clear();
    best_buffers.clear();
    for (auto& p : model.parameters()) best_params.emplace_back(p.value.begin(), p.value.end());
    for (auto& b : model.buffers()) best_buffers.emplace_back(b.begin(), b.end());
  };

  std::vector<T> grad;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[shuffle_rng() % i]);
    }
    double loss_sum = 0;
    std::size_t used = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t n = std::min(cfg.batch_size, order.size() - start);
      if (n < 2 && needs_pairs) continue;
      const std::span<const std::size_t> idx(order.data() + start, n);
      const auto x = gather_inputs<T>(train_set, idx);
      const auto y = gather_targets<T>(train_set, idx);
      model.zero_grad();
      auto out = model.forward(x, true);
      const double loss = smooth_l1<T>(out.values, y, cfg.smooth_l1_beta, &grad);
      if (!std::isfinite(loss)) {
        fail(Errc::kDiverged, "non-finite training loss at epoch " + std::to_string(epoch));
      }
      Tensor<T> g;
      g.shape = out.shape;
      g.values = std::move(grad);
      model.backward(g);
      try {
        adam.step(model.parameters());
      } catch (const Error& e) {
        if (e.code() == Errc::kDiverged) {
          fail(Errc::kDiverged, std::string(e.what()) + " at epoch " + std::to_string(epoch));
        }
        throw;
      }
      loss_sum += loss * static_cast<double>(n);
      used += n;
    }
    require(used > 0, Errc::kBatchTooSmall, "no training batch was large enough");

    const auto pred = predict_batch(model, val_set);
    double vloss = 0, vrmse = 0;
    for (std::size_t i = 0; i < val_set.size(); ++i) {
      vloss += smooth_l1<float>(pred[i], val_set[i].shape_mm, cfg.smooth_l1_beta);
      vrmse += sample_rmse_mm(pred[i].data(), val_set[i].shape_mm.data());
    }
    vloss /= static_cast<double>(val_set.size());
    vrmse /= static_cast<double>(val_set.size());
    if (!std::isfinite(vloss)) {
      fail(Errc::kDiverged, "non-finite validation loss at epoch " + std::to_string(epoch));
    }
    hist.train_loss.push_back(loss_sum / static_cast<double>(used));
    hist.val_loss.push_back(vloss);
    hist.val_rmse_mm.push_back(vrmse);
    if (epoch == 0 || vloss < hist.best_val_loss) {
      hist.best_epoch = epoch;
      hist.best_val_loss = vloss;
      hist.best_val_rmse_mm = vrmse;
      snapshot();
    }
    if (on_epoch) on_epoch(epoch, hist.train_loss.back(), vloss, vrmse);
  }

  if (!best_params.empty()) {
    auto params = model.parameters();
    for (std::size_t k = 0; k < params.size(); ++k) {
      std::copy(best_params[k].begin(), best_params[k].end(), params[k].value.begin());
    }
    auto bufs = model.buffers();
    for (std::size_t k = 0; k < bufs.size(); ++k) {
      std::copy(best_buffers[k].begin(), best_buffers[k].end(), bufs[k].begin());
    }
  }
  return hist;
}

#define EFBG_NN_INSTANTIATE(T)                                                                    \
  template std::unique_ptr<Layer<T>> make_layer<T>(const LayerSpec&, const Shape&, Rng*);       \
  template class Model<T>;                                                                       \
  template class Adam<T>;                                                                        \
  template double smooth_l1<T>(std::span<const T>, std::span<const T>, double, std::vector<T>*); \
  template TrainHistory train<T>(Model<T>&, std::span<const SampleRecord>,                       \
                                 std::span<const SampleRecord>, const TrainConfig&, Adam<T>*,   \
                                 const EpochCallback&);                                          \
  template std::vector<std::array<float, kTargetSize>> predict_batch<T>(                        \
      Model<T>&, std::span<const SampleRecord>);                                                 \
  template MarkerShape predict<T>(Model<T>&, std::span<const SpectrumScan>);                     \
  template Tensor<T> pack_inputs<T>(std::span<const SampleRecord>);                             \
  template std::vector<double> forward_features<T>(Model<T>&, std::span<const double>,          \
                                                   std::size_t);

EFBG_NN_INSTANTIATE(float)
EFBG_NN_INSTANTIATE(double)

}  // namespace efbg::nn
