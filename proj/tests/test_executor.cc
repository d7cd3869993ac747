/* Copyright 2026 The Orbitc Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "orbitc/executor.h"
#include "orbitc/fixed_point.h"
#include "orbitc/graph_builder.h"
#include "orbitc/quantizer.h"
#include "oracles.h"
#include "test_util.h"

namespace orbitc {
namespace {

using testing::RandomTensor;
using testing::RandomValues;
using testing::UnitScale;

// Direct-loop references. Padding is derived from the output size, not from
// SamePadBefore, so the executor and the oracle share no code.
struct Dims {
  int64_t h, w, c;
};

int64_t PadBefore(int64_t in, int64_t out, int k, int stride, Padding p) {
  if (p == Padding::kValid) return 0;
  return std::max<int64_t>((out - 1) * stride + k - in, 0) / 2;
}

int64_t OutSize(int64_t in, int k, int stride, Padding p) {
  if (p == Padding::kSame) return (in + stride - 1) / stride;
  return (in - k) / stride + 1;
}

std::vector<double> NaiveConv(const std::vector<float>& x, Dims d,
                              const std::vector<float>& w, int out_c, int k,
                              const std::vector<float>& b, int stride,
                              Padding p, bool depthwise, Dims* od) {
  const int64_t oh = OutSize(d.h, k, stride, p), ow = OutSize(d.w, k, stride, p);
  const int64_t pt = PadBefore(d.h, oh, k, stride, p);
  const int64_t pl = PadBefore(d.w, ow, k, stride, p);
  const int64_t oc = depthwise ? d.c : out_c;
  *od = {oh, ow, oc};
  std::vector<double> y(static_cast<size_t>(oh * ow * oc));
  for (int64_t i = 0; i < oh; ++i)
    for (int64_t j = 0; j < ow; ++j)
      for (int64_t o = 0; o < oc; ++o) {
        double acc = b[o];
        for (int dy = 0; dy < k; ++dy)
          for (int dx = 0; dx < k; ++dx) {
            const int64_t yy = i * stride + dy - pt, xx = j * stride + dx - pl;
            if (yy < 0 || yy >= d.h || xx < 0 || xx >= d.w) continue;
            if (depthwise) {
              acc += double(x[(yy * d.w + xx) * d.c + o]) *
                     w[(dy * k + dx) * d.c + o];
            } else {
              for (int64_t c = 0; c < d.c; ++c)
                acc += double(x[(yy * d.w + xx) * d.c + c]) *
                       w[((o * k + dy) * k + dx) * d.c + c];
            }
          }
        y[(i * ow + j) * oc + o] = acc;
      }
  return y;
}

void CheckClose(const Tensor& got, const std::vector<double>& want,
                double tol = 1e-4) {
  REQUIRE(got.data.size() == want.size());
  for (size_t i = 0; i < want.size(); ++i)
    REQUIRE(got.data[i] == doctest::Approx(want[i]).epsilon(tol).scale(1.0));
}

Graph Single(const std::function<std::string(GraphBuilder&, std::string)>& f,
             const Shape& in) {
  GraphBuilder b("t");
  auto x = b.Input("x", in);
  b.MarkOutput(f(b, x));
  return b.Build();
}

TEST_SUITE("executor") {

TEST_CASE("identity 1x1 convolution returns its input") {
  Rng rng(1);
  std::vector<float> eye(9, 0.0f);
  for (int i = 0; i < 3; ++i) eye[i * 3 + i] = 1.0f;
  Graph g = Single([&](GraphBuilder& b, std::string x) {
    return b.Conv2D(x, {3, 1, 1, 3}, eye, {});
  }, {1, 5, 5, 3});
  auto in = RandomTensor({1, 5, 5, 3}, rng, -2, 2);
  CHECK(RunF32(g, in)[0] == in);
}

TEST_CASE("relu and max pool examples") {
  Graph relu = Single([](GraphBuilder& b, std::string x) { return b.ReLU(x); },
                      {1, 3});
  CHECK(RunF32(relu, {{1, 3}, {-1.5f, 0.0f, 2.0f}})[0].data ==
        std::vector<float>{0.0f, 0.0f, 2.0f});
  Graph pool = Single([](GraphBuilder& b, std::string x) {
    return b.MaxPool(x, 2, 2);
  }, {1, 2, 2, 1});
  auto out = RunF32(pool, {{1, 2, 2, 1}, {1, 2, 3, 4}})[0];
  CHECK(out.shape == Shape{1, 1, 1, 1});
  CHECK(out.data[0] == 4.0f);
}

TEST_CASE("convolutions match direct loops") {
  Rng rng(3);
  for (int trial = 0; trial < 60; ++trial) {
    const Dims d{2 + int64_t(rng.Below(7)), 2 + int64_t(rng.Below(7)),
                 1 + int64_t(rng.Below(4))};
    const int k = 1 + int(rng.Below(3));
    const int stride = 1 + int(rng.Below(2));
    const Padding p = rng.Below(2) ? Padding::kSame : Padding::kValid;
    if (p == Padding::kValid && (d.h < k || d.w < k)) continue;
    const bool dw = trial % 3 == 0;
    const int oc = dw ? int(d.c) : 1 + int(rng.Below(5));
    const Shape ws = dw ? Shape{1, k, k, d.c} : Shape{oc, k, k, d.c};
    auto w = RandomValues(rng, NumElements(ws), -1, 1);
    auto bias = RandomValues(rng, oc, -0.5, 0.5);
    Graph g = Single([&](GraphBuilder& b, std::string x) {
      return dw ? b.DepthwiseConv2D(x, ws, w, bias, stride, p)
                : b.Conv2D(x, ws, w, bias, stride, p);
    }, {1, d.h, d.w, d.c});
    auto in = RandomTensor({1, d.h, d.w, d.c}, rng, -1, 1);
    Dims od;
    auto want = NaiveConv(in.data, d, w, oc, k, bias, stride, p, dw, &od);
    auto got = RunF32(g, in)[0];
    CHECK(got.shape == Shape{1, od.h, od.w, od.c});
    CheckClose(got, want);
  }
}

TEST_CASE("pools match window enumeration") {
  Rng rng(4);
  for (int trial = 0; trial < 60; ++trial) {
    const Dims d{2 + int64_t(rng.Below(6)), 2 + int64_t(rng.Below(6)),
                 1 + int64_t(rng.Below(3))};
    const int k = 1 + int(rng.Below(3));
    const int stride = 1 + int(rng.Below(2));
    const Padding p = rng.Below(2) ? Padding::kSame : Padding::kValid;
    if (p == Padding::kValid && (d.h < k || d.w < k)) continue;
    const bool is_max = trial % 2 == 0;
    Graph g = Single([&](GraphBuilder& b, std::string x) {
      return is_max ? b.MaxPool(x, k, stride, p) : b.AvgPool(x, k, stride, p);
    }, {1, d.h, d.w, d.c});
    auto in = RandomTensor({1, d.h, d.w, d.c}, rng, -1, 1);
    const int64_t oh = OutSize(d.h, k, stride, p), ow = OutSize(d.w, k, stride, p);
    const int64_t pt = PadBefore(d.h, oh, k, stride, p);
    const int64_t pl = PadBefore(d.w, ow, k, stride, p);
    std::vector<double> want;
    for (int64_t i = 0; i < oh; ++i)
      for (int64_t j = 0; j < ow; ++j)
        for (int64_t c = 0; c < d.c; ++c) {
          double best = -std::numeric_limits<double>::infinity(), sum = 0;
          int n = 0;
          for (int dy = 0; dy < k; ++dy)
            for (int dx = 0; dx < k; ++dx) {
              const int64_t yy = i * stride + dy - pt, xx = j * stride + dx - pl;
              if (yy < 0 || yy >= d.h || xx < 0 || xx >= d.w) continue;
              const double v = in.data[(yy * d.w + xx) * d.c + c];
              best = std::max(best, v);
              sum += v;
              ++n;
            }
          want.push_back(is_max ? best : sum / n);
        }
    CheckClose(RunF32(g, in)[0], want);
  }
}

TEST_CASE("fully connected, add and concat match direct loops") {
  Rng rng(5);
  auto w = RandomValues(rng, 12, -1, 1);
  auto bias = RandomValues(rng, 3, -1, 1);
  Graph fc = Single([&](GraphBuilder& b, std::string x) {
    return b.FullyConnected(x, {3, 4}, w, bias);
  }, {1, 4});
  auto in = RandomTensor({1, 4}, rng, -1, 1);
  std::vector<double> want(3);
  for (int o = 0; o < 3; ++o) {
    want[o] = bias[o];
    for (int i = 0; i < 4; ++i) want[o] += double(w[o * 4 + i]) * in.data[i];
  }
  CheckClose(RunF32(fc, in)[0], want);

  GraphBuilder b("t");
  auto x = b.Input("x", {1, 2, 2, 2});
  auto r = b.ReLU(x, "r");
  auto a = b.Add(x, r, "a");
  auto c = b.Concat({x, a}, -1, "c");
  b.MarkOutput(c);
  Graph g = b.Build();
  auto xin = RandomTensor({1, 2, 2, 2}, rng, -1, 1);
  auto out = RunF32(g, xin)[0];
  CHECK(out.shape == Shape{1, 2, 2, 4});
  for (int p = 0; p < 4; ++p)
    for (int ch = 0; ch < 2; ++ch) {
      const float v = xin.data[p * 2 + ch];
      CHECK(out.data[p * 4 + ch] == v);
      CHECK(out.data[p * 4 + 2 + ch] == v + std::max(v, 0.0f));
    }
}

TEST_CASE("softmax yields a probability vector") {
  Rng rng(6);
  Graph g = Single([](GraphBuilder& b, std::string x) { return b.Softmax(x); },
                   {1, 10});
  for (int i = 0; i < 100; ++i) {
    auto in = RandomTensor({1, 10}, rng, -30, 30);
    auto out = RunF32(g, in)[0];
    double sum = 0;
    for (float v : out.data) {
      CHECK(v >= 0.0f);
      sum += v;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-5));
    const auto arg_in = std::max_element(in.data.begin(), in.data.end()) - in.data.begin();
    const auto arg_out = std::max_element(out.data.begin(), out.data.end()) - out.data.begin();
    CHECK(arg_in == arg_out);
  }
}

TEST_CASE("input shape mismatch is rejected") {
  Graph g = testing::SmallClassifier(1);
  CHECK_THROWS_AS(RunF32(g, {{1, 4, 4, 3}, std::vector<float>(48)}), ExecutionError);
}

TEST_CASE("trace exposes every activation") {
  Graph g = testing::SmallClassifier(2);
  Rng rng(1);
  auto trace = RunF32Trace(g, RandomTensor({1, 8, 8, 3}, rng, -1, 1));
  for (const char* id : {"input", "conv", "relu", "flatten", "fc", "probs"})
    CHECK(trace.count(id) == 1);
  for (float v : trace.at("relu").data) CHECK(v >= 0.0f);
}

}  // TEST_SUITE

TEST_SUITE("calibration") {

Graph InputRelu() {
  return Single([](GraphBuilder& b, std::string x) { return b.ReLU(x, "r"); },
                {1, 3});
}

TEST_CASE("range of a single run") {
  std::vector<Tensor> inputs{{{1, 3}, {-2.0f, 0.0f, 3.0f}}};
  auto ranges = Calibrate(InputRelu(), inputs);
  CHECK(ranges.at("x") == TensorRange{"x", -2.0, 3.0});
  CHECK(ranges.at("r") == TensorRange{"r", 0.0, 3.0});
}

TEST_CASE("ranges merge over runs") {
  std::vector<Tensor> inputs{{{1, 3}, {-1.0f, 0.5f, 2.0f}},
                             {{1, 3}, {-3.0f, 0.0f, 1.0f}}};
  CHECK(Calibrate(InputRelu(), inputs).at("x") == TensorRange{"x", -3.0, 2.0});
}

TEST_CASE("constant activations give a degenerate range") {
  std::vector<Tensor> inputs{{{1, 3}, {-1.0f, -2.0f, -3.0f}}};
  auto r = Calibrate(InputRelu(), inputs).at("r");
  CHECK(r.degenerate());
  CHECK(r.min_r == 0.0);
}

TEST_CASE("empty calibration set is an error") {
  CHECK_THROWS_AS(Calibrate(InputRelu(), std::vector<Tensor>{}), ExecutionError);
}

TEST_CASE("weights get the range of their data") {
  Graph g = testing::SmallClassifier(3);
  auto ranges = Calibrate(g, testing::RandomInputs(g, 2, 1));
  const auto& w = g.tensor("conv_w").f32();
  CHECK(ranges.at("conv_w").min_r == *std::min_element(w.begin(), w.end()));
  CHECK(ranges.at("conv_w").max_r == *std::max_element(w.begin(), w.end()));
}

TEST_CASE("adding runs never shrinks a range") {
  Graph g = testing::SmallClassifier(4);
  Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    auto all = testing::RandomInputs(g, 6, 100 + trial, -2, 2);
    const size_t k = 1 + rng.Below(5);
    std::vector<Tensor> subset(all.begin(), all.begin() + k);
    auto small = Calibrate(g, subset);
    auto big = Calibrate(g, all);
    for (const auto& [id, r] : small) {
      CHECK(big.at(id).min_r <= r.min_r);
      CHECK(big.at(id).max_r >= r.max_r);
    }
  }
}

}  // TEST_SUITE

std::vector<float> SmallInts(Rng& rng, int64_t n, int lo, int hi) {
  std::vector<float> v;
  for (int64_t i = 0; i < n; ++i)
    v.push_back(static_cast<float>(lo + int(rng.Below(uint64_t(hi - lo + 1)))));
  return v;
}

TEST_SUITE("int8_executor") {

TEST_CASE("unit-scale integer network matches the float interpreter exactly") {
  Rng rng(21);
  int compared = 0;
  for (int trial = 0; trial < 50; ++trial) {
    GraphBuilder b("unit");
    auto x = b.Input("x", {1, 6, 6, 2});
    auto c = b.Conv2D(x, {3, 3, 3, 2}, SmallInts(rng, 54, -1, 1),
                      SmallInts(rng, 3, -2, 2), 1, Padding::kSame, "c");
    auto r = b.ReLU(c, "r");
    auto d = b.DepthwiseConv2D(r, {1, 3, 3, 3}, SmallInts(rng, 27, -1, 1),
                               SmallInts(rng, 3, -2, 2), 1, Padding::kSame, "d");
    auto m = b.MaxPool(d, 2, 2, Padding::kValid, "m");
    auto m2 = b.MaxPool(r, 2, 2, Padding::kValid, "m2");
    auto a = b.Add(m, m2, "a");
    auto cat = b.Concat({a, m}, -1, "cat");
    auto f = b.Flatten(cat, "f");
    auto fc = b.FullyConnected(f, {4, 54}, SmallInts(rng, 216, -1, 1),
                               SmallInts(rng, 4, -2, 2), "fc");
    b.MarkOutput(fc);
    Graph fg = b.Build();
    Graph qg = UnitScale(fg);
    REQUIRE(qg.is_quantized());
    Tensor in{{1, 6, 6, 2}, SmallInts(rng, 72, -1, 1)};
    auto ft = RunF32Trace(fg, in);
    // Only compare when no float value leaves the int8 range.
    bool in_range = true;
    for (const auto& [id, t] : ft)
      for (float v : t.data) in_range &= v >= -128 && v <= 127;
    if (!in_range) continue;
    auto qo = RunInt8(qg, in);
    CHECK(qo[0].data == ft.at("fc").data);
    ++compared;
  }
  CHECK(compared >= 25);
}

TEST_CASE("integer runs are deterministic") {
  Graph q = testing::QuantizeWithRandomCalibration(testing::SmallClassifier(2), 8, 1);
  Rng rng(3);
  auto in = RandomTensor({1, 8, 8, 3}, rng, -1, 1);
  std::map<std::string, std::vector<int8_t>> t1, t2;
  Int8RunOptions o1, o2;
  o1.trace = &t1;
  o2.trace = &t2;
  CHECK(RunInt8(q, in, o1) == RunInt8(q, in, o2));
  CHECK(t1 == t2);
}

TEST_CASE("missing quant params are rejected") {
  Graph q = testing::QuantizeWithRandomCalibration(testing::SmallClassifier(2), 8, 1);
  q.mutable_tensor("relu").quant.reset();
  Rng rng(3);
  CHECK_THROWS_AS(RunInt8(q, RandomTensor({1, 8, 8, 3}, rng, -1, 1)), ExecutionError);
}

TEST_CASE("accumulator overflow is detected") {
  const int64_t n = 140000;  // 140000 * 127 * 127 > 2^31
  GraphBuilder b("wide");
  auto x = b.Input("x", {1, n});
  b.MarkOutput(b.FullyConnected(x, {1, n}, std::vector<float>(n, 127.0f), {0.0f}, "fc"));
  Graph q = UnitScale(b.Build());
  try {
    RunInt8(q, {{1, n}, std::vector<float>(n, 127.0f)});
    FAIL("expected overflow");
  } catch (const ExecutionError& e) {
    CHECK(std::string(e.what()).find("overflow") != std::string::npos);
  }
}

TEST_CASE("bundled convnet logits stay within a few quantization steps") {
  Graph g = testing::LoadBundled("desk_convnet");
  Dataset ds = testing::BundledDataset();
  Graph q = testing::QuantizeBundled(g, ds);
  const auto& qp = *q.tensor("fc").quant;
  double total = 0;
  int64_t count = 0;
  int agree = 0;
  for (const auto& s : ds.samples) {
    std::map<std::string, std::vector<int8_t>> trace;
    Int8RunOptions opt;
    opt.trace = &trace;
    auto qo = RunInt8(q, s.input, opt);
    auto ft = RunF32Trace(g, s.input);
    const auto& fl = ft.at("fc").data;
    const auto& ql = trace.at("fc");
    for (size_t i = 0; i < fl.size(); ++i) {
      total += std::abs(DequantizeValue(ql[i], qp.scale(), qp.zero_point()) - fl[i]);
      ++count;
    }
    const auto& fp = ft.at("probs").data;
    agree += std::max_element(fp.begin(), fp.end()) - fp.begin() ==
             std::max_element(qo[0].data.begin(), qo[0].data.end()) - qo[0].data.begin();
  }
  CHECK(total / count < 3 * qp.scale());
  CHECK(agree >= 0.9 * ds.samples.size());
}

}  // TEST_SUITE

TEST_SUITE("evaluation") {

Graph LinearSoftmax(std::vector<float> w, int classes, int features) {
  GraphBuilder b("lin");
  auto x = b.Input("x", {1, features});
  x = b.FullyConnected(x, {classes, features}, std::move(w), {}, "fc");
  b.MarkOutput(b.Softmax(x, "p"));
  return b.Build();
}

TEST_CASE("uniform logits give confidence one over the class count") {
  Graph g = LinearSoftmax(std::vector<float>(40, 0.0f), 10, 4);
  Dataset ds{{{"s0", {{1, 4}, {1, 2, 3, 4}}, 0}}};
  auto r = Evaluate(g, ds);
  CHECK(r.records[0].confidence == doctest::Approx(0.1).epsilon(1e-6));
}

TEST_CASE("accuracy counts argmax matches") {
  std::vector<float> eye{1, 0, 0, 0, 1, 0, 0, 0, 1};
  Graph g = LinearSoftmax(eye, 3, 3);
  Dataset ds{{{"a", {{1, 3}, {5, 0, 0}}, 0},
              {"b", {{1, 3}, {0, 5, 0}}, 1},
              {"c", {{1, 3}, {0, 0, 5}}, 0}}};
  auto r = Evaluate(g, ds);
  CHECK(r.correct_count == 2);
  CHECK(r.accuracy == doctest::Approx(2.0 / 3.0));
  CHECK(r.records[2].predicted_class == 2);
  CHECK_FALSE(r.records[2].correct);
  for (const auto& rec : r.records) {
    CHECK(rec.confidence >= 0.0);
    CHECK(rec.confidence <= 1.0);
  }
}

TEST_CASE("labels outside the class range are rejected") {
  Graph g = LinearSoftmax(std::vector<float>(9, 0.0f), 3, 3);
  Dataset ds{{{"a", {{1, 3}, {1, 0, 0}}, 5}}};
  CHECK_THROWS_AS(Evaluate(g, ds), ExecutionError);
}

TEST_CASE("records survive a CSV roundtrip") {
  Graph g = testing::LoadBundled("desk_convnet");
  auto r = Evaluate(g, MakeSyntheticDataset({.num_samples = 30, .height = 32,
                                             .width = 32, .seed = 5}));
  CHECK(RecordsFromCsv(RecordsToCsv(r.records)) == r.records);
  CHECK_THROWS_AS(RecordsFromCsv("id,x\n"), ConfigError);
}

}  // TEST_SUITE

}  // namespace
}  // namespace orbitc
