# Copyright 2026 The Orbitc Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
# ==============================================================================
"""Trains the two bundled desk-scale models and exports them as orbitc models.

Usage:
  orbitc gen-dataset --seed 1001 --samples 4000 --out /tmp/train
  orbitc gen-dataset --seed 1 --out /tmp/eval
  python tools/train_desk_models.py --train /tmp/train --eval /tmp/eval \
      --out models
"""

import argparse
import csv
import json
import os
import struct

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

H = W = 32
C_IN = 3
NUM_CLASSES = 10


def load_dataset(path):
  xs, ys = [], []
  with open(os.path.join(path, "index.csv")) as f:
    for row in csv.DictReader(f):
      raw = np.fromfile(os.path.join(path, row["file"]), dtype="<f4")
      xs.append(raw.reshape(H, W, C_IN))
      ys.append(int(row["label"]))
  x = torch.from_numpy(np.stack(xs)).permute(0, 3, 1, 2).contiguous()
  return x, torch.tensor(ys)


def same_pad(x, kernel, stride):
  """Pads like SAME: total max((out-1)*s+k-in, 0), the extra pixel after."""
  in_h, in_w = x.shape[2], x.shape[3]
  pads = []
  for size in (in_w, in_h):
    out = -(-size // stride)
    total = max((out - 1) * stride + kernel - size, 0)
    pads += [total // 2, total - total // 2]
  return F.pad(x, pads)


class ConvNet(nn.Module):
  def __init__(self):
    super().__init__()
    self.conv1 = nn.Conv2d(3, 16, 3)
    self.conv2 = nn.Conv2d(16, 32, 3)
    self.conv3 = nn.Conv2d(32, 64, 3)
    self.fc = nn.Linear(64, NUM_CLASSES)

  def forward(self, x):
    x = F.max_pool2d(F.relu(self.conv1(same_pad(x, 3, 1))), 2)
    x = F.max_pool2d(F.relu(self.conv2(same_pad(x, 3, 1))), 2)
    x = F.avg_pool2d(F.relu(self.conv3(same_pad(x, 3, 1))), 8)
    return self.fc(x.flatten(1))


class DsNet(nn.Module):
  def __init__(self):
    super().__init__()
    self.c1 = nn.Conv2d(3, 16, 3, stride=2)
    self.dw1 = nn.Conv2d(16, 16, 3, groups=16)
    self.pw1 = nn.Conv2d(16, 64, 1)
    self.dw2 = nn.Conv2d(64, 64, 3, stride=2, groups=64)
    self.pw2 = nn.Conv2d(64, 128, 1)
    self.pw3 = nn.Conv2d(128, 128, 1)
    self.pw4 = nn.Conv2d(128, 512, 1)
    self.fc = nn.Linear(512, NUM_CLASSES)

  def forward(self, x):
    x = F.relu(self.c1(same_pad(x, 3, 2)))
    x = F.relu(self.dw1(same_pad(x, 3, 1)))
    x = F.relu(self.pw1(x))
    x = F.relu(self.dw2(same_pad(x, 3, 2)))
    t_a = F.relu(self.pw2(x))
    t_b = self.pw3(t_a)
    x = F.relu(t_a + t_b)
    x = F.relu(self.pw4(x))
    x = F.avg_pool2d(x, 8)
    return self.fc(x.flatten(1))


def train(model, x, y, epochs, seed):
  torch.manual_seed(seed)
  opt = torch.optim.Adam(model.parameters(), lr=2e-3)
  for epoch in range(epochs):
    perm = torch.randperm(len(x))
    model.train()
    for i in range(0, len(x), 64):
      idx = perm[i:i + 64]
      opt.zero_grad()
      loss = F.cross_entropy(model(x[idx]), y[idx])
      loss.backward()
      opt.step()
    print(f"  epoch {epoch + 1}: loss {loss.item():.4f}")
  model.eval()


class Exporter:
  """Collects tensors and nodes in the orbitc-model manifest layout."""

  def __init__(self, name, input_shape):
    self.name = name
    self.tensors = {}
    self.consts = {}
    self.nodes = []
    self.shapes = {"input": list(input_shape)}
    self.tensors["input"] = {"id": "input", "shape": list(input_shape),
                             "dtype": "float32", "kind": "input"}

  def _const(self, tid, kind, array):
    array = np.ascontiguousarray(array, dtype="<f4")
    self.consts[tid] = array
    self.tensors[tid] = {"id": tid, "shape": list(array.shape),
                         "dtype": "float32", "kind": kind}

  def node(self, nid, op, inputs, out_shape, kernel=(1, 1), stride=(1, 1),
           padding="VALID", weight=None, bias=None):
    ins = list(inputs)
    if weight is not None:
      self._const(nid + "_w", "weight", weight)
      self._const(nid + "_b", "bias", bias)
      ins += [nid + "_w", nid + "_b"]
    self.tensors[nid] = {"id": nid, "shape": list(out_shape),
                         "dtype": "float32", "kind": "activation"}
    self.nodes.append({"id": nid, "op": op, "inputs": ins, "outputs": [nid],
                       "attrs": {"kernel": list(kernel),
                                 "stride": list(stride),
                                 "padding": padding, "axis": -1}})
    return nid

  def write(self, out_dir, output):
    self.tensors[output]["kind"] = "output"
    blob = bytearray()
    entries = []
    for tid in sorted(self.tensors):
      t = dict(self.tensors[tid])
      if tid in self.consts:
        data = self.consts[tid].tobytes()
        t["data"] = {"offset": len(blob), "length": len(data)}
        blob += data
      entries.append(t)
    manifest = {"format": "orbitc-model", "version": 1, "name": self.name,
                "blob": self.name + ".bin", "inputs": ["input"],
                "outputs": [output], "tensors": entries, "nodes": self.nodes}
    with open(os.path.join(out_dir, self.name + ".json"), "w") as f:
      json.dump(manifest, f, indent=2)
      f.write("\n")
    with open(os.path.join(out_dir, self.name + ".bin"), "wb") as f:
      f.write(bytes(blob))


def conv_w(layer):
  return layer.weight.detach().numpy().transpose(0, 2, 3, 1)


def dw_w(layer):
  return layer.weight.detach().numpy().transpose(1, 2, 3, 0)


def bias(layer):
  return layer.bias.detach().numpy()


def export_convnet(m, out_dir):
  e = Exporter("desk_convnet", (1, H, W, C_IN))
  x = e.node("conv1", "Conv2D", ["input"], (1, 32, 32, 16), (3, 3),
             padding="SAME", weight=conv_w(m.conv1), bias=bias(m.conv1))
  x = e.node("relu1", "ReLU", [x], (1, 32, 32, 16))
  x = e.node("pool1", "MaxPool2D", [x], (1, 16, 16, 16), (2, 2), (2, 2))
  x = e.node("conv2", "Conv2D", [x], (1, 16, 16, 32), (3, 3),
             padding="SAME", weight=conv_w(m.conv2), bias=bias(m.conv2))
  x = e.node("relu2", "ReLU", [x], (1, 16, 16, 32))
  x = e.node("pool2", "MaxPool2D", [x], (1, 8, 8, 32), (2, 2), (2, 2))
  x = e.node("conv3", "Conv2D", [x], (1, 8, 8, 64), (3, 3),
             padding="SAME", weight=conv_w(m.conv3), bias=bias(m.conv3))
  x = e.node("relu3", "ReLU", [x], (1, 8, 8, 64))
  x = e.node("gap", "AvgPool2D", [x], (1, 1, 1, 64), (8, 8), (8, 8))
  x = e.node("flatten", "Flatten", [x], (1, 64))
  x = e.node("fc", "FullyConnected", [x], (1, NUM_CLASSES),
             weight=m.fc.weight.detach().numpy(), bias=bias(m.fc))
  x = e.node("probs", "Softmax", [x], (1, NUM_CLASSES))
  e.write(out_dir, x)


def export_dsnet(m, out_dir):
  e = Exporter("desk_dsnet", (1, H, W, C_IN))
  x = e.node("c1", "Conv2D", ["input"], (1, 16, 16, 16), (3, 3), (2, 2),
             "SAME", conv_w(m.c1), bias(m.c1))
  x = e.node("c1_relu", "ReLU", [x], (1, 16, 16, 16))
  x = e.node("dw1", "DepthwiseConv2D", [x], (1, 16, 16, 16), (3, 3),
             padding="SAME", weight=dw_w(m.dw1), bias=bias(m.dw1))
  x = e.node("dw1_relu", "ReLU", [x], (1, 16, 16, 16))
  x = e.node("pw1", "Conv2D", [x], (1, 16, 16, 64),
             weight=conv_w(m.pw1), bias=bias(m.pw1))
  x = e.node("pw1_relu", "ReLU", [x], (1, 16, 16, 64))
  x = e.node("dw2", "DepthwiseConv2D", [x], (1, 8, 8, 64), (3, 3), (2, 2),
             "SAME", dw_w(m.dw2), bias(m.dw2))
  x = e.node("dw2_relu", "ReLU", [x], (1, 8, 8, 64))
  x = e.node("pw2", "Conv2D", [x], (1, 8, 8, 128),
             weight=conv_w(m.pw2), bias=bias(m.pw2))
  t_a = e.node("pw2_relu", "ReLU", [x], (1, 8, 8, 128))
  t_b = e.node("pw3", "Conv2D", [t_a], (1, 8, 8, 128),
               weight=conv_w(m.pw3), bias=bias(m.pw3))
  x = e.node("residual", "Add", [t_a, t_b], (1, 8, 8, 128))
  x = e.node("residual_relu", "ReLU", [x], (1, 8, 8, 128))
  x = e.node("pw4", "Conv2D", [x], (1, 8, 8, 512),
             weight=conv_w(m.pw4), bias=bias(m.pw4))
  x = e.node("pw4_relu", "ReLU", [x], (1, 8, 8, 512))
  x = e.node("gap", "AvgPool2D", [x], (1, 1, 1, 512), (8, 8), (8, 8))
  x = e.node("flatten", "Flatten", [x], (1, 512))
  x = e.node("fc", "FullyConnected", [x], (1, NUM_CLASSES),
             weight=m.fc.weight.detach().numpy(), bias=bias(m.fc))
  x = e.node("probs", "Softmax", [x], (1, NUM_CLASSES))
  e.write(out_dir, x)


def main():
  parser = argparse.ArgumentParser()
  parser.add_argument("--train", required=True)
  parser.add_argument("--eval", required=True)
  parser.add_argument("--out", default="models")
  parser.add_argument("--epochs", type=int, default=4)
  parser.add_argument("--seed", type=int, default=0)
  args = parser.parse_args()

  torch.set_num_threads(1)
  x, y = load_dataset(args.train)
  ex, ey = load_dataset(args.eval)
  os.makedirs(args.out, exist_ok=True)
  for name, ctor, export in (("desk_convnet", ConvNet, export_convnet),
                             ("desk_dsnet", DsNet, export_dsnet)):
    torch.manual_seed(args.seed)
    model = ctor()
    print(name)
    train(model, x, y, args.epochs, args.seed)
    with torch.no_grad():
      acc = (model(ex).argmax(1) == ey).float().mean().item()
    print(f"  eval accuracy {acc:.4f}")
    export(model, args.out)


if __name__ == "__main__":
  main()
