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

#include "orbitc/mapper.h"

#include <algorithm>
#include <limits>
#include <set>

namespace orbitc {

KernelSchedule Partition::kernels() const {
  KernelSchedule k;
  for (const auto& g : groups) k.kernels.push_back(g.nodes);
  return k;
}

Partition PartitionAndFuse(const Graph& qgraph, const HardwareProfile& profile) {
  auto report = Validate(qgraph);
  if (!report.ok()) throw GraphError("invalid graph: " + report.ToString());
  if (!qgraph.is_quantized())
    throw GraphError("mapping requires a quantized graph");
  const auto order = InferShapes(qgraph).order;
  const std::set<std::string> outputs(qgraph.outputs.begin(),
                                      qgraph.outputs.end());

  Partition p;
  for (const auto& n : qgraph.nodes)
    p.assignment[n.id] =
        profile.npu_supported_ops.count(n.kind) ? Target::kNpu : Target::kCpu;

  std::set<int> absorbed;
  for (int i : order) {
    if (absorbed.count(i)) continue;
    const OpNode& n = qgraph.nodes[i];
    FusedGroup group{{n.id}, p.assignment[n.id]};
    if (IsWeightedOp(n.kind) && !outputs.count(n.outputs[0])) {
      auto readers = qgraph.consumers(n.outputs[0]);
      if (readers.size() == 1) {
        const OpNode& next = qgraph.nodes[readers[0]];
        if (next.kind == OpKind::kReLU &&
            p.assignment[next.id] == group.target) {
          group.nodes.push_back(next.id);
          absorbed.insert(readers[0]);
          ++p.fused_pairs;
        }
      }
    }
    p.groups.push_back(std::move(group));
  }
  return p;
}

std::vector<std::vector<int>> GroupDependencies(const Graph& graph,
                                                const Partition& partition) {
  std::map<std::string, int> group_of_tensor;
  for (size_t g = 0; g < partition.groups.size(); ++g)
    for (const auto& id : partition.groups[g].nodes)
      for (const auto& out : graph.node(id).outputs)
        group_of_tensor[out] = static_cast<int>(g);
  std::vector<std::vector<int>> deps(partition.groups.size());
  for (size_t g = 0; g < partition.groups.size(); ++g) {
    std::set<int> preds;
    for (const auto& id : partition.groups[g].nodes)
      for (const auto& in : graph.node(id).inputs) {
        auto it = group_of_tensor.find(in);
        if (it != group_of_tensor.end() && it->second != static_cast<int>(g))
          preds.insert(it->second);
      }
    deps[g].assign(preds.begin(), preds.end());
  }
  return deps;
}

namespace {

void CheckTasks(const std::vector<ScheduleTask>& tasks) {
  for (size_t i = 0; i < tasks.size(); ++i) {
    if (!(tasks[i].latency_us >= 0.0))
      throw Error("task " + std::to_string(i) + " has negative latency");
    for (int d : tasks[i].deps)
      if (d < 0 || d >= static_cast<int>(tasks.size()) ||
          d == static_cast<int>(i))
        throw GraphError("task " + std::to_string(i) +
                         " has invalid dependency " + std::to_string(d));
  }
}

class Lanes {
 public:
  Lanes(const std::vector<ScheduleTask>& tasks, double transfer)
      : tasks_(tasks), transfer_(transfer), end_(tasks.size(), 0.0) {}

  double EarliestStart(int t) const {
    const Target target = tasks_[t].target;
    double start = free_[Index(target)];
    for (int d : tasks_[t].deps) {
      double ready = end_[d] + (tasks_[d].target != target ? transfer_ : 0.0);
      start = std::max(start, ready);
    }
    return start;
  }

  void Place(int t, Timeline& timeline) {
    const double start = EarliestStart(t);
    end_[t] = start + tasks_[t].latency_us;
    free_[Index(tasks_[t].target)] = end_[t];
    timeline.push_back({t, tasks_[t].target, start, end_[t]});
  }

 private:
  static int Index(Target t) { return t == Target::kNpu ? 0 : 1; }

  const std::vector<ScheduleTask>& tasks_;
  double transfer_;
  std::vector<double> end_;
  double free_[2] = {0.0, 0.0};
};

void SortTimeline(Timeline& timeline) {
  std::sort(timeline.begin(), timeline.end(),
            [](const TimelineEntry& a, const TimelineEntry& b) {
              if (a.start_us != b.start_us) return a.start_us < b.start_us;
              return a.group < b.group;
            });
}

}  // namespace

namespace {

// Depth-first search over list orders. Children follow decreasing upward
// rank, so the first leaf is the plain rank-priority list schedule.
class OrderSearch {
 public:
  OrderSearch(const std::vector<ScheduleTask>& tasks, double transfer,
              size_t budget)
      : tasks_(tasks), transfer_(transfer), budget_(budget),
        n_(static_cast<int>(tasks.size())), succ_(n_), pending_(n_, 0),
        end_(n_, 0.0), done_(n_, false) {
    for (int i = 0; i < n_; ++i) {
      pending_[i] = static_cast<int>(tasks[i].deps.size());
      for (int d : tasks[i].deps) succ_[d].push_back(i);
    }
    ComputeRanks();
    for (int i = 0; i < n_; ++i) lane_work_[Lane(i)] += tasks[i].latency_us;
  }

  std::vector<int> Run() {
    Descend();
    return best_order_;
  }

  bool exhausted() const { return expansions_ > budget_; }

 private:
  static int Index(Target t) { return t == Target::kNpu ? 0 : 1; }
  int Lane(int t) const { return Index(tasks_[t].target); }

  void ComputeRanks() {
    std::vector<int> indeg = pending_;
    std::vector<int> ready, order;
    for (int i = 0; i < n_; ++i)
      if (indeg[i] == 0) ready.push_back(i);
    while (!ready.empty()) {
      int t = ready.back();
      ready.pop_back();
      order.push_back(t);
      for (int s : succ_[t])
        if (--indeg[s] == 0) ready.push_back(s);
    }
    if (static_cast<int>(order.size()) != n_)
      throw GraphError("dependency cycle among scheduled groups");
    rank_.assign(n_, 0.0);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      double tail = 0.0;
      for (int s : succ_[*it])
        tail = std::max(tail, Transfer(*it, s) + rank_[s]);
      rank_[*it] = tasks_[*it].latency_us + tail;
    }
  }

  double Transfer(int from, int to) const {
    return tasks_[from].target != tasks_[to].target ? transfer_ : 0.0;
  }

  double Ready(int t) const {
    double r = 0.0;
    for (int d : tasks_[t].deps)
      if (done_[d]) r = std::max(r, end_[d] + Transfer(d, t));
    return r;
  }

  double LowerBound() const {
    double lb = makespan_;
    for (int l = 0; l < 2; ++l) lb = std::max(lb, free_[l] + lane_work_[l]);
    for (int t = 0; t < n_; ++t)
      if (!done_[t]) lb = std::max(lb, Ready(t) + rank_[t]);
    return lb;
  }

  void Descend() {
    if (++expansions_ > budget_ && !best_order_.empty()) return;
    if (static_cast<int>(order_.size()) == n_) {
      if (best_order_.empty() || makespan_ < best_makespan_) {
        best_makespan_ = makespan_;
        best_order_ = order_;
      }
      return;
    }
    if (!best_order_.empty() && LowerBound() >= best_makespan_) return;
    std::vector<int> ready;
    for (int t = 0; t < n_; ++t)
      if (!done_[t] && pending_[t] == 0) ready.push_back(t);
    std::stable_sort(ready.begin(), ready.end(),
                     [&](int a, int b) { return rank_[a] > rank_[b]; });
    for (int t : ready) {
      const int lane = Lane(t);
      const double saved_free = free_[lane];
      const double saved_makespan = makespan_;
      const double start = std::max(free_[lane], Ready(t));
      end_[t] = start + tasks_[t].latency_us;
      free_[lane] = end_[t];
      makespan_ = std::max(makespan_, end_[t]);
      lane_work_[lane] -= tasks_[t].latency_us;
      done_[t] = true;
      for (int s : succ_[t]) --pending_[s];
      order_.push_back(t);

      Descend();

      order_.pop_back();
      for (int s : succ_[t]) ++pending_[s];
      done_[t] = false;
      lane_work_[lane] += tasks_[t].latency_us;
      makespan_ = saved_makespan;
      free_[lane] = saved_free;
      if (expansions_ > budget_) return;
    }
  }

  const std::vector<ScheduleTask>& tasks_;
  double transfer_;
  size_t budget_;
  int n_;
  std::vector<std::vector<int>> succ_;
  std::vector<int> pending_;
  std::vector<double> rank_;
  std::vector<double> end_;
  std::vector<bool> done_;
  double free_[2] = {0.0, 0.0};
  double lane_work_[2] = {0.0, 0.0};
  double makespan_ = 0.0;
  std::vector<int> order_;
  std::vector<int> best_order_;
  double best_makespan_ = 0.0;
  size_t expansions_ = 0;
};

}  // namespace

Timeline ListSchedule(const std::vector<ScheduleTask>& tasks,
                      double transfer_latency_us, size_t search_budget) {
  CheckTasks(tasks);
  OrderSearch search(tasks, transfer_latency_us, search_budget);
  return ScheduleInOrder(tasks, search.Run(), transfer_latency_us);
}

Timeline ScheduleInOrder(const std::vector<ScheduleTask>& tasks,
                         const std::vector<int>& order,
                         double transfer_latency_us) {
  CheckTasks(tasks);
  if (order.size() != tasks.size())
    throw Error("schedule order must list every task once");
  std::vector<bool> done(tasks.size(), false);
  Lanes lanes(tasks, transfer_latency_us);
  Timeline timeline;
  for (int t : order) {
    if (t < 0 || t >= static_cast<int>(tasks.size()) || done[t])
      throw Error("schedule order must list every task once");
    for (int d : tasks[t].deps)
      if (!done[d])
        throw GraphError("task " + std::to_string(t) +
                         " scheduled before its dependency " + std::to_string(d));
    lanes.Place(t, timeline);
    done[t] = true;
  }
  SortTimeline(timeline);
  return timeline;
}

double Makespan(const Timeline& timeline) {
  double m = 0.0;
  for (const auto& e : timeline) m = std::max(m, e.end_us);
  return m;
}

std::vector<LiveTensor> TensorLifetimes(const Graph& graph,
                                        const Partition& partition,
                                        const Timeline& timeline) {
  const int steps = static_cast<int>(timeline.size());
  std::vector<int> step_of_group(partition.groups.size(), -1);
  for (int s = 0; s < steps; ++s) step_of_group.at(timeline[s].group) = s;
  std::map<std::string, int> step_of_node;
  for (size_t g = 0; g < partition.groups.size(); ++g) {
    if (step_of_group[g] < 0)
      throw Error("timeline misses group " + std::to_string(g));
    for (const auto& id : partition.groups[g].nodes)
      step_of_node[id] = step_of_group[g];
  }

  std::set<std::string> internal;
  for (const auto& g : partition.groups)
    for (size_t k = 0; k + 1 < g.nodes.size(); ++k)
      for (const auto& out : graph.node(g.nodes[k]).outputs) internal.insert(out);
  const std::set<std::string> outputs(graph.outputs.begin(), graph.outputs.end());
  const std::set<std::string> inputs(graph.inputs.begin(), graph.inputs.end());

  std::vector<LiveTensor> result;
  for (const auto& [id, t] : graph.tensors) {
    if (t.is_constant() || internal.count(id)) continue;
    LiveTensor live{id, t.byte_size(), 0, 0};
    if (!inputs.count(id)) {
      int p = graph.producer(id);
      if (p < 0) continue;
      live.first = step_of_node.at(graph.nodes[p].id);
    }
    live.last = live.first;
    double reader_end = 0.0;
    for (int c : graph.consumers(id)) {
      int s = step_of_node.at(graph.nodes[c].id);
      live.last = std::max(live.last, s);
      reader_end = std::max(reader_end, timeline[s].end_us);
    }
    if (outputs.count(id)) live.last = steps - 1;
    for (int s = live.last + 1; s < steps; ++s)
      if (timeline[s].start_us < reader_end) live.last = s;
    result.push_back(std::move(live));
  }
  return result;
}

namespace {

bool LiveTogether(const LiveTensor& a, const LiveTensor& b) {
  return a.first <= b.last && b.first <= a.last;
}

}  // namespace

MemoryPlan AssignOffsets(const std::vector<LiveTensor>& tensors) {
  std::vector<const LiveTensor*> order;
  for (const auto& t : tensors) order.push_back(&t);
  std::sort(order.begin(), order.end(), [](const LiveTensor* a, const LiveTensor* b) {
    if (a->size != b->size) return a->size > b->size;
    if (a->first != b->first) return a->first < b->first;
    return a->id < b->id;
  });

  MemoryPlan plan;
  std::vector<std::pair<const LiveTensor*, int64_t>> placed;
  for (const LiveTensor* t : order) {
    std::vector<std::pair<int64_t, int64_t>> busy;
    for (const auto& [other, offset] : placed)
      if (LiveTogether(*t, *other)) busy.emplace_back(offset, offset + other->size);
    std::sort(busy.begin(), busy.end());
    int64_t best = -1;
    int64_t best_gap = std::numeric_limits<int64_t>::max();
    int64_t cursor = 0;
    for (const auto& [lo, hi] : busy) {
      if (lo > cursor && lo - cursor >= t->size && lo - cursor < best_gap) {
        best = cursor;
        best_gap = lo - cursor;
      }
      cursor = std::max(cursor, hi);
    }
    if (best < 0) best = cursor;
    placed.emplace_back(t, best);
    plan.blocks[t->id] = {best, t->size, t->first, t->last};
    plan.arena_bytes = std::max(plan.arena_bytes, best + t->size);
    plan.total_bytes += t->size;
  }

  int steps = 0;
  for (const auto& t : tensors) steps = std::max(steps, t.last + 1);
  for (int s = 0; s < steps; ++s) {
    int64_t live = 0;
    for (const auto& t : tensors)
      if (t.first <= s && s <= t.last) live += t.size;
    plan.live_peak_bytes = std::max(plan.live_peak_bytes, live);
  }
  return plan;
}

MemoryPlan PlanMemory(const Graph& graph, const Partition& partition,
                      const Timeline& timeline) {
  return AssignOffsets(TensorLifetimes(graph, partition, timeline));
}

std::vector<std::pair<std::string, std::string>> MemoryConflicts(
    const MemoryPlan& plan) {
  std::vector<std::pair<std::string, std::string>> conflicts;
  for (auto a = plan.blocks.begin(); a != plan.blocks.end(); ++a)
    for (auto b = std::next(a); b != plan.blocks.end(); ++b) {
      const auto& x = a->second;
      const auto& y = b->second;
      bool time = x.first_step <= y.last_step && y.first_step <= x.last_step;
      bool bytes = x.offset < y.offset + y.size && y.offset < x.offset + x.size;
      if (time && bytes) conflicts.emplace_back(a->first, b->first);
    }
  return conflicts;
}

}  // namespace orbitc
