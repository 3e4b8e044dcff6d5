// Four-stream discrete-event simulation of one layer's GEMM pipeline.
//
// Stream-A runs CPU GEMMs, Stream-B kernel launches, Stream-C host-to-device
// weight copies and Stream-D GPU GEMMs. Every stream is a single server with
// a FIFO queue. Per GEMM i the launch block (transfer launch, then compute
// launch) must finish before copy i starts, and copy i must finish before
// GPU GEMM i starts. CPU GEMMs have no cross-stream dependencies.

#include <array>
#include <cstdint>
#include <deque>
#include <queue>
#include <vector>

#include "sliceplan/pipeline.hpp"

namespace sliceplan {

namespace {

constexpr std::size_t kStreams = 4;

struct Task {
  Stream stream;
  std::int64_t gemm;
  double duration;
  int pending_deps = 0;
  std::vector<std::size_t> dependents;
  double end = 0.0;
};

struct Event {
  double time;
  std::uint64_t seq;
  std::size_t task;
  bool operator>(const Event& o) const { return time != o.time ? time > o.time : seq > o.seq; }
};

class StreamSimulator {
 public:
  explicit StreamSimulator(std::vector<Task> tasks) : tasks_(std::move(tasks)) {}

  void run() {
    for (std::size_t i = 0; i < tasks_.size(); ++i) {
      if (tasks_[i].pending_deps == 0) make_ready(i, 0.0);
    }
    while (!events_.empty()) {
      Event ev = events_.top();
      events_.pop();
      complete(ev.task, ev.time);
    }
  }

  const std::vector<Task>& tasks() const { return tasks_; }

 private:
  static std::size_t idx(Stream s) { return static_cast<std::size_t>(s); }

  void make_ready(std::size_t task, double now) {
    const std::size_t s = idx(tasks_[task].stream);
    queue_[s].push_back(task);
    if (!busy_[s]) start_next(s, now);
  }

  void start_next(std::size_t s, double now) {
    if (queue_[s].empty()) return;
    const std::size_t task = queue_[s].front();
    queue_[s].pop_front();
    busy_[s] = true;
    // Same operation order as the recurrence: max(ready, free) + duration.
    const double start = std::max(now, free_at_[s]);
    events_.push(Event{start + tasks_[task].duration, seq_++, task});
  }

  void complete(std::size_t task, double now) {
    Task& t = tasks_[task];
    t.end = now;
    const std::size_t s = idx(t.stream);
    busy_[s] = false;
    free_at_[s] = now;
    for (std::size_t dep : t.dependents) {
      if (--tasks_[dep].pending_deps == 0) make_ready(dep, now);
    }
    start_next(s, now);
  }

  std::vector<Task> tasks_;
  std::array<std::deque<std::size_t>, kStreams> queue_{};
  std::array<bool, kStreams> busy_{};
  std::array<double, kStreams> free_at_{};
  std::priority_queue<Event, std::vector<Event>, std::greater<>> events_;
  std::uint64_t seq_ = 0;
};

}  // namespace

Timeline simulate_streams(const StageTimes& s, std::int64_t gemms) {
  const auto n = static_cast<std::size_t>(std::max<std::int64_t>(gemms, 0));

  // Task layout: 4 per GEMM in order launch, transfer, gpu, cpu.
  std::vector<Task> tasks;
  tasks.reserve(4 * n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto g = static_cast<std::int64_t>(i + 1);
    const std::size_t base = tasks.size();
    tasks.push_back(Task{Stream::Launch, g, s.launch, 0, {base + 1}});
    tasks.push_back(Task{Stream::Transfer, g, s.transfer, 1, {base + 2}});
    tasks.push_back(Task{Stream::Gpu, g, s.gpu, 1, {}});
    tasks.push_back(Task{Stream::Cpu, g, s.cpu, 0, {}});
  }

  StreamSimulator sim(std::move(tasks));
  sim.run();

  Timeline t;
  t.tau_launch.assign(n + 1, 0.0);
  t.tau_transfer.assign(n + 1, 0.0);
  t.tau_gpu.assign(n + 1, 0.0);
  t.tau_cpu.assign(n + 1, 0.0);
  for (const Task& task : sim.tasks()) {
    const auto i = static_cast<std::size_t>(task.gemm);
    switch (task.stream) {
      case Stream::Launch: t.tau_launch[i] = task.end; break;
      case Stream::Transfer: t.tau_transfer[i] = task.end; break;
      case Stream::Gpu: t.tau_gpu[i] = task.end; break;
      case Stream::Cpu: t.tau_cpu[i] = task.end; break;
    }
  }
  t.t_fin = std::max(t.tau_gpu[n], t.tau_cpu[n]);
  t.label = label_timeline(s, t.tau_gpu[n], t.tau_cpu[n]);
  return t;
}

}  // namespace sliceplan
