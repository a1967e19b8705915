#pragma once

// Base station model: per-slice round-robin scheduling over fixed-length
// slots, with byte-level service and residual carry-over for packets that
// do not fit in one slot.

#include <algorithm>
#include <cstddef>
#include <deque>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "ranslice/errors.hpp"
#include "ranslice/traffic.hpp"

namespace ranslice {

inline constexpr double kSlotDurationMs = 0.5;
inline constexpr int kWindowSlots = 40;

struct PacketRecord {
  double arrival_time = 0.0;
  double size = 0.0;
  double remaining = 0.0;
  std::optional<double> completion_time;

  double latency() const { return completion_time.value_or(arrival_time) - arrival_time; }
};

struct SliceQueueState {
  int slice_id = 0;
  std::vector<std::deque<PacketRecord>> queues;
  std::size_t round_robin_cursor = 0;

  bool empty() const {
    return std::all_of(queues.begin(), queues.end(),
                       [](const auto& q) { return q.empty(); });
  }

  // Arrival time of the oldest head-of-line packet, if any is queued.
  std::optional<double> oldest_arrival() const {
    std::optional<double> t;
    for (const auto& q : queues)
      if (!q.empty() && (!t || q.front().arrival_time < *t))
        t = q.front().arrival_time;
    return t;
  }
};

struct Completion {
  int slice_id = 0;
  int user = 0;
  PacketRecord packet;
};

struct SlotReport {
  std::vector<double> served_bytes;
  std::vector<Completion> completions;
};

class BaseStation {
 public:
  BaseStation(double capacity_per_slot, std::span<const int> users_per_slice,
              int window_len = kWindowSlots,
              double slot_duration = kSlotDurationMs)
      : capacity_per_slot_(capacity_per_slot),
        slot_duration_(slot_duration),
        window_len_(window_len) {
    if (!(capacity_per_slot > 0.0))
      throw ConfigError("capacity_per_slot must be positive");
    if (!(slot_duration > 0.0)) throw ConfigError("slot duration must be positive");
    if (window_len < 1) throw ConfigError("window length must be >= 1");
    for (std::size_t s = 0; s < users_per_slice.size(); ++s) {
      if (users_per_slice[s] < 1) throw ConfigError("slice without users");
      SliceQueueState q;
      q.slice_id = static_cast<int>(s);
      q.queues.resize(users_per_slice[s]);
      slices_.push_back(std::move(q));
    }
    discarded_bytes_.assign(slices_.size(), 0.0);
  }

  double capacity_per_slot() const { return capacity_per_slot_; }
  double slot_duration() const { return slot_duration_; }
  int window_len() const { return window_len_; }
  double now() const { return now_; }
  std::size_t num_slices() const { return slices_.size(); }
  const SliceQueueState& slice(std::size_t s) const { return slices_[s]; }

  void enqueue(std::size_t slice, std::size_t user, const Arrival& a) {
    slices_[slice].queues[user].push_back({a.time, a.size, a.size, std::nullopt});
  }

  void discard_user_queue(std::size_t slice, std::size_t user) {
    for (const auto& p : slices_[slice].queues[user]) discarded_bytes_[slice] += p.remaining;
    slices_[slice].queues[user].clear();
  }

  // Bytes dropped with the queues of churned users.
  double discarded_bytes(std::size_t slice) const { return discarded_bytes_[slice]; }

  double queued_bytes(std::size_t slice) const {
    double b = 0.0;
    for (const auto& q : slices_[slice].queues)
      for (const auto& p : q) b += p.remaining;
    return b;
  }

  /// Serves one slot. Slice s gets a budget of allocation[s] * capacity
  /// bytes and never borrows from other slices. Inside a slice, users take
  /// turns serving their head-of-line packet starting at the cursor; a
  /// user may be visited several times in one slot. Completed packets are
  /// stamped with the slot end time.
  SlotReport run_slot(std::span<const double> allocation) {
    if (allocation.size() != slices_.size())
      throw UsageError("allocation size does not match slice count");
    const double slot_end = now_ + slot_duration_;
    SlotReport report;
    report.served_bytes.assign(slices_.size(), 0.0);

    for (std::size_t s = 0; s < slices_.size(); ++s) {
      auto& sl = slices_[s];
      const std::size_t n = sl.queues.size();
      double budget = allocation[s] * capacity_per_slot_;
      std::size_t idle_visits = 0;  // consecutive users found empty
      std::size_t u = sl.round_robin_cursor;
      while (budget > 0.0 && idle_visits < n) {
        auto& q = sl.queues[u];
        if (q.empty()) {
          ++idle_visits;
          u = (u + 1) % n;
          continue;
        }
        idle_visits = 0;
        auto& pkt = q.front();
        if (pkt.remaining <= budget) {
          budget -= pkt.remaining;
          report.served_bytes[s] += pkt.remaining;
          pkt.remaining = 0.0;
          pkt.completion_time = slot_end;
          report.completions.push_back({sl.slice_id, static_cast<int>(u), pkt});
          q.pop_front();
          u = (u + 1) % n;
          sl.round_robin_cursor = u;
        } else {
          // Partial service; this user resumes first next slot.
          pkt.remaining -= budget;
          report.served_bytes[s] += budget;
          budget = 0.0;
          sl.round_robin_cursor = u;
        }
      }
    }
    now_ = slot_end;
    return report;
  }

 private:
  double capacity_per_slot_;
  double slot_duration_;
  int window_len_;
  double now_ = 0.0;
  std::vector<double> discarded_bytes_;
  std::vector<SliceQueueState> slices_;
};

struct SliceWindowStats {
  double avg_latency_ms = 0.0;
  double bytes_arrived = 0.0;
  double bytes_served = 0.0;
  int completions = 0;
  int deadline_violations = 0;
  int churn_count = 0;
};

struct WindowStats {
  std::vector<SliceWindowStats> slices;

  int total_churn() const {
    int n = 0;
    for (const auto& s : slices) n += s.churn_count;
    return n;
  }
};

/// Runs one slicing window under a fixed allocation. Arrivals due by a
/// slot's start are queued before that slot is served. A slice with no
/// completions reports the age of its oldest queued packet as latency (0
/// when its queues are empty).
inline WindowStats run_window(BaseStation& bs,
                              std::span<const double> allocation,
                              TrafficModel& traffic) {
  const std::size_t ns = bs.num_slices();
  if (traffic.num_slices() != ns)
    throw UsageError("traffic model and base station disagree on slices");
  WindowStats stats;
  stats.slices.resize(ns);
  std::vector<double> latency_sum(ns, 0.0);

  for (int k = 0; k < bs.window_len(); ++k) {
    const double t = bs.now();
    for (std::size_t s = 0; s < ns; ++s) {
      for (std::size_t u = 0; u < traffic.num_users(s); ++u) {
        for (const auto& a : traffic.arrivals(s, u, t)) {
          bs.enqueue(s, u, a);
          stats.slices[s].bytes_arrived += a.size;
        }
      }
    }
    auto report = bs.run_slot(allocation);
    for (std::size_t s = 0; s < ns; ++s)
      stats.slices[s].bytes_served += report.served_bytes[s];
    for (const auto& c : report.completions) {
      auto& st = stats.slices[c.slice_id];
      const double lat = c.packet.latency();
      latency_sum[c.slice_id] += lat;
      ++st.completions;
      if (lat > traffic.profile(c.slice_id).deadline) ++st.deadline_violations;
      if (traffic.record_delivery(c.slice_id, c.user, lat, bs.now())) {
        bs.discard_user_queue(c.slice_id, c.user);
        ++st.churn_count;
      }
    }
  }

  for (std::size_t s = 0; s < ns; ++s) {
    auto& st = stats.slices[s];
    if (st.completions > 0) {
      st.avg_latency_ms = latency_sum[s] / st.completions;
    } else {
      const auto oldest = bs.slice(s).oldest_arrival();
      st.avg_latency_ms = oldest ? bs.now() - *oldest : 0.0;
    }
  }
  return stats;
}

/// Capacity (bytes per slot at 100% allocation) that puts the offered load
/// at `target_utilization` of the cell.
inline double calibrate_capacity(std::span<const ServiceProfile> profiles,
                                 double target_utilization,
                                 double slot_duration = kSlotDurationMs) {
  if (!(target_utilization > 0.0 && target_utilization < 1.0))
    throw ConfigError("target utilization must be in (0, 1)");
  double load = 0.0;  // bytes per ms
  for (const auto& p : profiles) load += p.offered_load();
  if (!(load > 0.0)) throw ConfigError("zero offered load");
  return load * slot_duration / target_utilization;
}

}  // namespace ranslice
