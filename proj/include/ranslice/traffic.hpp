#pragma once

// Per-user packet arrival generation for the service slices.
//
// Times are in milliseconds and sizes in bytes throughout.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ranslice/errors.hpp"
#include "ranslice/rng.hpp"

namespace ranslice {

inline constexpr double kDefaultParetoShape = 1.1;
inline constexpr int kDefaultChurnThreshold = 3;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class DistKind {
  kConstant,
  kUniform,
  kExponential,
  kTruncatedPareto,
  kTruncatedLognormal,
};

/// Clamped mean E[min(Y, max)] of a Pareto(scale, shape) variate Y.
/// `max` may be infinite when shape > 1.
inline double clamped_pareto_mean(double scale, double shape, double max) {
  if (scale >= max) return max;
  if (std::isinf(max)) return shape * scale / (shape - 1.0);
  if (shape == 1.0) return scale + scale * std::log(max / scale);
  return scale +
         scale / (shape - 1.0) * (1.0 - std::pow(scale / max, shape - 1.0));
}

/// Solves for the Pareto scale whose clamped mean equals `target_mean`.
/// The clamped mean is increasing in the scale and bounded by it from
/// below, so the root is bracketed by (0, target_mean].
inline double calibrate_truncated_pareto(double target_mean, double max,
                                         double shape = kDefaultParetoShape) {
  if (!(shape > 0.0)) throw ConfigError("pareto shape must be positive");
  if (!(target_mean > 0.0))
    throw ConfigError("infeasible pareto calibration: mean must be positive");
  if (!(target_mean < max))
    throw ConfigError("infeasible pareto calibration: mean must be below max");
  if (std::isinf(max) && shape <= 1.0)
    throw ConfigError("untruncated pareto needs shape > 1 for a finite mean");

  double lo = 0.0;
  double hi = target_mean;
  for (int i = 0; i < 200 && hi - lo > 1e-15 * target_mean; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (clamped_pareto_mean(mid, shape, max) < target_mean)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

struct LognormalParams {
  double mu = 0.0;
  double sigma = 0.0;
};

/// Moment inversion for the untruncated log-normal; truncation is applied
/// at sampling time by rejection.
inline LognormalParams calibrate_truncated_lognormal(double target_mean,
                                                     double target_sd,
                                                     double max) {
  if (!(target_mean > 0.0) || !(target_sd > 0.0))
    throw ConfigError("log-normal mean and standard deviation must be positive");
  if (!(max > target_mean))
    throw ConfigError("log-normal max must exceed the mean");
  const double ratio = target_sd / target_mean;
  const double var = std::log1p(ratio * ratio);
  return {std::log(target_mean) - 0.5 * var, std::sqrt(var)};
}

/// A one-dimensional sampling law. Build through the named factories; they
/// validate and pre-compute the calibrated parameters.
struct DistSpec {
  DistKind kind = DistKind::kConstant;
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  double std_dev = 0.0;
  double shape = 0.0;
  // Derived: Pareto scale, and the underlying normal of the log-normal.
  double scale = 0.0;
  double mu = 0.0;
  double sigma = 0.0;

  static DistSpec constant(double value) {
    if (!(value >= 0.0)) throw ConfigError("constant value must be >= 0");
    DistSpec d;
    d.kind = DistKind::kConstant;
    d.mean = d.min = d.max = value;
    return d;
  }

  static DistSpec uniform(double lo, double hi) {
    if (!(lo >= 0.0) || !(hi > lo))
      throw ConfigError("uniform needs max > min >= 0");
    DistSpec d;
    d.kind = DistKind::kUniform;
    d.min = lo;
    d.max = hi;
    d.mean = 0.5 * (lo + hi);
    return d;
  }

  static DistSpec exponential(double mean) {
    if (!(mean > 0.0) || std::isinf(mean))
      throw ConfigError("exponential mean must be positive and finite");
    DistSpec d;
    d.kind = DistKind::kExponential;
    d.mean = mean;
    d.max = kInf;
    return d;
  }

  static DistSpec truncated_pareto(double mean, double max,
                                   double shape = kDefaultParetoShape) {
    DistSpec d;
    d.kind = DistKind::kTruncatedPareto;
    d.mean = mean;
    d.max = max;
    d.shape = shape;
    d.scale = calibrate_truncated_pareto(mean, max, shape);
    d.min = d.scale;
    return d;
  }

  static DistSpec truncated_lognormal(double mean, double sd, double max) {
    DistSpec d;
    d.kind = DistKind::kTruncatedLognormal;
    d.mean = mean;
    d.std_dev = sd;
    d.max = max;
    const auto p = calibrate_truncated_lognormal(mean, sd, max);
    d.mu = p.mu;
    d.sigma = p.sigma;
    return d;
  }
};

inline double sample(const DistSpec& d, RandomStream& rng) {
  switch (d.kind) {
    case DistKind::kConstant:
      return d.mean;
    case DistKind::kUniform:
      return rng.uniform(d.min, d.max);
    case DistKind::kExponential:
      return -d.mean * std::log1p(-rng.uniform01());
    case DistKind::kTruncatedPareto: {
      // Inverse CDF, then clamp to max.
      const double u = 1.0 - rng.uniform01();  // (0, 1]
      const double v = d.scale * std::pow(u, -1.0 / d.shape);
      return v < d.max ? v : d.max;
    }
    case DistKind::kTruncatedLognormal:
      for (;;) {
        const double v = std::exp(d.mu + d.sigma * rng.normal());
        if (v <= d.max) return v;
      }
  }
  return d.mean;
}

/// Traffic law and SLA parameters for one slice. SLA fields of zero mean
/// "not yet calibrated"; until then the deadline is infinite and no user
/// churns.
struct ServiceProfile {
  std::string name;
  DistSpec interarrival;
  DistSpec packet_size;
  int num_users = 1;
  double sla_c1 = 0.0;
  double sla_c2 = 0.0;
  double deadline = kInf;
  int churn_threshold = kDefaultChurnThreshold;

  bool sla_calibrated() const { return sla_c2 > 0.0; }

  void validate() const {
    if (num_users < 1) throw ConfigError(name + ": num_users must be >= 1");
    if (churn_threshold < 1)
      throw ConfigError(name + ": churn threshold must be >= 1");
    if (sla_calibrated()) {
      if (!(sla_c1 > 0.0) || !(sla_c1 < sla_c2) || !(sla_c2 <= deadline))
        throw ConfigError(name + ": need 0 < c1 < c2 <= deadline");
    }
  }

  // Mean offered load in bytes per millisecond for the whole slice.
  double offered_load() const {
    return num_users * packet_size.mean / interarrival.mean;
  }
};

inline ServiceProfile video_profile(int users = 10) {
  return {"Video", DistSpec::truncated_pareto(6.0, 12.5),
          DistSpec::truncated_pareto(100.0, 250.0), users};
}

inline ServiceProfile volte_profile(int users = 10) {
  return {"VoLTE", DistSpec::uniform(0.0, 160.0), DistSpec::constant(40.0),
          users};
}

inline ServiceProfile urllc_profile(int users = 2) {
  return {"URLLC", DistSpec::exponential(180.0),
          DistSpec::truncated_lognormal(2.0e6, 0.722e6, 5.0e6), users};
}

struct UserSession {
  int user_id = 0;
  int slice_id = 0;
  double next_arrival_time = 0.0;
  int consecutive_unfulfilled = 0;
  std::uint64_t rng_stream_id = 0;
  RandomStream rng;
};

/// A fresh session whose first arrival is one interarrival after `start`.
inline UserSession make_session(const ServiceProfile& profile, int slice_id,
                                int user_id, std::uint64_t stream_id,
                                double start) {
  UserSession s{user_id, slice_id, start, 0, stream_id, RandomStream(stream_id)};
  s.next_arrival_time = start + sample(profile.interarrival, s.rng);
  return s;
}

struct Arrival {
  double time = 0.0;
  double size = 0.0;
};

/// Arrivals with time <= until, in order. Afterwards
/// session.next_arrival_time > until.
inline std::vector<Arrival> generate_arrivals(UserSession& session,
                                              const ServiceProfile& profile,
                                              double until) {
  std::vector<Arrival> out;
  while (session.next_arrival_time <= until) {
    out.push_back({session.next_arrival_time,
                   sample(profile.packet_size, session.rng)});
    session.next_arrival_time += sample(profile.interarrival, session.rng);
  }
  return out;
}

struct ChurnEvent {
  int slice_id = 0;
  int user_id = 0;
};

/// Updates the unfulfilled counter. Returns a churn event (and resets the
/// counter) once `churn_threshold` consecutive deliveries missed the
/// deadline. Replacing the session is the caller's job.
inline std::optional<ChurnEvent> record_delivery_outcome(
    UserSession& session, double latency, const ServiceProfile& profile) {
  if (latency > profile.deadline) {
    if (++session.consecutive_unfulfilled >= profile.churn_threshold) {
      session.consecutive_unfulfilled = 0;
      return ChurnEvent{session.slice_id, session.user_id};
    }
    return std::nullopt;
  }
  session.consecutive_unfulfilled = 0;
  return std::nullopt;
}

/// All user sessions of a run. Each session draws from its own stream keyed
/// by (run seed, slice, user, generation), so churn in one slice never
/// shifts another slice's draws.
class TrafficModel {
 public:
  TrafficModel(std::vector<ServiceProfile> profiles, std::uint64_t run_seed,
               double start_time = 0.0)
      : profiles_(std::move(profiles)), run_seed_(run_seed) {
    sessions_.resize(profiles_.size());
    generations_.resize(profiles_.size());
    for (std::size_t s = 0; s < profiles_.size(); ++s) {
      profiles_[s].validate();
      const int n = profiles_[s].num_users;
      generations_[s].assign(n, 0);
      for (int u = 0; u < n; ++u)
        sessions_[s].push_back(fresh_session(static_cast<int>(s), u, start_time));
    }
  }

  std::size_t num_slices() const { return profiles_.size(); }
  std::size_t num_users(std::size_t slice) const {
    return sessions_[slice].size();
  }
  const ServiceProfile& profile(std::size_t slice) const {
    return profiles_[slice];
  }
  const UserSession& session(std::size_t slice, std::size_t user) const {
    return sessions_[slice][user];
  }

  std::vector<Arrival> arrivals(std::size_t slice, std::size_t user,
                                double until) {
    return generate_arrivals(sessions_[slice][user], profiles_[slice], until);
  }

  /// On churn the user's session is replaced by a fresh one starting at
  /// `now`; the user count of the slice never changes.
  std::optional<ChurnEvent> record_delivery(std::size_t slice,
                                            std::size_t user, double latency,
                                            double now) {
    auto ev = record_delivery_outcome(sessions_[slice][user], latency,
                                      profiles_[slice]);
    if (ev) {
      ++generations_[slice][user];
      sessions_[slice][user] = fresh_session(static_cast<int>(slice),
                                             static_cast<int>(user), now);
    }
    return ev;
  }

 private:
  UserSession fresh_session(int slice, int user, double start) const {
    const auto gen = generations_[slice][user];
    const auto id = derive_seed(
        run_seed_, {static_cast<std::uint64_t>(slice),
                    static_cast<std::uint64_t>(user), gen});
    return make_session(profiles_[slice], slice, user, id, start);
  }

  std::vector<ServiceProfile> profiles_;
  std::uint64_t run_seed_;
  std::vector<std::vector<UserSession>> sessions_;
  std::vector<std::vector<std::uint64_t>> generations_;
};

}  // namespace ranslice
