#pragma once

namespace dhpl {

enum class TimeMode { Real, Model };

/// Per-rank host clock. In Real mode it reads a monotonic clock shared by
/// the whole process; in Model mode it is a simulated timeline that only
/// moves when the owner charges work or waits for a later event.
class Clock {
 public:
  explicit Clock(TimeMode mode = TimeMode::Real);

  TimeMode mode() const { return mode_; }
  double now() const;

  /// Block (Real) or jump (Model) until time t. No-op if t is in the past.
  void wait_until(double t);
  /// Model mode: advance by dt. Real mode: no-op, the work itself takes the time.
  void charge(double dt);

  /// Seconds since the process-wide epoch.
  static double wall();

 private:
  TimeMode mode_;
  double sim_ = 0.0;
};

}  // namespace dhpl
