#include "dhpl/clock.hpp"

#include <chrono>
#include <thread>

namespace dhpl {

namespace {
const auto kEpoch = std::chrono::steady_clock::now();
}

Clock::Clock(TimeMode mode) : mode_(mode) {}

double Clock::wall() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - kEpoch).count();
}

double Clock::now() const { return mode_ == TimeMode::Model ? sim_ : wall(); }

void Clock::wait_until(double t) {
  if (mode_ == TimeMode::Model) {
    if (t > sim_) sim_ = t;
    return;
  }
  const double dt = t - wall();
  if (dt > 0) std::this_thread::sleep_for(std::chrono::duration<double>(dt));
}

void Clock::charge(double dt) {
  if (mode_ == TimeMode::Model && dt > 0) sim_ += dt;
}

}  // namespace dhpl
