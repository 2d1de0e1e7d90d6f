#pragma once

#include <compare>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace mcs {

class TimeOverflowError : public std::overflow_error {
 public:
  using std::overflow_error::overflow_error;
};

// Simulated time in integer ticks; one tick is 10 ns. Arithmetic is checked:
// overflow and negative results throw instead of wrapping.
class SimTime {
 public:
  using rep = std::uint64_t;

  static constexpr rep kTicksPerMicro = 100;
  static constexpr rep kTicksPerMilli = 100'000;
  static constexpr rep kTicksPerSecond = 100'000'000;

  constexpr SimTime() = default;
  constexpr explicit SimTime(rep ticks) : ticks_(ticks) {}

  static constexpr SimTime zero() { return SimTime{}; }
  static constexpr SimTime max() { return SimTime{std::numeric_limits<rep>::max()}; }
  static constexpr SimTime tick() { return SimTime{1}; }

  static SimTime from_ms(rep ms) { return SimTime{checked_mul(ms, kTicksPerMilli)}; }
  static SimTime from_us(rep us) { return SimTime{checked_mul(us, kTicksPerMicro)}; }
  static SimTime from_seconds(rep s) { return SimTime{checked_mul(s, kTicksPerSecond)}; }
  // Fractional microseconds (table values with two decimals) rounded to the tick.
  static SimTime from_us_real(double us);

  constexpr rep ticks() const { return ticks_; }
  double micros() const { return static_cast<double>(ticks_) / kTicksPerMicro; }
  double millis() const { return static_cast<double>(ticks_) / kTicksPerMilli; }

  friend constexpr auto operator<=>(SimTime, SimTime) = default;

  friend SimTime operator+(SimTime a, SimTime b) {
    rep out;
    if (__builtin_add_overflow(a.ticks_, b.ticks_, &out)) throw TimeOverflowError("SimTime addition overflow");
    return SimTime{out};
  }
  friend SimTime operator-(SimTime a, SimTime b) {
    if (b.ticks_ > a.ticks_) throw TimeOverflowError("SimTime subtraction underflow");
    return SimTime{a.ticks_ - b.ticks_};
  }
  friend SimTime operator*(SimTime a, rep k) { return SimTime{checked_mul(a.ticks_, k)}; }
  friend SimTime operator*(rep k, SimTime a) { return a * k; }
  SimTime& operator+=(SimTime o) { return *this = *this + o; }
  SimTime& operator-=(SimTime o) { return *this = *this - o; }

  static rep checked_mul(rep a, rep b) {
    rep out;
    if (__builtin_mul_overflow(a, b, &out)) throw TimeOverflowError("SimTime multiplication overflow");
    return out;
  }

 private:
  rep ticks_ = 0;
};

// ceil(a / b) for positive b.
inline SimTime::rep ceil_div(SimTime a, SimTime b) {
  if (b.ticks() == 0) throw std::domain_error("ceil_div by zero duration");
  return a.ticks() / b.ticks() + (a.ticks() % b.ticks() != 0 ? 1 : 0);
}

inline SimTime min(SimTime a, SimTime b) { return a < b ? a : b; }
inline SimTime max(SimTime a, SimTime b) { return a < b ? b : a; }

std::string to_string(SimTime t);

}  // namespace mcs
