#pragma once

#include <string>

#include "towerforge/errors.hpp"
#include "towerforge/rational.hpp"

namespace towerforge {

// Measure of a set: a nonnegative rational, or the single absorbing value
// INFINITE (the reserved mass of the implicit atom-1 / infinite level).
class MeasureValue {
 public:
  MeasureValue() : infinite_(false), value_(0) {}

  explicit MeasureValue(Rational v) : infinite_(false), value_(std::move(v)) {
    require(value_ >= 0, ErrorKind::kPrecondition, "negative measure");
  }

  static MeasureValue infinite() {
    MeasureValue m;
    m.infinite_ = true;
    return m;
  }

  bool is_infinite() const { return infinite_; }

  // Finite value accessor; never call on INFINITE.
  const Rational& value() const {
    require(!infinite_, ErrorKind::kPrecondition, "finite value of INFINITE measure");
    return value_;
  }

  MeasureValue operator+(const MeasureValue& o) const {
    if (infinite_ || o.infinite_) return infinite();
    return MeasureValue(value_ + o.value_);
  }
  MeasureValue& operator+=(const MeasureValue& o) { return *this = *this + o; }

  bool operator==(const MeasureValue& o) const {
    if (infinite_ != o.infinite_) return false;
    return infinite_ || value_ == o.value_;
  }
  bool operator!=(const MeasureValue& o) const { return !(*this == o); }

  bool is_zero() const { return !infinite_ && value_ == 0; }

  std::string str() const { return infinite_ ? "INFINITE" : towerforge::to_string(value_); }

 private:
  bool infinite_;
  Rational value_;
};

}  // namespace towerforge
