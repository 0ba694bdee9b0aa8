#pragma once

#include <chrono>
#include <mutex>
#include <string>
#include <string_view>

namespace provisim::trial {

using TimePoint = std::chrono::sys_time<std::chrono::milliseconds>;

class Clock {
 public:
  virtual ~Clock() = default;
  virtual TimePoint now() = 0;
};

class SystemClock final : public Clock {
 public:
  TimePoint now() override;
};

/// Test clock that only moves when told to.
class ManualClock final : public Clock {
 public:
  explicit ManualClock(TimePoint start) : now_(start) {}

  TimePoint now() override;
  void advance(std::chrono::milliseconds by);

 private:
  std::mutex mutex_;
  TimePoint now_;
};

/// "YYYY-MM-DDTHH:MM:SS.mmmZ"
std::string to_iso8601(TimePoint t);
/// Inverse of to_iso8601; throws provisim::Error on malformed input.
TimePoint parse_iso8601(std::string_view text);

}  // namespace provisim::trial
