#include "provisim/trial/clock.hpp"

#include <cstdio>
#include <ctime>

#include "provisim/error.hpp"

namespace provisim::trial {

TimePoint SystemClock::now() {
  return std::chrono::time_point_cast<std::chrono::milliseconds>(std::chrono::system_clock::now());
}

TimePoint ManualClock::now() {
  std::lock_guard lock(mutex_);
  return now_;
}

void ManualClock::advance(std::chrono::milliseconds by) {
  std::lock_guard lock(mutex_);
  now_ += by;
}

std::string to_iso8601(TimePoint t) {
  using namespace std::chrono;
  const sys_days day = floor<days>(t);
  const year_month_day ymd{day};
  const hh_mm_ss<milliseconds> tod{t - day};
  char buf[40];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02ld:%02ld:%02lldZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<long>(tod.hours().count()), static_cast<long>(tod.minutes().count()),
                static_cast<long long>(tod.seconds().count()));
  // Splice the milliseconds in before the trailing 'Z'.
  std::string out(buf);
  char ms[8];
  std::snprintf(ms, sizeof ms, ".%03lld", static_cast<long long>(tod.subseconds().count()));
  out.insert(out.size() - 1, ms);
  return out;
}

TimePoint parse_iso8601(std::string_view text) {
  using namespace std::chrono;
  int y = 0;
  unsigned mo = 0, d = 0, h = 0, mi = 0, s = 0, ms = 0;
  char tail = 0;
  const std::string str(text);
  if (std::sscanf(str.c_str(), "%4d-%2u-%2uT%2u:%2u:%2u.%3u%c", &y, &mo, &d, &h, &mi, &s, &ms,
                  &tail) != 8 ||
      tail != 'Z' || str.size() != 24) {
    throw Error(ErrorCode::kInvalidArgument, "malformed timestamp \"" + str + "\"");
  }
  const year_month_day ymd{year{y}, month{mo}, day{d}};
  if (!ymd.ok() || h > 23 || mi > 59 || s > 59) {
    throw Error(ErrorCode::kInvalidArgument, "malformed timestamp \"" + str + "\"");
  }
  return sys_days{ymd} + hours{h} + minutes{mi} + seconds{s} + milliseconds{ms};
}

}  // namespace provisim::trial
