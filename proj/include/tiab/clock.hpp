// Copyright 2026 The tiab-screen Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <chrono>
#include <mutex>
#include <string>

namespace tiab {

/// Time source used for timestamps, rate limiting and retry backoff.
/// Injected everywhere so tests can run against a manual clock.
class Clock {
 public:
  using time_point = std::chrono::system_clock::time_point;
  using duration = std::chrono::system_clock::duration;

  virtual ~Clock() = default;
  virtual time_point now() = 0;
  virtual void sleep_for(duration d) = 0;
};

class SystemClock final : public Clock {
 public:
  time_point now() override;
  void sleep_for(duration d) override;
};

/// Deterministic clock: sleeping advances time instantly. Thread-safe.
class ManualClock final : public Clock {
 public:
  explicit ManualClock(time_point start = time_point{std::chrono::seconds{1'767'225'600}});

  time_point now() override;
  void sleep_for(duration d) override;
  void advance(duration d);

 private:
  std::mutex mu_;
  time_point now_;
};

SystemClock& system_clock();

/// RFC-3339 UTC with millisecond precision, e.g. 2026-01-01T00:00:00.000Z.
std::string format_timestamp(Clock::time_point tp);

}  // namespace tiab
