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
#include <deque>
#include <mutex>

#include "tiab/clock.hpp"

namespace tiab::llm {

/// Sliding-window log limiter: at most `requests_per_window` acquisitions in
/// any half-open window of length `window`. acquire() sleeps on the injected
/// clock until a slot frees up.
class RateLimiter {
 public:
  RateLimiter(long requests_per_window, Clock& clock, Clock::duration window = std::chrono::seconds(60));

  /// Blocks until the request may go out; returns its admission time.
  Clock::time_point acquire();
  long limit() const noexcept { return limit_; }

 private:
  long limit_;
  Clock& clock_;
  Clock::duration window_;
  std::mutex mu_;
  std::deque<Clock::time_point> admitted_;
};

}  // namespace tiab::llm
