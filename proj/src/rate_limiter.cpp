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

#include "tiab/rate_limiter.hpp"

#include "tiab/error.hpp"

namespace tiab::llm {

RateLimiter::RateLimiter(long requests_per_window, Clock& clock, Clock::duration window)
    : limit_(requests_per_window), clock_(clock), window_(window) {
  if (requests_per_window < 1) throw Error(ErrorCode::validation, "requests per minute must be positive");
  if (window <= Clock::duration::zero()) throw Error(ErrorCode::validation, "rate window must be positive");
}

Clock::time_point RateLimiter::acquire() {
  for (;;) {
    Clock::duration wait;
    {
      std::lock_guard lock(mu_);
      const auto now = clock_.now();
      while (!admitted_.empty() && admitted_.front() + window_ <= now) admitted_.pop_front();
      if (static_cast<long>(admitted_.size()) < limit_) {
        admitted_.push_back(now);
        return now;
      }
      wait = admitted_.front() + window_ - now;
    }
    clock_.sleep_for(wait);
  }
}

}  // namespace tiab::llm
