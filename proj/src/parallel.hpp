/*
 * Copyright 2026 The smrate Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstddef>
#include <exception>

namespace smrate::detail {

/// Runs f(0..n-1), on an OpenMP team when `parallel` is set. The first
/// exception raised by any iteration is rethrown on the calling thread.
template <class F>
void for_each_index(std::size_t n, bool parallel, F&& f) {
  std::exception_ptr error;
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static) if (parallel)
  for (std::ptrdiff_t idx = 0; idx < count; ++idx) {
    try {
      f(static_cast<std::size_t>(idx));
    } catch (...) {
#pragma omp critical(smrate_for_each_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace smrate::detail
