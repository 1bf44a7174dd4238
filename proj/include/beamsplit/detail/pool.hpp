#pragma once

#include <atomic>
#include <exception>
#include <thread>

namespace beamsplit {

template <typename Context>
void run_pool(std::size_t n, int workers, const std::function<Context()>& make_context,
              const std::function<void(Context&, std::size_t)>& task) {
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    try {
      Context ctx = make_context();
      for (std::size_t i = next++; i < n && !failed; i = next++) task(ctx, i);
    } catch (...) {
      std::lock_guard lock(error_mutex);
      if (!error) error = std::current_exception();
      failed = true;
    }
  };
  const int count = std::max(1, std::min<int>(workers, static_cast<int>(n)));
  if (count == 1) {
    worker();
  } else {
    std::vector<std::jthread> threads;
    for (int i = 0; i < count; ++i) threads.emplace_back(worker);
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace beamsplit
