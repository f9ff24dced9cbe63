#pragma once

#include <chrono>
#include <functional>
#include <future>
#include <memory>
#include <optional>
#include <thread>
#include <type_traits>
#include <vector>

#include "affect/core/error.hpp"

namespace affect {

/// Runs each call on its own thread and waits at most `deadline` for all of
/// them together. Calls still running at the deadline yield nullopt and are
/// left to finish in the background, so callables must own their inputs.
/// A zero deadline runs the calls inline, in order.
template <class R>
std::vector<std::optional<R>> call_all_with_deadline(std::vector<std::function<R()>> calls,
                                                     std::chrono::milliseconds deadline) {
  std::vector<std::optional<R>> out(calls.size());
  if (deadline.count() <= 0) {
    for (std::size_t i = 0; i < calls.size(); ++i) out[i] = calls[i]();
    return out;
  }
  std::vector<std::future<R>> futures;
  futures.reserve(calls.size());
  for (auto& c : calls) {
    auto task = std::make_shared<std::packaged_task<R()>>(std::move(c));
    futures.push_back(task->get_future());
    std::thread([task] { (*task)(); }).detach();
  }
  const auto until = std::chrono::steady_clock::now() + deadline;
  for (std::size_t i = 0; i < futures.size(); ++i) {
    if (futures[i].wait_until(until) == std::future_status::ready) out[i] = futures[i].get();
  }
  return out;
}

template <class F>
auto call_with_deadline(F fn, std::chrono::milliseconds deadline) -> std::optional<std::invoke_result_t<F>> {
  using R = std::invoke_result_t<F>;
  std::vector<std::function<R()>> calls;
  calls.emplace_back(std::move(fn));
  return std::move(call_all_with_deadline<R>(std::move(calls), deadline).front());
}

/// Wraps `fn` so that library errors (timeouts, unavailable or misbehaving
/// providers) become an empty result instead of propagating.
template <class F>
auto guarded(F fn) {
  using R = std::invoke_result_t<F>;
  return [fn = std::move(fn)]() -> std::optional<R> {
    try {
      return fn();
    } catch (const Error&) {
      return std::nullopt;
    }
  };
}

template <class T>
std::optional<T> flatten(std::optional<std::optional<T>> v) {
  if (!v) return std::nullopt;
  return std::move(*v);
}

}  // namespace affect
