#pragma once

// Deterministic fork/join over fixed-size chunks. The chunk layout depends only
// on the problem size, never on the worker count, so any reduction that
// combines per-chunk partials in chunk order is bit-identical for every
// thread setting.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace sct::parallel {

namespace detail {
inline std::atomic<unsigned> thread_count{1};
inline thread_local bool inside_region = false;
}  // namespace detail

inline void set_threads(unsigned k) { detail::thread_count.store(std::max(1u, k)); }
inline unsigned threads() { return detail::thread_count.load(); }

inline constexpr std::size_t default_chunk = 4096;

/// Calls body(chunk_index, begin, end) for every chunk of [0, n). Nested calls
/// from inside a worker run serially.
template <class Body>
void for_chunks(std::size_t n, std::size_t chunk, Body&& body) {
  if (n == 0) return;
  chunk = std::max<std::size_t>(1, chunk);
  const std::size_t chunks = (n + chunk - 1) / chunk;
  const std::size_t workers =
      detail::inside_region ? 1 : std::min<std::size_t>(threads(), chunks);

  auto run_chunk = [&](std::size_t c) {
    std::size_t b = c * chunk;
    body(c, b, std::min(n, b + chunk));
  };
  if (workers <= 1) {
    for (std::size_t c = 0; c < chunks; ++c) run_chunk(c);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(workers);
  auto worker = [&](std::size_t w) {
    detail::inside_region = true;
    try {
      for (std::size_t c = next++; c < chunks; c = next++) run_chunk(c);
    } catch (...) {
      errors[w] = std::current_exception();
    }
    detail::inside_region = false;
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker, w);
  worker(0);
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

/// body(i) for i in [0, n); each index is handled by exactly one worker.
template <class Body>
void for_each_index(std::size_t n, Body&& body, std::size_t chunk = 1) {
  for_chunks(n, chunk, [&](std::size_t, std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) body(i);
  });
}

/// Sum of term(i) over [0, n) accumulated per chunk, then across chunks in
/// chunk order.
template <class Term>
double chunked_sum(std::size_t n, Term&& term, std::size_t chunk = default_chunk) {
  if (n == 0) return 0.0;
  const std::size_t chunks = (n + chunk - 1) / chunk;
  std::vector<double> partial(chunks, 0.0);
  for_chunks(n, chunk, [&](std::size_t c, std::size_t b, std::size_t e) {
    double s = 0.0;
    for (std::size_t i = b; i < e; ++i) s += term(i);
    partial[c] = s;
  });
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

}  // namespace sct::parallel
