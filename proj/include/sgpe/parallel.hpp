#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace sgpe {

/// Number of worker threads used by ensemble helpers. 0 means hardware concurrency.
void set_thread_count(unsigned n);
unsigned thread_count();

/**
 * Evaluates fn(i) for i in [0,n) on up to thread_count() threads and returns
 * the results in index order. Results never depend on the scheduling, so any
 * reduction over the returned vector is deterministic.
 */
template <class Fn>
auto parallel_map(std::size_t n, Fn&& fn) -> std::vector<decltype(fn(std::size_t{}))>
{
	using R = decltype(fn(std::size_t{}));
	std::vector<R> out(n);
	unsigned nt = std::min<std::size_t>(thread_count(), n);
	if (nt <= 1)
	{
		for (std::size_t i = 0; i < n; ++i)
			out[i] = fn(i);
		return out;
	}
	std::exception_ptr err;
	std::mutex err_mutex;
	std::vector<std::thread> pool;
	pool.reserve(nt);
	for (unsigned t = 0; t < nt; ++t)
		pool.emplace_back([&, t] {
			for (std::size_t i = t; i < n; i += nt)
			{
				try
				{
					out[i] = fn(i);
				}
				catch (...)
				{
					std::lock_guard lock(err_mutex);
					if (!err)
						err = std::current_exception();
				}
			}
		});
	for (auto& th : pool)
		th.join();
	if (err)
		std::rethrow_exception(err);
	return out;
}

} // namespace sgpe
