#pragma once

#include <cstddef>
#include <functional>

namespace htlab {

// Runs work(chunk_index, begin, end) over fixed-size chunks of [0, n_items).
// The chunk layout depends only on n_items and chunk_size, never on the
// thread count, so writes into per-index slots are bit-reproducible.
void parallel_chunks(std::size_t n_items, std::size_t chunk_size, int threads,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& work);

int resolve_threads(int requested);

}  // namespace htlab
