// Heap accounting by interposing the C allocator. Linked only into executables;
// library code sees it through the asw::alloc hooks.
#include <malloc.h>

#include <atomic>
#include <cerrno>
#include <cstdint>
#include <cstring>

#include "asw/bench.hpp"

extern "C" {
void* __libc_malloc(std::size_t);
void* __libc_calloc(std::size_t, std::size_t);
void* __libc_realloc(void*, std::size_t);
void* __libc_memalign(std::size_t, std::size_t);
void __libc_free(void*);
}

namespace {

std::atomic<std::int64_t> g_current{0};
std::atomic<std::int64_t> g_peak{0};
std::int64_t g_baseline = 0;

void note_alloc(void* p) {
  if (p == nullptr) return;
  const auto n = static_cast<std::int64_t>(malloc_usable_size(p));
  const std::int64_t now = g_current.fetch_add(n, std::memory_order_relaxed) + n;
  std::int64_t peak = g_peak.load(std::memory_order_relaxed);
  while (now > peak && !g_peak.compare_exchange_weak(peak, now, std::memory_order_relaxed)) {
  }
}

void note_free(void* p) {
  if (p == nullptr) return;
  g_current.fetch_sub(static_cast<std::int64_t>(malloc_usable_size(p)), std::memory_order_relaxed);
}

}  // namespace

extern "C" {

void* malloc(std::size_t n) {
  void* p = __libc_malloc(n);
  note_alloc(p);
  return p;
}

void* calloc(std::size_t count, std::size_t n) {
  void* p = __libc_calloc(count, n);
  note_alloc(p);
  return p;
}

void* realloc(void* old, std::size_t n) {
  note_free(old);
  void* p = __libc_realloc(old, n);
  if (p == nullptr && old != nullptr && n != 0) {
    note_alloc(old);  // realloc failed, old block still live
    return nullptr;
  }
  note_alloc(p);
  return p;
}

void free(void* p) {
  note_free(p);
  __libc_free(p);
}

void* memalign(std::size_t align, std::size_t n) {
  void* p = __libc_memalign(align, n);
  note_alloc(p);
  return p;
}

void* aligned_alloc(std::size_t align, std::size_t n) { return memalign(align, n); }

int posix_memalign(void** out, std::size_t align, std::size_t n) {
  if (align < sizeof(void*) || (align & (align - 1)) != 0) return EINVAL;
  void* p = memalign(align, n);
  if (p == nullptr) return ENOMEM;
  *out = p;
  return 0;
}

}  // extern "C"

namespace asw::alloc {

bool available() { return true; }

void reset_peak() {
  g_baseline = g_current.load(std::memory_order_relaxed);
  g_peak.store(g_baseline, std::memory_order_relaxed);
}

// High-water mark above the live heap at the last reset.
std::int64_t peak_bytes() { return g_peak.load(std::memory_order_relaxed) - g_baseline; }

}  // namespace asw::alloc
