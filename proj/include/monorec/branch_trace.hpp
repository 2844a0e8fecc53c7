#pragma once

#include <cstdint>
#include <vector>

#include "monorec/parallel.hpp"

namespace monorec {

/// Record of the discrete decisions (bilinear cells, argmin picks, abs signs)
/// taken while evaluating a loss. Two evaluations with equal traces lie on
/// the same smooth piece of the functional.
struct BranchTrace {
  std::vector<std::int64_t> events;
  bool operator==(const BranchTrace&) const = default;
};

namespace detail {
inline thread_local BranchTrace* active_trace = nullptr;
}

inline void note_branch(std::int64_t value) {
  if (detail::active_trace != nullptr) detail::active_trace->events.push_back(value);
}

inline bool tracing_branches() { return detail::active_trace != nullptr; }

/// Activates `trace` on this thread and serializes parallel_for so the event
/// order is reproducible.
class TraceScope {
 public:
  explicit TraceScope(BranchTrace& trace) : previous_(detail::active_trace) {
    detail::active_trace = &trace;
  }
  ~TraceScope() { detail::active_trace = previous_; }
  TraceScope(const TraceScope&) = delete;
  TraceScope& operator=(const TraceScope&) = delete;

 private:
  BranchTrace* previous_;
  SerialScope serial_;
};

}  // namespace monorec
