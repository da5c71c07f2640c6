#pragma once

#include <cstddef>

namespace smr {

// Memory source for reclaimable nodes. free_batch() hands every node back
// through deallocate(); tests plug in a quarantining allocator here.
class NodeAllocator {
 public:
  virtual ~NodeAllocator() = default;
  virtual void* allocate(std::size_t bytes) = 0;
  virtual void deallocate(void* p) noexcept = 0;
};

class MallocAllocator final : public NodeAllocator {
 public:
  void* allocate(std::size_t bytes) override;
  void deallocate(void* p) noexcept override;
};

NodeAllocator& default_allocator();

}  // namespace smr
