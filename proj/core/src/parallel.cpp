#include "rcmlab/parallel.hpp"

namespace rcmlab {

unsigned effective_workers(unsigned requested) noexcept {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

}  // namespace rcmlab
