#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace clare::protocol {

/// Disjoint class groups in the order they are learned.
struct Schedule {
    std::vector<std::vector<std::int32_t>> groups;
    std::size_t group_size = 0;

    std::size_t class_count() const;
    bool operator==(const Schedule&) const = default;
};

/// Consecutive chunks of `group_size` classes in ascending id order; the
/// last chunk is shorter when the size does not divide the class count.
Schedule build_schedule(std::span<const std::int32_t> class_ids, std::size_t group_size);

} // namespace clare::protocol
