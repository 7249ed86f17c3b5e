#include "clare/protocol/schedule.hpp"

#include "clare/errors.hpp"

#include <algorithm>
#include <string>

namespace clare::protocol {

std::size_t Schedule::class_count() const {
    std::size_t n = 0;
    for (const auto& g : groups) {
        n += g.size();
    }
    return n;
}

Schedule build_schedule(std::span<const std::int32_t> class_ids, std::size_t group_size) {
    if (group_size == 0) {
        throw ConfigError("group size must be at least 1");
    }
    if (class_ids.empty()) {
        throw ConfigError("schedule needs at least one class");
    }
    std::vector<std::int32_t> ids(class_ids.begin(), class_ids.end());
    std::sort(ids.begin(), ids.end());
    if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
        throw ConfigError("duplicate class id in schedule input");
    }
    Schedule schedule;
    schedule.group_size = group_size;
    for (std::size_t start = 0; start < ids.size(); start += group_size) {
        const std::size_t end = std::min(ids.size(), start + group_size);
        schedule.groups.emplace_back(ids.begin() + static_cast<std::ptrdiff_t>(start),
                                     ids.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return schedule;
}

} // namespace clare::protocol
