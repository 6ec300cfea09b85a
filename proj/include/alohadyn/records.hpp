#ifndef ALOHADYN_RECORDS_HPP
#define ALOHADYN_RECORDS_HPP

#include <cstdint>

namespace alohadyn {

/// One measured source-destination delay.
///
/// `distance` is the Euclidean distance between the resolved endpoint nodes
/// and `path_length` the Euclidean length of the canonical fastest path. A
/// censored record carries the horizon in `delay` and is excluded from
/// means; uncensored records satisfy delay >= ceil(distance / eta).
struct DelayRecord {
    std::uint32_t replication = 0;
    double distance = 0.0;
    double path_length = 0.0;
    std::int64_t delay = 0;
    std::int32_t hops = 0;
    bool censored = false;
};

} // namespace alohadyn

#endif
