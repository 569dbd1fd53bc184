#include "crosslayer/allocation.hpp"

#include <algorithm>

#include "crosslayer/errors.hpp"

namespace crosslayer {

Allocation::Allocation(int clients, int rbs)
    : num_clients(clients),
      num_rbs(rbs),
      owner(rbs, -1),
      rb_sets(clients),
      mcs_level(clients, 0),
      capacity_bytes(clients, 0),
      min_cqi(clients, 16),
      satisfied(clients, 0) {}

long long Allocation::capacity_with(int k, int n, const CqiGrid& grid) const {
    const int worst = std::min(min_cqi[k], grid.at(k, n));
    const int level = mcs::max_mcs_for_cqi(worst);
    return static_cast<long long>(rb_sets[k].size() + 1) * mcs::rb_capacity(level);
}

void Allocation::assign(int k, int n, const CqiGrid& grid) {
    if (owner[n] != -1) throw ValidationError("allocation: RB already assigned");
    owner[n] = k;
    rb_sets[k].insert(std::lower_bound(rb_sets[k].begin(), rb_sets[k].end(), n), n);
    min_cqi[k] = std::min(min_cqi[k], grid.at(k, n));
    mcs_level[k] = mcs::max_mcs_for_cqi(min_cqi[k]);
    capacity_bytes[k] = static_cast<long long>(rb_sets[k].size()) * mcs::rb_capacity(mcs_level[k]);
}

long long Allocation::total_capacity() const {
    long long sum = 0;
    for (long long c : capacity_bytes) sum += c;
    return sum;
}

} // namespace crosslayer
