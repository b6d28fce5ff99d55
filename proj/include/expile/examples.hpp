#pragma once
// Built-in specimen configurations exercised by the tests, the golden files
// and the experiment runner. Each id maps to a fully finalized spec plus the
// run gap q_n used by the declustering estimators.

#include "expile/observable.hpp"

#include <string>
#include <vector>

namespace expile {

const std::vector<std::string>& example_ids();
bool is_example_id(const std::string& id);

// finalized spec for a built-in id; throws SpecError on unknown ids
MaximalSetSpec example_spec(const std::string& id);

// declustering run gap. Fixed per id except the countable specimen, where it
// grows like ceil(log n) together with the truncation depth N(n).
long long example_run_gap(const std::string& id, long long n);

// truncation depth for countable mode: N(n) = ceil(log n), at least 1
long long countable_truncation(long long n);

} // namespace expile
