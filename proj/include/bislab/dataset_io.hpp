#pragma once

#include "bislab/longtail.hpp"

#include <iosfwd>
#include <string>

namespace bislab {

// Text dump of a SyntheticData bundle:
//
//   # bislab-dataset v1
//   k,<K>
//   dim,<D>
//   labeled_counts,<N_1>,...,<N_K>
//   unlabeled_counts,<M_1>,...,<M_K>
//   test_counts,<T_1>,...,<T_K>
//   split,label,x0,...,x<D-1>
//   L,<label>,<features...>
//   U,<hidden label>,<features...>
//   T,<label>,<features...>
//
// Features use shortest round-trip decimal text, so load(save(d)) == d exactly.

void save_dataset(std::ostream& out, const SyntheticData& data);
SyntheticData load_dataset(std::istream& in);

void save_dataset_file(const std::string& path, const SyntheticData& data);
SyntheticData load_dataset_file(const std::string& path);

} // namespace bislab
