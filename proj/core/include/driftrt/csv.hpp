#pragma once

#include <string>

#include "driftrt/model.hpp"

namespace driftrt {

/// Writes one row per (subject, time_index, outcome) cell:
///   subject,time_index,outcome,y,r_star,crossed,v1_0,...,v2_0,...
/// Indices are 1-based; numbers carry 17 significant digits so a read-back
/// reproduces every double bit-for-bit. With censor_noncrossed, r_star is
/// left empty on cells that did not cross (such files are for external
/// consumers; the likelihood reader rejects them).
void write_dataset_csv(const Dataset& dataset, const std::string& path,
                       bool censor_noncrossed = false);

/// Parses a dataset written by write_dataset_csv. Rows must be in canonical
/// (subject, time_index, outcome) order and agree with `spec`; u1/u2 index
/// maps are attached to every subject slice. Errors name the offending line.
Dataset read_dataset_csv(const std::string& path, const ModelSpec& spec,
                         const Eigen::VectorXi& u1_index, const Eigen::VectorXi& u2_index);

}  // namespace driftrt
