#pragma once

#include "drm/distortion.hpp"
#include "drm/estimators.hpp"

namespace drm::reference {

/// Straightforward reference implementations of the estimators, written as
/// literal piecewise integrals over the plug-in EDF and as the plain
/// order-statistics double sums. They share no code with the suffix-sum
/// production forms in estimators.cpp and exist to pin those forms down in
/// tests and benchmarks.

/// - integral_*: walks the EDF segments [R_(i), R_(i+1)) (plus the [R_(n), Mr]
///   boundary piece) and accumulates h'(1-G) grad-EDF etc. segment by segment.
Vec gradient_by_segment_integration(const SortedBatch& batch,
                                    const Distortion& g);
Mat hessian_by_segment_integration(const SortedBatch& batch,
                                   const Distortion& g);

/// - double_sum_*: the order-statistics forms with explicit prefix sums
///   sum_{j<=i} grad l_(j).
Vec gradient_by_double_sum(const SortedBatch& batch, const Distortion& g);
Mat hessian_by_double_sum(const SortedBatch& batch, const Distortion& g);

}  // namespace drm::reference
