#pragma once

namespace rfc::parallel {

/// Number of worker threads used by the OpenMP kernels. Results never depend
/// on this value: work is partitioned per tree / per instance / per model and
/// reduced in index order.
int threads();

/// n <= 0 restores the OpenMP default.
void set_threads(int n);

}  // namespace rfc::parallel
