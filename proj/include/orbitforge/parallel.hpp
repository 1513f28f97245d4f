#pragma once

namespace orbitforge {

// Worker count for the OpenMP kernels: min(hardware, ORBITFORGE_THREADS).
// Returns 1 when built without OpenMP.
int thread_count();

// Apply thread_count() to the OpenMP runtime. Called once by the kernels;
// cheap and idempotent.
void configure_threads();

}  // namespace orbitforge
