#include <benchmark/benchmark.h>

// The distro's static benchmark_main carries LTO bytecode from another
// compiler version, so the entry point is built here.
BENCHMARK_MAIN();
