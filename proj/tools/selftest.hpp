#pragma once

#include <ostream>

namespace pdrs {

/* Built-in oracle suites: sparsity-box projection against exhaustive support
 * enumeration, merit-form equivalence on random tuples, and the alpha = 2
 * reduction to classical Douglas-Rachford for each family. Returns the number
 * of failed suites and prints one line per suite. */
int run_selftest(std::ostream& os);

}  // namespace pdrs
