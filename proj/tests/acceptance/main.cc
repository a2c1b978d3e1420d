// Prints one line per acceptance criterion. Exit status is the number of
// failed criteria.
#include <cstdio>
#include <cstring>
#include <exception>
#include <string>

#include "harness.h"

using polargs::acceptance::Outcome;

namespace {

struct Criterion {
  int id;
  const char* name;
  double time_limit_s;
  Outcome (*run)();
};

const Criterion kCriteria[] = {
    {1, "stokes_round_trip", 1.0, polargs::acceptance::StokesRoundTrip},
    {2, "ambiguity_resolution", 10.0, polargs::acceptance::AmbiguityResolution},
    {3, "densification_ablation", 120.0, polargs::acceptance::DensificationAblation},
    {4, "consistency_filtering", 30.0, polargs::acceptance::ConsistencyFiltering},
    {5, "photometric_correction", 120.0, polargs::acceptance::PhotometricCorrection},
    {6, "gradient_check", 30.0, polargs::acceptance::GradientCheck},
    {7, "end_to_end_geometry", 600.0, polargs::acceptance::EndToEnd},
    {8, "propagation_equivalence", 1.0, polargs::acceptance::PropagationEquivalence},
    {9, "determinism", 1200.0, polargs::acceptance::Determinism},
};

}  // namespace

int main(int argc, char** argv) {
  int failed = 0;
  for (const Criterion& c : kCriteria) {
    if (argc > 1) {
      bool selected = false;
      for (int i = 1; i < argc; ++i) selected |= std::to_string(c.id) == argv[i];
      if (!selected) continue;
    }
    polargs::acceptance::Stopwatch clock;
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double t = clock.seconds();
    const bool in_time = t <= c.time_limit_s;
    const bool pass = out.pass && in_time;
    failed += !pass;
    std::printf("%s %d %s: %s; time %.2f s (limit %.0f s)\n", pass ? "PASS" : "FAIL", c.id,
                c.name, out.detail.c_str(), t, c.time_limit_s);
    std::fflush(stdout);
  }
  return failed;
}
