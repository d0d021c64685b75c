#pragma once

// The three second-order demonstration systems with their decompositions
// and hand-derived invariant sets.
//
//   example1:  x1' = -b sin x1 - a x1,            x2' = -b sin x2 - a x2
//   example2:  x1' = -a1 sin x1 - b sin(x1 - x2), x2' = -a2 sin x2 - b sin(x2 - x1)
//   example3:  x1' = -a x2 sin x1,                x2' = -b x2 + c cos x1

#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "roa/dynsys.hpp"
#include "roa/invariance.hpp"
#include "roa/polytope.hpp"

namespace roa::examples {

using Params = std::map<std::string, double>;

struct ExampleSystem {
  std::string name;
  Params params;
  DecomposedField field;
  std::vector<IndividualInvariantSet> omega_sets;  // paired with field parts
  CandidateRoa omega_e;
};

class UnknownExample : public Error {
 public:
  using Error::Error;
};

std::vector<std::string> example_names();

/// Default parameters for a named example.
Params default_params(std::string_view name);

/// Builds the example, applying overrides on top of the defaults. Unknown
/// names, unknown parameters and non-positive values are rejected.
ExampleSystem make_example(std::string_view name, const Params& overrides = {});

struct GridSample {
  State x;
  State f;
};

/// Row-major grid over the box (last coordinate fastest) of states and
/// composite-field values. resolution >= 2 points per axis.
std::vector<GridSample> vector_field_grid(const ExampleSystem& sys, const Box& box, std::size_t resolution);
std::vector<GridSample> vector_field_grid(const VectorField& field, const Box& box, std::size_t resolution);

/// CSV with header x1,..,xn,f1,..,fn.
void write_grid_csv(std::ostream& os, const std::vector<GridSample>& grid);

}  // namespace roa::examples
