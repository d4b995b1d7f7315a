#pragma once

#include <map>
#include <string>

#include "opnn/tensor.hpp"

namespace opnn {

// Named, shaped parameter collection. std::map keeps iteration lexicographic
// and therefore deterministic across builds of the same configuration.
using ModelParams = std::map<std::string, Tensor>;

std::size_t parameter_count(const ModelParams& params);
void zero_grads(ModelParams& params);

}  // namespace opnn
