#pragma once

#include <cstdint>

#include "ranl/dataset.hpp"
#include "ranl/gradcheck.hpp"
#include "ranl/model.hpp"

namespace ranl {

// D_f=4, E=4, H=3, N=3, C=3, |W|=8, R=2.
ModelConfig tiny_config();
// D_f=6, E=5, H=4, N=5, C=4, |W|=12, R=3.
ModelConfig small_config();

// Random instance fitting `config`: Gaussian features, random attribute sets
// (frame 0 always empty), a 3-token question and a 2-token answer.
VideoInstance random_instance(const ModelConfig& config, std::uint64_t seed);

// Finite-difference check of the full training objective (task loss plus L2)
// against every model parameter, at freshly initialized weights.
GradCheckReport check_model_gradients(const ModelConfig& config, Task task, std::uint64_t seed, double eps,
                                      double tol, double lambda = 1e-4);

}  // namespace ranl
