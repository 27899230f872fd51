#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "newscnn/embeddings.hpp"
#include "newscnn/network.hpp"

namespace newscnn {

struct GradcheckOptions {
  std::uint64_t seed = 0;
  int n_configs = 20;
  double step = 1e-5;         // central-difference step
  double tolerance = 1e-4;    // max relative error to pass
  double denominator_floor = 1e-6;
  // Test hook: applied to the analytic gradients before comparison, so a
  // deliberately broken gradient can be shown to fail the check.
  std::function<void(Gradients&)> tamper;
};

struct GradcheckCase {
  int index = 0;
  ModelConfig config;
  EmbeddingMode mode = EmbeddingMode::kSelfLearnt;
  int label = 0;
  std::size_t checked = 0;   // coordinates compared
  std::size_t skipped = 0;   // coordinates whose perturbation crossed a relu/max-pool kink
  double max_rel_error = 0.0;
  std::string worst;         // "<tensor>[<index>]"
};

struct GradcheckReport {
  std::vector<GradcheckCase> cases;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

// Compares backward() against central finite differences of the per-sample
// loss on `n_configs` random toy networks (dropout off, double precision).
// Every model parameter and every trainable embedding coordinate used by the
// input is checked, except coordinates where the +/- perturbation changes the
// relu or max-pool selection pattern (the loss is not differentiable there).
GradcheckReport run_gradcheck(const GradcheckOptions& options);

// relative error |a - n| / max(|a|, |n|, floor)
double relative_error(double analytic, double numeric, double floor);

std::string gradcheck_to_json(const GradcheckReport& report);

}  // namespace newscnn
