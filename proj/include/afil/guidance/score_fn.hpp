#pragma once

#include <vector>

#include "afil/generative/sampler.hpp"
#include "afil/guidance/combine.hpp"
#include "afil/models/dag_model.hpp"

namespace afil::guidance {

// Per-row record of the scale applied at each sampler call (and, for the
// adaptive kind, the cosine it came from).
struct GuidanceTrace {
  std::vector<std::vector<double>> lambda;
  std::vector<std::vector<double>> cosine;

  void reset(std::size_t rows) {
    lambda.assign(rows, {});
    cosine.assign(rows, {});
  }
};

// Builds the sampler callback for `model` under `spec`, closed over a fixed
// batch of conditionings. `none` queries the success head only; every other
// kind evaluates the shared trunk once and then both heads:
//   cfg        cfg_combine(eps_fail, eps_succ, lambda)
//   np         np_combine(eps_succ, eps_fail, lambda)
//   static_fi  fi_combine_static(eps_succ, eps_fail, lambda)
//   adaptive   fi_combine_adaptive(eps_succ, eps_fail, alpha, cos_floor)
// Incompatibilities (bad spec, sampler mode differing from the model's, an
// untrained failure head, conditioning of the wrong width) raise ConfigError
// here rather than mid-rollout. The model must outlive the callback.
generative::ScoreFn make_score_fn(const models::DagModel& model, const models::ConditionBatch& cond,
                                  const GuidanceSpec& spec, models::Mode sampler_mode,
                                  GuidanceTrace* trace = nullptr);

}  // namespace afil::guidance
