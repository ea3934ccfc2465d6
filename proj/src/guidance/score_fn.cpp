#include "afil/guidance/score_fn.hpp"

#include "afil/core/error.hpp"

namespace afil::guidance {

generative::ScoreFn make_score_fn(const models::DagModel& model, const models::ConditionBatch& cond,
                                  const GuidanceSpec& spec, models::Mode sampler_mode,
                                  GuidanceTrace* trace) {
  spec.validate();
  const auto& cfg = model.config();
  if (cfg.process.mode != sampler_mode)
    throw ConfigError("model predicts for " + models::to_string(cfg.process.mode) +
                      " but the sampler runs " + models::to_string(sampler_mode));
  if (spec.needs_failure_head() && !model.failure_head_trained())
    throw ConfigError("guidance '" + to_string(spec.kind) + "' needs a trained failure head");
  if (!cond.observation.defined() || cond.observation.rank() != 2 ||
      cond.observation.dim(1) != cfg.obs_dim || !cond.task.defined() || cond.task.rank() != 2 ||
      cond.task.dim(1) != cfg.task_dim || cond.task.dim(0) != cond.observation.dim(0))
    throw ConfigError("conditioning does not match model dimensions");

  const std::size_t rows = cond.size();
  if (trace) trace->reset(rows);

  return [&model, cond, spec, trace, rows](const Tensor& noisy, int step) -> Tensor {
    numerics::NoGradGuard no_grad;
    const std::vector<int> steps(rows, step);
    const Tensor h = model.encode(cond, steps);
    const Tensor eps_s = model.predict_from_features(models::Head::success, h, noisy);
    if (spec.kind == GuidanceKind::none) return eps_s;
    const Tensor eps_f = model.predict_from_features(models::Head::failure, h, noisy);

    auto log_constant = [&](double lam) {
      if (!trace) return;
      for (std::size_t r = 0; r < rows; ++r) trace->lambda[r].push_back(lam);
    };
    switch (spec.kind) {
      case GuidanceKind::cfg:
        log_constant(spec.lambda);
        return cfg_combine(eps_f, eps_s, spec.lambda);
      case GuidanceKind::np:
        log_constant(spec.lambda);
        return np_combine(eps_s, eps_f, spec.lambda);
      case GuidanceKind::static_fi:
        log_constant(spec.lambda);
        return fi_combine_static(eps_s, eps_f, spec.lambda);
      case GuidanceKind::adaptive_fi: {
        std::vector<double> lams, coss;
        Tensor out = fi_combine_adaptive(eps_s, eps_f, spec.alpha, spec.cos_floor, &lams, &coss);
        if (trace)
          for (std::size_t r = 0; r < rows; ++r) {
            trace->lambda[r].push_back(lams[r]);
            trace->cosine[r].push_back(coss[r]);
          }
        return out;
      }
      case GuidanceKind::none:
        break;
    }
    return eps_s;
  };
}

}  // namespace afil::guidance
