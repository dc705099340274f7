#ifndef DTPINN_EXPERIMENTS_HPP
#define DTPINN_EXPERIMENTS_HPP

#include <string>

namespace dtpinn {

// Scripted studies. The operator studies (depth, biharmonic) compare
// differentiation routes on random-weight networks; the remaining ids are
// training sweeps over N / p / seed for one PDE setup.
enum class StudyId {
    Depth,
    Biharmonic,
    LinearPoisson,
    NonlinearPoisson,
    Heat,
    Star,
    Fp32Dt,
};

const char* study_id_name(StudyId id);
StudyId parse_study_id(const std::string& name);

// Runs one study. `config_json` must be a JSON object ("{}" accepts all
// defaults); unknown keys are rejected. Artifacts are written under `out_dir`
// (created if needed): long-form CSVs for the operator studies, one
// record.csv + summary.json per run for the training sweeps, and always an
// aggregated report.json whose text is also returned. Failed training runs
// are recorded in the report and the sweep continues.
//
// Config keys (all optional):
//   depth       n, depths, p_values, seeds, width, timing_repeats, cloud_seed
//   biharmonic  n, depths, p_values, seeds, width, timing_repeats, cloud_seed,
//               fd_step
//   training sweeps (linear-poisson, nonlinear-poisson, heat, star, fp32-dt):
//               n_values, p_values, seeds, modes, precision, width, layers,
//               alpha, beta, error_every, stop_error, test_refine,
//               lbfgs.history, lbfgs.lr, lbfgs.max_epochs, lbfgs.wolfe_c1,
//               lbfgs.wolfe_c2; heat adds n_t; star adds star_petals,
//               star_amplitude
std::string run_study(StudyId id, const std::string& config_json,
                      const std::string& out_dir);

}  // namespace dtpinn

#endif
