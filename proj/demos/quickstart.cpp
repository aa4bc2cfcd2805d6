// End-to-end walkthrough: certify a stable system, roll out one trajectory,
// fit the weights from that single path, and compare against the truth.

#include <Eigen/Dense>
#include <cstdio>

#include "glds/conditioning.hpp"
#include "glds/glmtron.hpp"
#include "glds/link.hpp"
#include "glds/noise.hpp"
#include "glds/stability.hpp"
#include "glds/trajectory.hpp"

int main() {
  Eigen::MatrixXd theta_star(2, 2);
  theta_star << 0.0, 2.0, 0.1, 0.0;
  const glds::LinkFunction link = glds::LinkFunction::leaky_relu(0.5);

  const auto cert = glds::find_certificate(theta_star);
  if (!cert) {
    std::puts("no stability certificate found; aborting");
    return 1;
  }
  std::printf("certificate: rho = %.6f, effective radius = %.4f\n", cert->rho,
              cert->effective_radius);

  const int n = 4096;
  const auto traj = glds::simulate(theta_star, link, glds::NoiseModel::gaussian(2, 1.0),
                                   n, /*seed=*/42);
  const auto iso = glds::isometry_report(traj, *cert);
  std::printf("covariance eigenvalues: [%.4f, %.4f] (bounds ok: %s, %s)\n",
              iso.lambda_min, iso.lambda_max, iso.lower_ok ? "yes" : "no",
              iso.upper_ok ? "yes" : "no");

  glds::GlmtronConfig config;
  config.w_bound = 3.0;
  config.eta = glds::practical_step(traj);
  config.m = 500;
  const auto report = glds::glmtron_fit(traj, link, config, theta_star);
  std::printf("fit: %d updates, step %.4f\n", report.iterations_run, report.eta);
  std::printf("squared parameter error: %.3e\n",
              glds::parameter_error(report.theta_hat, theta_star));
  std::printf("prediction error:        %.3e\n", report.prediction_error);

  const auto ols = glds::ols_fit(traj);
  std::printf("least-squares baseline:  %.3e\n",
              glds::parameter_error(ols, theta_star));
  return 0;
}
