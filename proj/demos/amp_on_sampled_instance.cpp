// Samples one finite instance, runs message passing on it, and compares the
// realized per-group estimation error to the exact asymptotic limit.

#include <cstdio>

#include "blockspike/algorithms.hpp"
#include "blockspike/limits.hpp"
#include "blockspike/metrics.hpp"
#include "blockspike/model.hpp"

using namespace blockspike;

int main() {
  const double alpha = 0.25, lambda = 2.0;
  const long N = 2048;
  const ProblemSpec spec = make_two_group(alpha, lambda, Prior::rademacher(), Prior::rademacher());

  const InstanceSpec is = make_instance(spec, N, 0xd0d0);
  const Observations obs = sample_instance(is);
  const SymObservations sym = symmetrize(obs, spec);

  AmpOptions opts;
  const AmpResult res = amp_groupwise(sym, spec, N, opts);
  std::printf("message passing %s after %d iterations\n",
              res.converged ? "converged" : "did not converge", res.iterations);

  const SaddlePoint sp = solve_limit(spec);
  const MmseResult mm = mmse_from_saddle(spec, sp);
  for (int k = 0; k < spec.K(); ++k) {
    const double realized = diag_mse_direct(obs.truth[k], res.estimate.xhat[k]);
    std::printf("group %d: realized diag mse %.4f, asymptotic limit %.4f\n", k, realized,
                mm.block_mmse(k, k));
  }
  std::printf("cross block: realized %.4f, limit %.4f\n",
              block_mse_direct(obs.truth[0], obs.truth[1], res.estimate.xhat[0],
                               res.estimate.xhat[1]),
              mm.block_mmse(0, 1));
  return 0;
}
