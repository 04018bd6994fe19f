#pragma once

#include "admg/bartlett.hpp"
#include "admg/coefficients.hpp"
#include "admg/data.hpp"
#include "admg/graph.hpp"
#include "admg/rng.hpp"

namespace admg {

/// n draws of every node from z = B z + mean + eps, eps ~ N(0, V); one row per draw.
Matrix simulate(const Theta& theta, std::size_t n, RngStream& rng);
/// The observed columns of simulate(), bound to g.
Dataset simulate_dataset(const Admg& g, const Theta& theta, std::size_t n, RngStream& rng);

/// A graph with generating parameters and the coefficient prior that goes
/// with it (fixed loadings where the model needs them for scale).
struct SyntheticModel {
  Admg graph;
  Theta theta;
  BPrior prior;
};

/// Two-node bow Y2 -> Y3, Y2 <-> Y3.
SyntheticModel bow_model();
/// Five nodes: Y1 -> Y2 -> Y4, Y3 -> Y5, Y1 <-> Y3, Y4 <-> Y5.
SyntheticModel recovery_model();
/// Three latent factors (xi, eta1, eta2) measured by I1-I3 and D1-D8, with
/// correlated errors among the D indicators. One loading per factor is
/// fixed at 1.
SyntheticModel factor_model();
/// Random ADMG with coefficients and a diagonally dominant V.
SyntheticModel random_model(std::size_t q, double p_directed, double p_bidirected, RngStream& rng);

}  // namespace admg
