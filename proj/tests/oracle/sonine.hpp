#pragma once

// Independent Sonine-Galerkin estimate of the hard-sphere transport coefficients.
// Uses the weak form of the linearized operator evaluated by its own quadrature
// (no velocity grid, no assembled kernel).
namespace oracle {

struct SonineResult {
  double value[3];  // with 1, 2, 3 Sonine terms
};

SonineResult sonine_viscosity();     // mu* = <A_12, L^{-1} A_12>
SonineResult sonine_conductivity();  // kappa* = <B_1, L^{-1} B_1>

}  // namespace oracle
