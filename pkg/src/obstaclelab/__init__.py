"""Obstacle problems with measure data: potentials, P1 grids, complementarity solvers and studies."""

from obstaclelab.grid import (
    CoefficientField,
    EllipticOperator,
    Grid,
    NodalFunction,
    assemble,
    build_grid,
    check_green_bounds,
    discrete_green,
    duality_check,
    estimate_capacity,
    load_vector,
    solve_dirichlet,
    truncation_energy,
)
from obstaclelab.measure import Atom, CurvePiece, Density, Measure, capacity_decompose, jordan_decompose
from obstaclelab.obstacle import (
    Obstacle,
    complementarity_residual,
    condition_check,
    enumerate_lcp,
    minimality_probe,
    solve_lcp,
    solve_naive,
    solve_op,
)
from obstaclelab.potentials import ball_average_potential, fundamental_solution, potential, ratio_scan

__all__ = [
    "Atom",
    "CoefficientField",
    "CurvePiece",
    "Density",
    "EllipticOperator",
    "Grid",
    "Measure",
    "NodalFunction",
    "Obstacle",
    "assemble",
    "ball_average_potential",
    "build_grid",
    "capacity_decompose",
    "check_green_bounds",
    "complementarity_residual",
    "condition_check",
    "discrete_green",
    "duality_check",
    "enumerate_lcp",
    "estimate_capacity",
    "fundamental_solution",
    "jordan_decompose",
    "load_vector",
    "minimality_probe",
    "potential",
    "ratio_scan",
    "solve_dirichlet",
    "solve_lcp",
    "solve_naive",
    "solve_op",
    "truncation_energy",
]
